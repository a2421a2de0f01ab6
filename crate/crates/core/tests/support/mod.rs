//! Helpers shared by integration test targets. Each target uses a subset.
#![allow(dead_code)]

pub mod oracles;
pub mod synth;
pub mod uca_suite;
