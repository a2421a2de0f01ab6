//! Simulator-backed hazard analysis for black-box drone control policies.
//!
//! [`stpa`] holds the loss/hazard/constraint/UCA model, [`sim`] the
//! point-mass world and LiDAR, [`policy`] the controllers under test,
//! [`perturb`] the fault injectors and sweep grids, and [`analysis`] the
//! episode runner, UCA detector, envelope and countermeasure logic.

// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod perturb;
pub mod policy;
pub mod sim;
pub mod stpa;
