//! Black-box policies: anything that maps an [`Observation`] to a
//! [`ControlAction`].

mod baseline;
mod mlp;

pub use baseline::{baseline_act, BaselineParams, BaselinePolicy};
pub use mlp::{load_weights, mlp_act, save_weights, Activation, DenseLayer, MlpPolicy, MlpWeights, PolicyError};

use crate::sim::{ControlAction, Observation};

/// A control policy under analysis.
///
/// The harness clones a fresh instance for every episode and calls
/// [`Policy::reset`] before the first step.
pub trait Policy: Send + Sync {
    fn act(&mut self, observation: &Observation) -> ControlAction;

    fn reset(&mut self) {}

    /// Flattened observation length the policy requires, if fixed.
    fn input_len(&self) -> Option<usize> {
        None
    }

    fn name(&self) -> String;

    fn clone_box(&self) -> Box<dyn Policy>;
}

impl Clone for Box<dyn Policy> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Outputs zero acceleration forever.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPolicy;

impl Policy for ZeroPolicy {
    fn act(&mut self, _observation: &Observation) -> ControlAction {
        ControlAction::zero()
    }

    fn name(&self) -> String {
        "zero".into()
    }

    fn clone_box(&self) -> Box<dyn Policy> {
        Box::new(*self)
    }
}
