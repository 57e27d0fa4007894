//! Optimizer contract, the resilient momentum-guided adaptive method, and
//! the baseline optimizers used for comparisons.

mod adarem;
mod baselines;

pub use adarem::{
    adjustment_coeff, momentum_update, AdaRem, AdaRemConfig, AdaRemState, LambdaCadence, MaxScope,
};
pub use baselines::{BaselineConfig, BaselineKind, BaselineOptimizer, BaselineState};

use crate::error::Result;
use crate::params::{GradVector, ParamVector};
use crate::project::FeasibleSet;

/// One-step optimizer interface shared by the run loop.
///
/// A step consumes the parameters by reference and returns the next iterate;
/// optimizer state (moments, counters) lives inside the implementor. The
/// per-coordinate learning rates actually applied in the last step are kept
/// for trajectory instrumentation.
pub trait Optimizer {
    fn step(
        &mut self,
        theta: &ParamVector,
        grad: &GradVector,
        base_lr: f64,
        feasible: &FeasibleSet,
    ) -> Result<ParamVector>;

    /// Per-coordinate learning rates applied by the most recent step.
    fn last_rates(&self) -> &[f64];

    /// Schedule hook, called once per step after `step` with the epoch
    /// boundary flag. Only optimizers with a decaying adjustment use it.
    fn advance_lambda(&mut self, _epoch_boundary: bool) {}
}
