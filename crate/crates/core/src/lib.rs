//! Adaptive gradient optimization with resilience and momentum.
//!
//! The library implements a family of optimizers whose per-coordinate
//! learning rates follow the agreement between the current gradient and the
//! parameter's past update trend, a spherical variant for scale-invariant
//! objectives, the oscillation metric used to compare trajectories, and
//! executable verifiers for the method's sublinear regret guarantee.
//!
//! Modules:
//! - [`params`]: flat parameter/gradient vectors and group-wise statistics.
//! - [`project`]: feasible sets and the weighted metric projection.
//! - [`optim`]: the adaptive method and five baseline optimizers.
//! - [`sphere`]: spherical optimization, the sphere-rate schedule, and
//!   scale-invariance checks.
//! - [`problems`]: analytic test objectives with a finite-difference oracle.
//! - [`metrics`]: trajectory recording, the oscillation metric, regret.
//! - [`theory`]: closed-form bounds and the regret-bound verifier.
//! - [`schedule`]: base learning-rate schedules.

// validations use `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod metrics;
pub mod optim;
pub mod params;
pub mod problems;
pub mod project;
pub mod schedule;
pub mod sphere;
pub mod theory;

pub use error::{Error, Result};
pub use optim::{
    AdaRem, AdaRemConfig, BaselineConfig, BaselineKind, BaselineOptimizer, LambdaCadence,
    MaxScope, Optimizer,
};
pub use params::{GradVector, ParamVector};
pub use project::FeasibleSet;
pub use sphere::{AdaRemSphere, SphereState};
