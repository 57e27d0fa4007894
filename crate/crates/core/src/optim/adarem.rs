//! The resilient momentum-guided adaptive gradient method.
//!
//! The method keeps an exponential moving average `m` of past gradients and
//! treats it as the update trend of each parameter. Each step scales the
//! base learning rate per coordinate by
//!
//! ```text
//! b_i = g_i * m_i / (|g_i| * max|m| + eps)      in [-1, 1]
//! a_i = 1 + lambda^t * b_i                       in [1 - lambda^t, 1 + lambda^t]
//! ```
//!
//! so coordinates whose gradient agrees with their trend are accelerated and
//! coordinates moving against it are damped, without ever flipping the sign
//! of the update. The `a` bound keeps every per-coordinate rate within a
//! factor-of-two band of the base rate, which is what lets the method run at
//! plain-SGD learning rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{global_max_abs, group_max_abs, GradVector, ParamVector};
use crate::project::FeasibleSet;

use super::Optimizer;

/// When the damping factor `lambda^t` advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaCadence {
    PerStep,
    PerEpoch,
}

/// Scope of the `max|m|` normalizer in the coefficient denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxScope {
    Global,
    PerGroup,
}

/// Hyperparameters of the adaptive method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaRemConfig {
    pub base_lr: f64,
    pub beta: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub lambda_cadence: LambdaCadence,
    pub max_scope: MaxScope,
}

impl Default for AdaRemConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.4,
            beta: 0.999,
            lambda: 0.999,
            epsilon: 1e-8,
            weight_decay: 3e-4,
            lambda_cadence: LambdaCadence::PerEpoch,
            max_scope: MaxScope::PerGroup,
        }
    }
}

impl AdaRemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) {
            return Err(Error::Config(format!(
                "base_lr must be positive, got {}",
                self.base_lr
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!(
                "beta must be in [0, 1), got {}",
                self.beta
            )));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::Config(format!(
                "lambda must be in [0, 1), got {}",
                self.lambda
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config(format!(
                "weight_decay must be nonnegative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// Mutable per-run state: the gradient EMA, the step counter, and the
/// current damping power.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaRemState {
    m: Vec<f64>,
    step: usize,
    lambda_pow: f64,
    epoch: usize,
}

impl AdaRemState {
    /// Fresh state with zero momentum and `lambda^0 = 1`.
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            step: 0,
            lambda_pow: 1.0,
            epoch: 0,
        }
    }

    pub fn momentum(&self) -> &[f64] {
        &self.m
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn lambda_pow(&self) -> f64 {
        self.lambda_pow
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }
}

/// Per-coordinate adjustment: returns `(b, a)` where `b` is the normalized
/// gradient/trend alignment and `a = 1 + lambda_pow * b` multiplies the base
/// rate. `eps > 0` guards the denominator, so the result is always finite
/// and `b` stays in `[-1, 1]`.
pub fn adjustment_coeff(g: f64, m: f64, max_abs_m: f64, eps: f64, lambda_pow: f64) -> (f64, f64) {
    debug_assert!(eps > 0.0);
    debug_assert!(max_abs_m >= m.abs());
    let b = g * m / (g.abs() * max_abs_m + eps);
    let a = 1.0 + lambda_pow * b;
    (b, a)
}

/// Exponential moving average update `m <- beta * m + (1 - beta) * g`.
pub fn momentum_update(m: &[f64], g: &[f64], beta: f64) -> Result<Vec<f64>> {
    if m.len() != g.len() {
        return Err(Error::Dimension {
            expected: m.len(),
            got: g.len(),
        });
    }
    Ok(m.iter()
        .zip(g)
        .map(|(&mi, &gi)| beta * mi + (1.0 - beta) * gi)
        .collect())
}

/// The optimizer: configuration plus owned state.
#[derive(Debug, Clone)]
pub struct AdaRem {
    cfg: AdaRemConfig,
    state: AdaRemState,
    last_rates: Vec<f64>,
}

impl AdaRem {
    pub fn new(cfg: AdaRemConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: AdaRemState::new(dim),
            last_rates: vec![0.0; dim],
        })
    }

    pub fn config(&self) -> &AdaRemConfig {
        &self.cfg
    }

    pub fn state(&self) -> &AdaRemState {
        &self.state
    }

    /// Per-coordinate max|m| according to the configured scope, materialized
    /// as one value per coordinate.
    fn max_abs_momentum(&self, theta: &ParamVector) -> Result<Vec<f64>> {
        match self.cfg.max_scope {
            MaxScope::Global => {
                let mx = global_max_abs(&self.state.m);
                Ok(vec![mx; self.state.m.len()])
            }
            MaxScope::PerGroup => {
                let gm = group_max_abs(&self.state.m, theta.group_ids())?;
                Ok(theta
                    .group_ids()
                    .iter()
                    .map(|&gid| gm.for_group(gid))
                    .collect())
            }
        }
    }

    /// One update of the parameters. The parameter update uses the momentum
    /// accumulated from gradients strictly before this step; the momentum is
    /// refreshed from `grad` only afterwards.
    pub fn adarem_step(
        &mut self,
        theta: &ParamVector,
        grad: &GradVector,
        base_lr: f64,
        feasible: &FeasibleSet,
    ) -> Result<ParamVector> {
        let n = theta.len();
        if grad.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: grad.len(),
            });
        }
        if !grad.is_finite() {
            return Err(Error::Numeric {
                step: self.state.step,
                msg: "non-finite gradient".into(),
            });
        }

        let max_abs = self.max_abs_momentum(theta)?;
        let gamma = self.cfg.weight_decay;
        let mut next = Vec::with_capacity(n);
        #[allow(clippy::needless_range_loop)] // four parallel arrays
        for i in 0..n {
            let g = grad.values()[i];
            let (_, a) = adjustment_coeff(
                g,
                self.state.m[i],
                max_abs[i],
                self.cfg.epsilon,
                self.state.lambda_pow,
            );
            let rate = a * base_lr;
            self.last_rates[i] = rate;
            let mut v = theta.values()[i] - rate * g;
            if gamma != 0.0 {
                v -= base_lr * gamma * theta.values()[i];
            }
            next.push(v);
        }
        feasible.clamp_in_place(&mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                step: self.state.step,
                msg: "non-finite parameter after update".into(),
            });
        }

        self.state.m = momentum_update(&self.state.m, grad.values(), self.cfg.beta)?;
        self.state.step += 1;
        theta.with_values(next)
    }

    /// Advances `lambda^t` according to the configured cadence.
    pub fn advance_lambda(&mut self, epoch_boundary: bool) {
        match self.cfg.lambda_cadence {
            LambdaCadence::PerStep => {
                self.state.lambda_pow *= self.cfg.lambda;
            }
            LambdaCadence::PerEpoch => {
                if epoch_boundary {
                    self.state.lambda_pow *= self.cfg.lambda;
                    self.state.epoch += 1;
                }
            }
        }
    }
}

impl Optimizer for AdaRem {
    fn step(
        &mut self,
        theta: &ParamVector,
        grad: &GradVector,
        base_lr: f64,
        feasible: &FeasibleSet,
    ) -> Result<ParamVector> {
        self.adarem_step(theta, grad, base_lr, feasible)
    }

    fn last_rates(&self) -> &[f64] {
        &self.last_rates
    }

    fn advance_lambda(&mut self, epoch_boundary: bool) {
        AdaRem::advance_lambda(self, epoch_boundary)
    }
}
