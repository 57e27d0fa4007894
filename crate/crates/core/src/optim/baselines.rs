//! Baseline optimizers: SGD with momentum, Adam, AdamW, RMSProp, AdaBound.
//!
//! Each follows its standard published recurrence. Weight decay is folded
//! into the gradient (the classic L2 form) everywhere except AdamW, which
//! decouples it from the moment estimates. Projection onto the feasible set
//! is applied last.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{GradVector, ParamVector};
use crate::project::FeasibleSet;

use super::Optimizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Sgdm,
    Adam,
    AdamW,
    RmsProp,
    AdaBound,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Sgdm => "sgdm",
            BaselineKind::Adam => "adam",
            BaselineKind::AdamW => "adamw",
            BaselineKind::RmsProp => "rmsprop",
            BaselineKind::AdaBound => "adabound",
        }
    }
}

/// Hyperparameters for a baseline run. A single struct covers all five
/// methods; each method reads only the fields it defines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    /// SGDM velocity coefficient.
    pub momentum: f64,
    /// First-moment EMA coefficient (Adam family).
    pub beta1: f64,
    /// Second-moment EMA coefficient (Adam family, RMSProp).
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    /// AdaBound terminal rate.
    pub final_lr: f64,
    /// AdaBound bound-convergence speed.
    pub bound_zeta: f64,
}

impl BaselineConfig {
    pub fn sgdm() -> Self {
        Self {
            kind: BaselineKind::Sgdm,
            momentum: 0.9,
            beta1: 0.0,
            beta2: 0.0,
            epsilon: 0.0,
            weight_decay: 1e-4,
            final_lr: 0.0,
            bound_zeta: 0.0,
        }
    }

    pub fn adam() -> Self {
        Self {
            kind: BaselineKind::Adam,
            momentum: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
            final_lr: 0.0,
            bound_zeta: 0.0,
        }
    }

    pub fn adamw() -> Self {
        Self {
            kind: BaselineKind::AdamW,
            ..Self::adam()
        }
    }

    pub fn rmsprop() -> Self {
        Self {
            kind: BaselineKind::RmsProp,
            momentum: 0.0,
            beta1: 0.0,
            beta2: 0.99,
            epsilon: 1e-8,
            weight_decay: 1e-4,
            final_lr: 0.0,
            bound_zeta: 0.0,
        }
    }

    pub fn adabound() -> Self {
        Self {
            kind: BaselineKind::AdaBound,
            momentum: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
            final_lr: 0.4,
            bound_zeta: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Error::Config(format!("{name} out of range: {v}"));
        match self.kind {
            BaselineKind::Sgdm => {
                if !(0.0..1.0).contains(&self.momentum) {
                    return Err(bad("momentum", self.momentum));
                }
            }
            BaselineKind::Adam | BaselineKind::AdamW | BaselineKind::AdaBound => {
                if !(0.0..1.0).contains(&self.beta1) {
                    return Err(bad("beta1", self.beta1));
                }
                if !(0.0..1.0).contains(&self.beta2) {
                    return Err(bad("beta2", self.beta2));
                }
                if !(self.epsilon > 0.0) {
                    return Err(bad("epsilon", self.epsilon));
                }
                if self.kind == BaselineKind::AdaBound
                    && (!(self.final_lr > 0.0) || !(self.bound_zeta > 0.0))
                {
                    return Err(bad("final_lr/bound_zeta", self.final_lr));
                }
            }
            BaselineKind::RmsProp => {
                if !(0.0..1.0).contains(&self.beta2) {
                    return Err(bad("beta2", self.beta2));
                }
                if !(self.epsilon > 0.0) {
                    return Err(bad("epsilon", self.epsilon));
                }
            }
        }
        if self.weight_decay < 0.0 {
            return Err(bad("weight_decay", self.weight_decay));
        }
        Ok(())
    }
}

/// Moment buffers shared by the five methods. `first_moment` holds SGDM's
/// velocity or the Adam-family first moment; `second_moment` is unused for
/// SGDM.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    pub kind: BaselineKind,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: usize,
}

impl BaselineState {
    pub fn new(kind: BaselineKind, dim: usize) -> Self {
        Self {
            kind,
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step: 0,
        }
    }
}

/// A baseline optimizer instance.
#[derive(Debug, Clone)]
pub struct BaselineOptimizer {
    cfg: BaselineConfig,
    state: BaselineState,
    last_rates: Vec<f64>,
}

impl BaselineOptimizer {
    pub fn new(cfg: BaselineConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        let state = BaselineState::new(cfg.kind, dim);
        Ok(Self {
            cfg,
            state,
            last_rates: vec![0.0; dim],
        })
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.cfg
    }

    pub fn state(&self) -> &BaselineState {
        &self.state
    }

    pub fn baseline_step(
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
        if self.state.kind != self.cfg.kind {
            return Err(Error::Config(format!(
                "state was built for {} but config is {}",
                self.state.kind.name(),
                self.cfg.kind.name()
            )));
        }
        if !grad.is_finite() {
            return Err(Error::Numeric {
                step: self.state.step,
                msg: "non-finite gradient".into(),
            });
        }

        let cfg = &self.cfg;
        let gamma = cfg.weight_decay;
        let t = self.state.step + 1;
        let mut next = Vec::with_capacity(n);

        match cfg.kind {
            BaselineKind::Sgdm => {
                for i in 0..n {
                    let g = grad.values()[i] + gamma * theta.values()[i];
                    let v = cfg.momentum * self.state.first_moment[i] + g;
                    self.state.first_moment[i] = v;
                    self.last_rates[i] = base_lr;
                    next.push(theta.values()[i] - base_lr * v);
                }
            }
            BaselineKind::Adam | BaselineKind::AdamW => {
                let decoupled = cfg.kind == BaselineKind::AdamW;
                let bc1 = 1.0 - cfg.beta1.powi(t as i32);
                let bc2 = 1.0 - cfg.beta2.powi(t as i32);
                for i in 0..n {
                    let g = if decoupled {
                        grad.values()[i]
                    } else {
                        grad.values()[i] + gamma * theta.values()[i]
                    };
                    let m = cfg.beta1 * self.state.first_moment[i] + (1.0 - cfg.beta1) * g;
                    let v = cfg.beta2 * self.state.second_moment[i] + (1.0 - cfg.beta2) * g * g;
                    self.state.first_moment[i] = m;
                    self.state.second_moment[i] = v;
                    let m_hat = m / bc1;
                    let v_hat = v / bc2;
                    let rate = base_lr / (v_hat.sqrt() + cfg.epsilon);
                    self.last_rates[i] = rate;
                    let mut x = theta.values()[i] - rate * m_hat;
                    if decoupled {
                        x -= base_lr * gamma * theta.values()[i];
                    }
                    next.push(x);
                }
            }
            BaselineKind::RmsProp => {
                for i in 0..n {
                    let g = grad.values()[i] + gamma * theta.values()[i];
                    let v = cfg.beta2 * self.state.second_moment[i] + (1.0 - cfg.beta2) * g * g;
                    self.state.second_moment[i] = v;
                    let rate = base_lr / (v.sqrt() + cfg.epsilon);
                    self.last_rates[i] = rate;
                    next.push(theta.values()[i] - rate * g);
                }
            }
            BaselineKind::AdaBound => {
                let bc1 = 1.0 - cfg.beta1.powi(t as i32);
                let bc2 = 1.0 - cfg.beta2.powi(t as i32);
                let tf = t as f64;
                let lower = cfg.final_lr * (1.0 - 1.0 / (cfg.bound_zeta * tf + 1.0));
                let upper = cfg.final_lr * (1.0 + 1.0 / (cfg.bound_zeta * tf));
                for i in 0..n {
                    let g = grad.values()[i] + gamma * theta.values()[i];
                    let m = cfg.beta1 * self.state.first_moment[i] + (1.0 - cfg.beta1) * g;
                    let v = cfg.beta2 * self.state.second_moment[i] + (1.0 - cfg.beta2) * g * g;
                    self.state.first_moment[i] = m;
                    self.state.second_moment[i] = v;
                    let m_hat = m / bc1;
                    let v_hat = v / bc2;
                    let rate = (base_lr / (v_hat.sqrt() + cfg.epsilon)).clamp(lower, upper);
                    self.last_rates[i] = rate;
                    next.push(theta.values()[i] - rate * m_hat);
                }
            }
        }

        feasible.clamp_in_place(&mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                step: self.state.step,
                msg: "non-finite parameter after update".into(),
            });
        }
        self.state.step = t;
        theta.with_values(next)
    }
}

impl Optimizer for BaselineOptimizer {
    fn step(
        &mut self,
        theta: &ParamVector,
        grad: &GradVector,
        base_lr: f64,
        feasible: &FeasibleSet,
    ) -> Result<ParamVector> {
        self.baseline_step(theta, grad, base_lr, feasible)
    }

    fn last_rates(&self) -> &[f64] {
        &self.last_rates
    }
}
