//! JSON run configuration.
//!
//! Specs are externally tagged: `"problem": {"quadratic": {...}}`. Unknown
//! keys anywhere in the file are errors, and a parsed config serializes back
//! to an equivalent document.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use adarem::optim::{LambdaCadence, MaxScope};

fn default_center_bound() -> f64 {
    1.0
}

fn default_samples() -> usize {
    1024
}

fn default_batch_size() -> usize {
    32
}

fn default_epochs() -> usize {
    1
}

fn default_min_displacement() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub feasible: FeasibleSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    /// Master seed: initial parameters and batch order derive from it.
    pub seed: u64,
    /// Where run outputs go; a CLI `--out` flag overrides this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        seed: u64,
        #[serde(default = "default_center_bound")]
        center_bound: f64,
    },
    Logistic {
        dim: usize,
        #[serde(default = "default_samples")]
        samples: usize,
        seed: u64,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
    },
    ScaleInvariantNet {
        hidden: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    #[serde(rename = "adarem")]
    AdaRem(AdaRemSpec),
    #[serde(rename = "adarem_s")]
    AdaRemS(AdaRemSphereSpec),
    Sgdm {
        #[serde(default = "AdaRemSpec::default_sgdm_momentum")]
        momentum: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Adam(AdamSpec),
    #[serde(rename = "adamw")]
    AdamW(AdamSpec),
    #[serde(rename = "rmsprop")]
    RmsProp {
        #[serde(default = "AdamSpec::default_rmsprop_beta2")]
        beta2: f64,
        #[serde(default = "AdamSpec::default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    #[serde(rename = "adabound")]
    AdaBound(AdaBoundSpec),
}

impl OptimizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::AdaRem(_) => "adarem",
            OptimizerSpec::AdaRemS(_) => "adarem_s",
            OptimizerSpec::Sgdm { .. } => "sgdm",
            OptimizerSpec::Adam(_) => "adam",
            OptimizerSpec::AdamW(_) => "adamw",
            OptimizerSpec::RmsProp { .. } => "rmsprop",
            OptimizerSpec::AdaBound(_) => "adabound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaRemSpec {
    #[serde(default = "AdaRemSpec::default_beta")]
    pub beta: f64,
    #[serde(default = "AdaRemSpec::default_lambda")]
    pub lambda: f64,
    #[serde(default = "AdamSpec::default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "AdaRemSpec::default_cadence")]
    pub lambda_cadence: LambdaCadence,
    #[serde(default = "AdaRemSpec::default_scope")]
    pub max_scope: MaxScope,
}

impl Default for AdaRemSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl AdaRemSpec {
    fn default_beta() -> f64 {
        0.999
    }
    fn default_lambda() -> f64 {
        0.999
    }
    fn default_cadence() -> LambdaCadence {
        LambdaCadence::PerEpoch
    }
    fn default_scope() -> MaxScope {
        MaxScope::PerGroup
    }
    fn default_sgdm_momentum() -> f64 {
        0.9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaRemSphereSpec {
    #[serde(default = "AdaRemSpec::default_beta")]
    pub beta: f64,
    #[serde(default = "AdaRemSpec::default_lambda")]
    pub lambda: f64,
    #[serde(default = "AdamSpec::default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "AdaRemSpec::default_cadence")]
    pub lambda_cadence: LambdaCadence,
    #[serde(default = "AdaRemSpec::default_scope")]
    pub max_scope: MaxScope,
    #[serde(default = "AdaRemSphereSpec::default_radius")]
    pub radius: f64,
}

impl AdaRemSphereSpec {
    fn default_radius() -> f64 {
        10.0
    }

    pub fn adarem(&self) -> AdaRemSpec {
        AdaRemSpec {
            beta: self.beta,
            lambda: self.lambda,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
            lambda_cadence: self.lambda_cadence,
            max_scope: self.max_scope,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamSpec {
    #[serde(default = "AdamSpec::default_beta1")]
    pub beta1: f64,
    #[serde(default = "AdamSpec::default_beta2")]
    pub beta2: f64,
    #[serde(default = "AdamSpec::default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

impl AdamSpec {
    fn default_beta1() -> f64 {
        0.9
    }
    fn default_beta2() -> f64 {
        0.999
    }
    fn default_epsilon() -> f64 {
        1e-8
    }
    fn default_rmsprop_beta2() -> f64 {
        0.99
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaBoundSpec {
    #[serde(default = "AdamSpec::default_beta1")]
    pub beta1: f64,
    #[serde(default = "AdamSpec::default_beta2")]
    pub beta2: f64,
    #[serde(default = "AdamSpec::default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "AdaBoundSpec::default_final_lr")]
    pub final_lr: f64,
    #[serde(default = "AdaBoundSpec::default_bound_zeta")]
    pub bound_zeta: f64,
}

impl AdaBoundSpec {
    fn default_final_lr() -> f64 {
        0.4
    }
    fn default_bound_zeta() -> f64 {
        1e-3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKindSpec {
    Cosine,
    InvSqrt,
    Constant,
    /// Sphere-rate schedule: `base_lr` is the equivalent unconstrained rate,
    /// converted step by step. Requires the spherical optimizer.
    Slr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKindSpec,
    pub base_lr: f64,
    pub total_steps: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FeasibleSpec {
    #[default]
    Unconstrained,
    Box { half_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    #[serde(default = "default_true")]
    pub record_q: bool,
    #[serde(default)]
    pub record_regret: bool,
    #[serde(default = "default_min_displacement")]
    pub min_displacement: f64,
    /// Steps excluded from the front of the oscillation-metric window;
    /// 0 measures the whole run.
    #[serde(default)]
    pub q_window_start: usize,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            record_q: true,
            record_regret: false,
            min_displacement: default_min_displacement(),
            q_window_start: 0,
        }
    }
}

/// FNV-1a over the canonical JSON encoding; stable across runs and builds.
pub fn spec_hash<T: Serialize>(spec: &T) -> String {
    let text = serde_json::to_string(spec).expect("spec serializes");
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}
