//! Base learning-rate schedules for the run loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic schedules over a fixed horizon. The sphere-rate schedule is
/// not here: it depends on run state and lives with the sphere machinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Cosine,
    InvSqrt,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    pub total_steps: usize,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, base_lr: f64, total_steps: usize) -> Result<Self> {
        if !(base_lr > 0.0) {
            return Err(Error::Config(format!(
                "base_lr must be positive, got {base_lr}"
            )));
        }
        if total_steps == 0 {
            return Err(Error::Config("total_steps must be at least 1".into()));
        }
        Ok(Self {
            kind,
            base_lr,
            total_steps,
        })
    }

    /// Rate at step `t`, `0 <= t < total_steps`.
    pub fn lr_at(&self, t: usize) -> f64 {
        debug_assert!(t < self.total_steps);
        match self.kind {
            ScheduleKind::Cosine => {
                let frac = t as f64 / self.total_steps as f64;
                self.base_lr * (1.0 + (std::f64::consts::PI * frac).cos()) / 2.0
            }
            ScheduleKind::InvSqrt => self.base_lr / ((t + 1) as f64).sqrt(),
            ScheduleKind::Constant => self.base_lr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints_and_midpoint() {
        let s = Schedule::new(ScheduleKind::Cosine, 0.4, 100).unwrap();
        assert_eq!(s.lr_at(0), 0.4);
        assert!((s.lr_at(50) - 0.2).abs() < 1e-15);
        assert!(s.lr_at(99) < 0.001);
    }

    #[test]
    fn inv_sqrt_hits_half_at_fourth_step() {
        let s = Schedule::new(ScheduleKind::InvSqrt, 0.4, 10).unwrap();
        assert_eq!(s.lr_at(0), 0.4);
        assert_eq!(s.lr_at(3), 0.2);
    }

    #[test]
    fn constant_is_constant() {
        let s = Schedule::new(ScheduleKind::Constant, 0.1, 5).unwrap();
        for t in 0..5 {
            assert_eq!(s.lr_at(t), 0.1);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(Schedule::new(ScheduleKind::Cosine, 0.0, 10).is_err());
        assert!(Schedule::new(ScheduleKind::Cosine, 0.1, 0).is_err());
    }
}
