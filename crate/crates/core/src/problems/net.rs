//! A small dense network whose trainable weights are exactly scale
//! invariant: the first layer enters the forward pass only through
//! `W / |W|`, an explicit weight normalization that emulates what a
//! batch-normalization layer does to the weights feeding it. The readout
//! layer is fixed, so the whole trainable vector satisfies
//! `L(c * theta) = L(theta)` for every `c > 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::{GradVector, ParamVector};

use super::Problem;

const INPUT_DIM: usize = 8;
const N_SAMPLES: usize = 256;

#[derive(Debug, Clone)]
pub struct ScaleInvariantNet {
    hidden: usize,
    inputs: Vec<Vec<f64>>,  // n x INPUT_DIM
    targets: Vec<f64>,      // n
    readout: Vec<f64>,      // hidden, fixed
}

/// Regression targets come from a random normalized teacher of the same
/// architecture plus small noise, so the landscape has structure without
/// being exactly interpolable.
pub fn make_scale_invariant_net(hidden: usize, seed: u64) -> Result<ScaleInvariantNet> {
    if hidden == 0 {
        return Err(Error::Config("hidden width must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let readout: Vec<f64> = (0..hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
    let teacher: Vec<f64> = (0..hidden * INPUT_DIM)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let teacher_norm = teacher.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut inputs = Vec::with_capacity(N_SAMPLES);
    let mut targets = Vec::with_capacity(N_SAMPLES);
    for _ in 0..N_SAMPLES {
        let x: Vec<f64> = (0..INPUT_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y = 0.0;
        for h in 0..hidden {
            let z: f64 = (0..INPUT_DIM)
                .map(|j| teacher[h * INPUT_DIM + j] / teacher_norm * x[j])
                .sum();
            y += readout[h] * z.tanh();
        }
        y += rng.random_range(-0.05..0.05);
        inputs.push(x);
        targets.push(y);
    }
    Ok(ScaleInvariantNet {
        hidden,
        inputs,
        targets,
        readout,
    })
}

impl ScaleInvariantNet {
    pub fn input_dim(&self) -> usize {
        INPUT_DIM
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Forward pass at the normalized weights; returns per-sample
    /// (error, hidden activations).
    fn forward(&self, unit: &[f64]) -> Vec<(f64, Vec<f64>)> {
        self.inputs
            .iter()
            .zip(&self.targets)
            .map(|(x, &y)| {
                let mut acts = Vec::with_capacity(self.hidden);
                let mut pred = 0.0;
                for h in 0..self.hidden {
                    let z: f64 = (0..INPUT_DIM).map(|j| unit[h * INPUT_DIM + j] * x[j]).sum();
                    let a = z.tanh();
                    acts.push(a);
                    pred += self.readout[h] * a;
                }
                (pred - y, acts)
            })
            .collect()
    }

    fn unit_direction(&self, theta: &ParamVector) -> Result<(Vec<f64>, f64)> {
        let norm = theta.norm();
        if norm == 0.0 {
            return Err(Error::Domain(
                "scale-invariant net undefined at the origin".into(),
            ));
        }
        Ok((theta.values().iter().map(|v| v / norm).collect(), norm))
    }
}

impl Problem for ScaleInvariantNet {
    fn dim(&self) -> usize {
        self.hidden * INPUT_DIM
    }

    fn n_batches(&self) -> usize {
        1
    }

    fn loss(&self, theta: &ParamVector, batch: usize) -> Result<f64> {
        if batch != 0 {
            return Err(Error::Config("net is full-batch only".into()));
        }
        let (unit, _) = self.unit_direction(theta)?;
        let n = self.inputs.len() as f64;
        Ok(self.forward(&unit).iter().map(|(e, _)| e * e).sum::<f64>() / n)
    }

    fn gradient(&self, theta: &ParamVector, batch: usize) -> Result<GradVector> {
        if batch != 0 {
            return Err(Error::Config("net is full-batch only".into()));
        }
        let (unit, norm) = self.unit_direction(theta)?;
        let n = self.inputs.len() as f64;

        // gradient with respect to the normalized weights
        let mut g_unit = vec![0.0; self.dim()];
        for ((err, acts), x) in self.forward(&unit).iter().zip(&self.inputs) {
            for h in 0..self.hidden {
                let dz = 2.0 * err / n * self.readout[h] * (1.0 - acts[h] * acts[h]);
                for j in 0..INPUT_DIM {
                    g_unit[h * INPUT_DIM + j] += dz * x[j];
                }
            }
        }

        // pull back through the normalization: remove the radial component
        // and shrink by 1/|theta|
        let radial: f64 = g_unit.iter().zip(&unit).map(|(g, u)| g * u).sum();
        let g = g_unit
            .iter()
            .zip(&unit)
            .map(|(gi, ui)| (gi - radial * ui) / norm)
            .collect();
        Ok(GradVector::new(g))
    }

    fn scale_invariant(&self) -> bool {
        true
    }
}
