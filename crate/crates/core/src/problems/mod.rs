//! Test objectives supplying the per-step loss sequence.
//!
//! Every bundled problem ships an analytic gradient; no autodiff is used.
//! Correctness of the gradients is itself a tested artifact, checked against
//! the central finite-difference oracle below.

mod logistic;
mod net;
mod quadratic;

pub use logistic::{make_logistic, LogisticRegression};
pub use net::{make_scale_invariant_net, ScaleInvariantNet};
pub use quadratic::{make_online_quadratic, OnlineQuadratic};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::{GradVector, ParamVector};
use crate::project::FeasibleSet;

/// An objective evaluated against indexed batches. For online streams each
/// batch id selects the round's loss; for dataset problems it selects a
/// minibatch.
pub trait Problem {
    fn dim(&self) -> usize;

    fn n_batches(&self) -> usize;

    fn loss(&self, theta: &ParamVector, batch: usize) -> Result<f64>;

    fn gradient(&self, theta: &ParamVector, batch: usize) -> Result<GradVector>;

    /// Minimizer and value of the summed objective over `batches` restricted
    /// to `feasible`, when a closed form exists.
    fn cumulative_min(
        &self,
        _batches: &[usize],
        _feasible: &FeasibleSet,
    ) -> Option<(ParamVector, f64)> {
        None
    }

    /// Analytic bound on the gradient 2-norm over the feasible set.
    fn grad_bound(&self, _feasible: &FeasibleSet) -> Option<f64> {
        None
    }

    /// Whether the loss satisfies `L(c * theta) = L(theta)` for all `c > 0`.
    fn scale_invariant(&self) -> bool {
        false
    }
}

/// Central finite differences `(f(x + h e_i) - f(x - h e_i)) / (2h)`, the
/// independent oracle for every analytic gradient.
pub fn finite_diff_gradient(
    p: &dyn Problem,
    theta: &ParamVector,
    batch: usize,
    h: f64,
) -> Result<GradVector> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {h}")));
    }
    let mut out = Vec::with_capacity(theta.len());
    let mut work = theta.values().to_vec();
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + h;
        let up = p.loss(&theta.with_values(work.clone())?, batch)?;
        work[i] = orig - h;
        let down = p.loss(&theta.with_values(work.clone())?, batch)?;
        work[i] = orig;
        out.push((up - down) / (2.0 * h));
    }
    Ok(GradVector::new(out))
}

/// Seeded pseudo-random sequence of batch ids.
#[derive(Debug, Clone)]
pub struct BatchStream {
    n_batches: usize,
    epoch_size: usize,
    mode: StreamMode,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)] // one stream per run
enum StreamMode {
    /// Fresh batch per round: 0, 1, 2, ... (online streams).
    Sequential { next: usize },
    /// Uniform random ids from a seeded generator.
    Random { rng: ChaCha8Rng },
}

impl BatchStream {
    pub fn sequential(n_batches: usize, epoch_size: usize) -> Self {
        Self {
            n_batches,
            epoch_size,
            mode: StreamMode::Sequential { next: 0 },
        }
    }

    pub fn random(n_batches: usize, epoch_size: usize, seed: u64) -> Self {
        Self {
            n_batches,
            epoch_size,
            mode: StreamMode::Random {
                rng: ChaCha8Rng::seed_from_u64(seed),
            },
        }
    }

    pub fn epoch_size(&self) -> usize {
        self.epoch_size
    }

    pub fn next_id(&mut self) -> usize {
        match &mut self.mode {
            StreamMode::Sequential { next } => {
                let id = *next % self.n_batches;
                *next += 1;
                id
            }
            StreamMode::Random { rng } => rng.random_range(0..self.n_batches),
        }
    }
}

/// Uniform random point in `[-half_width, half_width]^dim`, single group.
pub fn random_point(dim: usize, seed: u64, half_width: f64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..dim)
        .map(|_| rng.random_range(-half_width..half_width))
        .collect();
    ParamVector::single_group(values).expect("finite random values")
}

/// Projected gradient descent with Armijo backtracking on the summed
/// objective over `batches`. Used as the comparator when no closed form is
/// available; the objective must be convex for the result to be the true
/// minimum.
pub fn numerical_cumulative_min(
    p: &dyn Problem,
    batches: &[usize],
    feasible: &FeasibleSet,
    iters: usize,
) -> Result<(ParamVector, f64)> {
    let dim = p.dim();
    let cumulative = |theta: &ParamVector| -> Result<f64> {
        let mut total = 0.0;
        for &b in batches {
            total += p.loss(theta, b)?;
        }
        Ok(total)
    };
    let cumulative_grad = |theta: &ParamVector| -> Result<Vec<f64>> {
        let mut g = vec![0.0; dim];
        for &b in batches {
            let gb = p.gradient(theta, b)?;
            for (acc, v) in g.iter_mut().zip(gb.values()) {
                *acc += v;
            }
        }
        Ok(g)
    };

    let mut theta = {
        let mut zero = vec![0.0; dim];
        feasible.clamp_in_place(&mut zero);
        ParamVector::single_group(zero)?
    };
    let mut value = cumulative(&theta)?;
    let mut lr = 1.0;
    for _ in 0..iters {
        let g = cumulative_grad(&theta)?;
        let mut improved = false;
        for _ in 0..40 {
            let mut candidate: Vec<f64> = theta
                .values()
                .iter()
                .zip(&g)
                .map(|(t, gi)| t - lr * gi)
                .collect();
            feasible.clamp_in_place(&mut candidate);
            let cand = theta.with_values(candidate)?;
            let cand_value = cumulative(&cand)?;
            if cand_value < value {
                theta = cand;
                value = cand_value;
                improved = true;
                lr *= 1.3;
                break;
            }
            lr *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((theta, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_stream_determinism() {
        let mut a = BatchStream::random(32, 32, 1234);
        let mut b = BatchStream::random(32, 32, 1234);
        for _ in 0..10_000 {
            assert_eq!(a.next_id(), b.next_id());
        }
        let mut c = BatchStream::random(32, 32, 1235);
        let differs = (0..100).any(|_| {
            let mut a2 = BatchStream::random(32, 32, 1234);
            a2.next_id() != c.next_id()
        });
        assert!(differs);
    }

    #[test]
    fn sequential_stream_wraps() {
        let mut s = BatchStream::sequential(3, 3);
        let ids: Vec<usize> = (0..7).map(|_| s.next_id()).collect();
        assert_eq!(ids, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn finite_diff_on_square() {
        struct Square;
        impl Problem for Square {
            fn dim(&self) -> usize {
                1
            }
            fn n_batches(&self) -> usize {
                1
            }
            fn loss(&self, theta: &ParamVector, _batch: usize) -> Result<f64> {
                Ok(theta.values()[0] * theta.values()[0])
            }
            fn gradient(&self, theta: &ParamVector, _batch: usize) -> Result<GradVector> {
                Ok(GradVector::new(vec![2.0 * theta.values()[0]]))
            }
        }
        let theta = ParamVector::single_group(vec![3.0]).unwrap();
        let fd = finite_diff_gradient(&Square, &theta, 0, 1e-6).unwrap();
        assert!((fd.values()[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn finite_diff_on_constant_is_zero() {
        struct Constant;
        impl Problem for Constant {
            fn dim(&self) -> usize {
                2
            }
            fn n_batches(&self) -> usize {
                1
            }
            fn loss(&self, _theta: &ParamVector, _batch: usize) -> Result<f64> {
                Ok(42.0)
            }
            fn gradient(&self, _theta: &ParamVector, _batch: usize) -> Result<GradVector> {
                Ok(GradVector::new(vec![0.0, 0.0]))
            }
        }
        let theta = ParamVector::single_group(vec![1.0, -1.0]).unwrap();
        let fd = finite_diff_gradient(&Constant, &theta, 0, 1e-6).unwrap();
        assert_eq!(fd.values(), &[0.0, 0.0]);
    }
}
