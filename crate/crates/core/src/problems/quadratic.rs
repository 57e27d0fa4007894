//! Online stream of shifted quadratics `f_t(x) = |x - c_t|^2`, the adversary
//! of the online-learning analysis. The summed objective has a closed-form
//! minimizer (the clamped mean of the centers), which makes exact regret
//! computation possible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::{GradVector, ParamVector};
use crate::project::FeasibleSet;

use super::Problem;

#[derive(Debug, Clone)]
pub struct OnlineQuadratic {
    dim: usize,
    centers: Vec<Vec<f64>>,
    center_bound: f64,
}

/// Generates `rounds` centers i.i.d. uniform in `[-center_bound, center_bound]^dim`.
pub fn make_online_quadratic(
    dim: usize,
    rounds: usize,
    seed: u64,
    center_bound: f64,
) -> Result<OnlineQuadratic> {
    if dim == 0 || rounds == 0 {
        return Err(Error::Config(
            "online quadratic needs dim >= 1 and rounds >= 1".into(),
        ));
    }
    if !(center_bound > 0.0) {
        return Err(Error::Config(format!(
            "center_bound must be positive, got {center_bound}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = (0..rounds)
        .map(|_| {
            (0..dim)
                .map(|_| rng.random_range(-center_bound..center_bound))
                .collect()
        })
        .collect();
    Ok(OnlineQuadratic {
        dim,
        centers,
        center_bound,
    })
}

impl OnlineQuadratic {
    /// Stream with explicit centers; used by tests that pin hand cases.
    pub fn from_centers(centers: Vec<Vec<f64>>, center_bound: f64) -> Result<Self> {
        let dim = centers.first().map(|c| c.len()).unwrap_or(0);
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(Error::Config("centers must be nonempty and rectangular".into()));
        }
        Ok(Self {
            dim,
            centers,
            center_bound,
        })
    }

    fn center(&self, batch: usize) -> Result<&[f64]> {
        self.centers
            .get(batch)
            .map(|c| c.as_slice())
            .ok_or_else(|| {
                Error::Config(format!(
                    "round {batch} out of range (stream has {})",
                    self.centers.len()
                ))
            })
    }
}

impl Problem for OnlineQuadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_batches(&self) -> usize {
        self.centers.len()
    }

    fn loss(&self, theta: &ParamVector, batch: usize) -> Result<f64> {
        let c = self.center(batch)?;
        Ok(theta
            .values()
            .iter()
            .zip(c)
            .map(|(t, ci)| (t - ci) * (t - ci))
            .sum())
    }

    fn gradient(&self, theta: &ParamVector, batch: usize) -> Result<GradVector> {
        let c = self.center(batch)?;
        Ok(GradVector::new(
            theta
                .values()
                .iter()
                .zip(c)
                .map(|(t, ci)| 2.0 * (t - ci))
                .collect(),
        ))
    }

    fn cumulative_min(
        &self,
        batches: &[usize],
        feasible: &FeasibleSet,
    ) -> Option<(ParamVector, f64)> {
        if batches.is_empty() {
            return None;
        }
        let mut mean = vec![0.0; self.dim];
        for &b in batches {
            let c = self.centers.get(b)?;
            for (m, ci) in mean.iter_mut().zip(c) {
                *m += ci;
            }
        }
        for m in &mut mean {
            *m /= batches.len() as f64;
        }
        // the summed quadratic is separable, so the box-constrained minimizer
        // is the coordinate-wise clamp of the mean
        feasible.clamp_in_place(&mut mean);
        let theta = ParamVector::single_group(mean).ok()?;
        let mut value = 0.0;
        for &b in batches {
            value += self.loss(&theta, b).ok()?;
        }
        Some((theta, value))
    }

    fn grad_bound(&self, feasible: &FeasibleSet) -> Option<f64> {
        match feasible {
            FeasibleSet::Unconstrained => None,
            FeasibleSet::Box { lower, upper } => {
                let sum_sq: f64 = lower
                    .iter()
                    .zip(upper)
                    .map(|(lo, hi)| {
                        let reach = lo.abs().max(hi.abs()) + self.center_bound;
                        reach * reach
                    })
                    .sum();
                Some(2.0 * sum_sq.sqrt())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_diff_gradient;
    use crate::problems::random_point;

    #[test]
    fn two_center_hand_case() {
        let p = OnlineQuadratic::from_centers(vec![vec![0.0], vec![2.0]], 2.0).unwrap();
        let (theta, value) = p
            .cumulative_min(&[0, 1], &FeasibleSet::Unconstrained)
            .unwrap();
        assert_eq!(theta.values(), &[1.0]);
        assert_eq!(value, 2.0);
    }

    #[test]
    fn all_zero_centers() {
        let p = OnlineQuadratic::from_centers(vec![vec![0.0, 0.0]; 5], 1.0).unwrap();
        let (theta, value) = p
            .cumulative_min(&[0, 1, 2, 3, 4], &FeasibleSet::Unconstrained)
            .unwrap();
        assert_eq!(theta.values(), &[0.0, 0.0]);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn minimizer_is_brute_force_mean_of_recovered_centers() {
        let p = make_online_quadratic(3, 100, 7, 1.0).unwrap();
        // recover each center independently from the gradient at the origin:
        // g = 2(0 - c_t) => c_t = -g/2
        let origin = ParamVector::single_group(vec![0.0; 3]).unwrap();
        let mut mean = vec![0.0; 3];
        for t in 0..100 {
            let g = p.gradient(&origin, t).unwrap();
            for (m, gi) in mean.iter_mut().zip(g.values()) {
                *m += -gi / 2.0;
            }
        }
        for m in &mut mean {
            *m /= 100.0;
        }
        let batches: Vec<usize> = (0..100).collect();
        let (theta, _) = p
            .cumulative_min(&batches, &FeasibleSet::Unconstrained)
            .unwrap();
        for (a, b) in theta.values().iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = make_online_quadratic(4, 10, 3, 1.0).unwrap();
        for pt in 0..5 {
            let theta = random_point(4, 100 + pt, 1.0);
            let g = p.gradient(&theta, pt as usize).unwrap();
            let fd = finite_diff_gradient(&p, &theta, pt as usize, 1e-6).unwrap();
            let diff: f64 = g
                .values()
                .iter()
                .zip(fd.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(diff / g.norm().max(1e-12) < 1e-5);
        }
    }

    #[test]
    fn gradient_bound_holds_on_samples() {
        let dim = 6;
        let p = make_online_quadratic(dim, 50, 11, 1.0).unwrap();
        let feasible = FeasibleSet::centered_box(dim, 1.0).unwrap();
        let bound = p.grad_bound(&feasible).unwrap();
        let expected = 2.0 * (dim as f64).sqrt() * (1.0 + 1.0);
        assert!((bound - expected).abs() < 1e-12);
        for s in 0..50 {
            let theta = random_point(dim, 500 + s, 1.0);
            let g = p.gradient(&theta, s as usize).unwrap();
            assert!(g.norm() <= bound);
        }
    }

    #[test]
    fn out_of_range_round_is_error() {
        let p = make_online_quadratic(2, 5, 1, 1.0).unwrap();
        let theta = ParamVector::single_group(vec![0.0, 0.0]).unwrap();
        assert!(p.loss(&theta, 5).is_err());
    }
}
