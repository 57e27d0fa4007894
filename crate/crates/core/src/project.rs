//! Feasible sets and the diagonally-weighted metric projection.
//!
//! The projection `argmin_{x in F} ||A^{1/2}(x - y)||` with diagonal positive
//! `A` decouples per coordinate for a box, so it reduces to clamping and is
//! independent of the weights. The weights still matter for the
//! nonexpansiveness contract, which measures distances in the weighted norm.

use crate::error::{Error, Result};

/// Convex region that iterates are projected into.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Unconstrained,
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl FeasibleSet {
    /// Box `[-half_width, half_width]^dim`.
    pub fn centered_box(dim: usize, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Config(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        Ok(FeasibleSet::Box {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        })
    }

    pub fn bounded_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo <= hi) {
                return Err(Error::Config(format!(
                    "box bounds inverted at index {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// Max-norm diameter `max_i (upper_i - lower_i)`; infinite when unconstrained.
    pub fn diameter_inf(&self) -> f64 {
        match self {
            FeasibleSet::Unconstrained => f64::INFINITY,
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .fold(0.0, |acc, (lo, hi)| acc.max(hi - lo)),
        }
    }

    /// Clamps `y` into the set in place. For a box with any diagonal metric
    /// this IS the metric projection.
    pub fn clamp_in_place(&self, y: &mut [f64]) {
        if let FeasibleSet::Box { lower, upper } = self {
            for ((v, lo), hi) in y.iter_mut().zip(lower).zip(upper) {
                *v = v.min(*hi).max(*lo);
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            FeasibleSet::Unconstrained => true,
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower)
                .zip(upper)
                .all(|((v, lo), hi)| *v >= *lo && *v <= *hi),
        }
    }
}

/// Metric projection of `y` onto `set` under the diagonal metric `diag_weights`.
/// Weights must be strictly positive; for a box the result is the clamp,
/// independent of them.
pub fn project(y: &[f64], set: &FeasibleSet, diag_weights: &[f64]) -> Result<Vec<f64>> {
    if y.len() != diag_weights.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            got: diag_weights.len(),
        });
    }
    if let Some(i) = diag_weights.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::Domain(format!(
            "nonpositive projection weight at index {i}: {}",
            diag_weights[i]
        )));
    }
    if let FeasibleSet::Box { lower, .. } = set {
        if lower.len() != y.len() {
            return Err(Error::Dimension {
                expected: lower.len(),
                got: y.len(),
            });
        }
    }
    let mut out = y.to_vec();
    set.clamp_in_place(&mut out);
    Ok(out)
}

fn weighted_distance(a: &[f64], b: &[f64], weights: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| w * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Projects both points and returns (weighted distance of projections,
/// weighted distance of inputs). Nonexpansiveness asserts lhs <= rhs.
pub fn nonexpansive_check(
    set: &FeasibleSet,
    weights: &[f64],
    z1: &[f64],
    z2: &[f64],
) -> Result<(f64, f64)> {
    let u1 = project(z1, set, weights)?;
    let u2 = project(z2, set, weights)?;
    let lhs = weighted_distance(&u1, &u2, weights);
    let rhs = weighted_distance(z1, z2, weights);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unconstrained_is_identity() {
        let y = [5.0, -3.0];
        let out = project(&y, &FeasibleSet::Unconstrained, &[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![5.0, -3.0]);
    }

    #[test]
    fn box_clamps_independent_of_weights() {
        let set = FeasibleSet::centered_box(2, 1.0).unwrap();
        for w in [[1.0, 1.0], [7.0, 0.01], [100.0, 3.0]] {
            let out = project(&[2.0, 0.5], &set, &w).unwrap();
            assert_eq!(out, vec![1.0, 0.5]);
        }
    }

    #[test]
    fn interior_point_fixed() {
        let set = FeasibleSet::bounded_box(vec![0.0], vec![1.0]).unwrap();
        let out = project(&[0.3], &set, &[7.0]).unwrap();
        assert_eq!(out, vec![0.3]);
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let set = FeasibleSet::centered_box(1, 1.0).unwrap();
        assert!(matches!(
            project(&[0.0], &set, &[0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            project(&[0.0], &set, &[-1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn nonexpansive_hand_cases() {
        let set = FeasibleSet::centered_box(1, 1.0).unwrap();
        // both inside: projections are identities
        let (lhs, rhs) = nonexpansive_check(&set, &[3.0], &[0.5], &[-0.25]).unwrap();
        assert_eq!(lhs, rhs);
        // clamp both then measure
        let (lhs, rhs) = nonexpansive_check(&set, &[1.0], &[2.0], &[-2.0]).unwrap();
        assert_eq!(lhs, 2.0);
        assert_eq!(rhs, 4.0);
        // coincident inputs
        let (lhs, rhs) = nonexpansive_check(&set, &[2.0], &[5.0], &[5.0]).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    proptest! {
        #[test]
        fn projection_is_nonexpansive(
            seed_vals in proptest::collection::vec(-10.0f64..10.0, 8),
            widths in proptest::collection::vec(0.01f64..5.0, 2),
            weights in proptest::collection::vec(1e-3f64..1e3, 2),
        ) {
            let lower = vec![seed_vals[0].min(seed_vals[1]), seed_vals[2].min(seed_vals[3])];
            let upper = vec![lower[0] + widths[0], lower[1] + widths[1]];
            let set = FeasibleSet::bounded_box(lower, upper).unwrap();
            let z1 = [seed_vals[4], seed_vals[5]];
            let z2 = [seed_vals[6], seed_vals[7]];
            let (lhs, rhs) = nonexpansive_check(&set, &weights, &z1, &z2).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn projection_idempotent_and_feasible(
            y in proptest::collection::vec(-10.0f64..10.0, 1..16),
        ) {
            let dim = y.len();
            let set = FeasibleSet::centered_box(dim, 2.5).unwrap();
            let w = vec![1.0; dim];
            let p1 = project(&y, &set, &w).unwrap();
            prop_assert!(set.contains(&p1));
            let p2 = project(&p1, &set, &w).unwrap();
            prop_assert_eq!(p1, p2);
        }
    }
}
