//! Trajectory instrumentation: the oscillation metric and the regret ledger.
//!
//! Oscillation is measured per parameter as `q = l / d`, the total path
//! length over the net displacement between the first and last recorded
//! value; `Q` averages `q` over parameters. `Q = 1` means every parameter
//! moved monotonically; larger values mean back-and-forth motion that
//! contributed nothing to where the parameter ended up.

use crate::error::{Error, Result};
use crate::params::ParamVector;
use crate::problems::{numerical_cumulative_min, Problem};
use crate::project::FeasibleSet;

/// Per-step summary of the applied per-coordinate learning rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl LrStats {
    pub fn from_rates(rates: &[f64]) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &r in rates {
            min = min.min(r);
            max = max.max(r);
            sum += r;
        }
        if rates.is_empty() {
            return Self {
                min: 0.0,
                mean: 0.0,
                max: 0.0,
            };
        }
        Self {
            min,
            mean: sum / rates.len() as f64,
            max,
        }
    }
}

/// Accumulated path lengths and endpoints per parameter, plus per-step loss
/// and learning-rate series. Per-parameter storage is O(n) regardless of the
/// number of steps.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    path_length: Vec<f64>,
    start_value: Vec<f64>,
    last_value: Vec<f64>,
    losses: Vec<f64>,
    lr_stats: Vec<LrStats>,
}

impl TrajectoryRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> usize {
        self.losses.len()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn lr_stats(&self) -> &[LrStats] {
        &self.lr_stats
    }

    pub fn path_lengths(&self) -> &[f64] {
        &self.path_length
    }

    pub fn start_values(&self) -> &[f64] {
        &self.start_value
    }

    pub fn last_values(&self) -> &[f64] {
        &self.last_value
    }

    /// Folds one step into the record. The first call fixes the starting
    /// point; later calls must continue from where the record left off.
    pub fn record_step(
        &mut self,
        before: &ParamVector,
        after: &ParamVector,
        loss: f64,
        lr_rates: &[f64],
    ) -> Result<()> {
        if before.len() != after.len() {
            return Err(Error::Dimension {
                expected: before.len(),
                got: after.len(),
            });
        }
        if self.start_value.is_empty() {
            self.start_value = before.values().to_vec();
            self.last_value = before.values().to_vec();
            self.path_length = vec![0.0; before.len()];
        } else if self.start_value.len() != before.len() {
            return Err(Error::Dimension {
                expected: self.start_value.len(),
                got: before.len(),
            });
        }
        for i in 0..before.len() {
            self.path_length[i] += (after.values()[i] - before.values()[i]).abs();
            self.last_value[i] = after.values()[i];
        }
        self.losses.push(loss);
        self.lr_stats.push(LrStats::from_rates(lr_rates));
        Ok(())
    }

    /// Concatenates a continuation segment recorded in a separate session.
    /// The segment must start exactly where this record ended.
    pub fn merge(&mut self, segment: &TrajectoryRecord) -> Result<()> {
        if segment.start_value.is_empty() {
            return Ok(());
        }
        if self.start_value.is_empty() {
            *self = segment.clone();
            return Ok(());
        }
        if segment.start_value.len() != self.last_value.len() {
            return Err(Error::Dimension {
                expected: self.last_value.len(),
                got: segment.start_value.len(),
            });
        }
        if self
            .last_value
            .iter()
            .zip(&segment.start_value)
            .any(|(a, b)| a != b)
        {
            return Err(Error::Precondition(
                "segment does not continue this trajectory".into(),
            ));
        }
        for i in 0..self.path_length.len() {
            self.path_length[i] += segment.path_length[i];
            self.last_value[i] = segment.last_value[i];
        }
        self.losses.extend_from_slice(&segment.losses);
        self.lr_stats.extend_from_slice(&segment.lr_stats);
        Ok(())
    }
}

/// Mean of `path / displacement` over parameters whose displacement is at
/// least `min_displacement`; also reports how many parameters were included.
pub fn q_metric(rec: &TrajectoryRecord, min_displacement: f64) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut included = 0usize;
    for i in 0..rec.path_length.len() {
        let d = (rec.last_value[i] - rec.start_value[i]).abs();
        if d >= min_displacement {
            sum += rec.path_length[i] / d;
            included += 1;
        }
    }
    if included == 0 {
        return Err(Error::Degenerate(
            "no parameter moved at least min_displacement".into(),
        ));
    }
    Ok((sum / included as f64, included))
}

/// Running account of the online learner's cumulative loss and the batch ids
/// it was charged for.
#[derive(Debug, Clone, Default)]
pub struct RegretLedger {
    cumulative_loss: f64,
    played: Vec<usize>,
    comparator_min: Option<f64>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, batch: usize, loss: f64) {
        self.cumulative_loss += loss;
        self.played.push(batch);
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cumulative_loss
    }

    pub fn rounds(&self) -> usize {
        self.played.len()
    }

    pub fn played(&self) -> &[usize] {
        &self.played
    }

    /// Pins the comparator value directly instead of deriving it from the
    /// problem.
    pub fn set_comparator_min(&mut self, value: f64) {
        self.comparator_min = Some(value);
    }
}

/// Iterations given to the fallback comparator search.
const COMPARATOR_PGD_ITERS: usize = 500;

/// Cumulative loss minus the best fixed point's cumulative loss over the
/// played rounds. Uses the problem's closed form when available, otherwise a
/// projected-gradient search on the summed objective (valid for convex
/// problems only).
pub fn regret(
    ledger: &RegretLedger,
    problem: &dyn Problem,
    feasible: &FeasibleSet,
) -> Result<f64> {
    if ledger.played.is_empty() {
        return Err(Error::Precondition("empty ledger".into()));
    }
    let comparator = match ledger.comparator_min {
        Some(v) => v,
        None => match problem.cumulative_min(&ledger.played, feasible) {
            Some((_, v)) => v,
            None => {
                if problem.scale_invariant() {
                    // non-convex; a gradient search proves nothing here
                    return Err(Error::Unsupported(
                        "no comparator available for this problem".into(),
                    ));
                }
                numerical_cumulative_min(problem, &ledger.played, feasible, COMPARATOR_PGD_ITERS)?.1
            }
        },
    };
    Ok(ledger.cumulative_loss - comparator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::GradVector;
    use crate::problems::OnlineQuadratic;

    fn pv(vals: &[f64]) -> ParamVector {
        ParamVector::single_group(vals.to_vec()).unwrap()
    }

    fn record_path(path: &[f64]) -> TrajectoryRecord {
        let mut rec = TrajectoryRecord::new();
        for w in path.windows(2) {
            rec.record_step(&pv(&[w[0]]), &pv(&[w[1]]), 0.0, &[0.1]).unwrap();
        }
        rec
    }

    #[test]
    fn path_accumulates_absolute_increments() {
        let mut rec = TrajectoryRecord::new();
        rec.record_step(&pv(&[0.0, 0.0]), &pv(&[1.0, -1.0]), 0.5, &[0.1, 0.1])
            .unwrap();
        assert_eq!(rec.path_lengths(), &[1.0, 1.0]);
        rec.record_step(&pv(&[1.0, -1.0]), &pv(&[1.0, -1.0]), 0.5, &[0.1, 0.1])
            .unwrap();
        assert_eq!(rec.path_lengths(), &[1.0, 1.0]);
    }

    #[test]
    fn oscillating_path_q() {
        let rec = record_path(&[0.0, 1.0, 0.0, 1.0]);
        let (q, n) = q_metric(&rec, 1e-8).unwrap();
        assert_eq!(q, 3.0);
        assert_eq!(n, 1);
    }

    #[test]
    fn monotone_path_q_is_one() {
        let rec = record_path(&[0.0, 0.5, 1.0]);
        let (q, _) = q_metric(&rec, 1e-8).unwrap();
        assert_eq!(q, 1.0);
    }

    #[test]
    fn q_averages_over_parameters() {
        let mut rec = TrajectoryRecord::new();
        // param 0 goes 0 -> 1 monotone (q=1); param 1 goes 0 -> 1 -> 0 -> 1 (q=3)
        rec.record_step(&pv(&[0.0, 0.0]), &pv(&[1.0, 1.0]), 0.0, &[0.1, 0.1])
            .unwrap();
        rec.record_step(&pv(&[1.0, 1.0]), &pv(&[1.0, 0.0]), 0.0, &[0.1, 0.1])
            .unwrap();
        rec.record_step(&pv(&[1.0, 0.0]), &pv(&[1.0, 1.0]), 0.0, &[0.1, 0.1])
            .unwrap();
        let (q, n) = q_metric(&rec, 1e-8).unwrap();
        assert_eq!(q, 2.0);
        assert_eq!(n, 2);
    }

    #[test]
    fn zero_displacement_parameters_are_excluded() {
        let rec = record_path(&[0.0, 1.0, 0.0]);
        assert!(matches!(
            q_metric(&rec, 1e-8),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn merged_sessions_agree_with_single_session() {
        let full = record_path(&[0.0, 1.0, -0.5, 2.0, 1.0]);
        let mut first = record_path(&[0.0, 1.0, -0.5]);
        let second = record_path(&[-0.5, 2.0, 1.0]);
        first.merge(&second).unwrap();
        assert_eq!(first.path_lengths(), full.path_lengths());
        assert_eq!(first.last_values(), full.last_values());
        assert_eq!(
            q_metric(&first, 1e-8).unwrap(),
            q_metric(&full, 1e-8).unwrap()
        );
    }

    #[test]
    fn merge_rejects_discontinuous_segment() {
        let mut first = record_path(&[0.0, 1.0]);
        let second = record_path(&[5.0, 6.0]);
        assert!(matches!(
            first.merge(&second),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn regret_two_point_hand_case() {
        let p = OnlineQuadratic::from_centers(vec![vec![0.0], vec![2.0]], 2.0).unwrap();
        let mut ledger = RegretLedger::new();
        let theta = pv(&[0.0]);
        ledger.record(0, p.loss(&theta, 0).unwrap());
        ledger.record(1, p.loss(&theta, 1).unwrap());
        assert_eq!(ledger.cumulative_loss(), 4.0);
        let r = regret(&ledger, &p, &FeasibleSet::Unconstrained).unwrap();
        assert_eq!(r, 2.0);
    }

    #[test]
    fn comparator_policy_has_zero_regret() {
        let p = crate::problems::make_online_quadratic(3, 50, 5, 1.0).unwrap();
        let batches: Vec<usize> = (0..50).collect();
        let (star, _) = p
            .cumulative_min(&batches, &FeasibleSet::Unconstrained)
            .unwrap();
        let mut ledger = RegretLedger::new();
        for &b in &batches {
            ledger.record(b, p.loss(&star, b).unwrap());
        }
        let r = regret(&ledger, &p, &FeasibleSet::Unconstrained).unwrap();
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn regret_invariant_to_constant_loss_shift() {
        struct Shifted<'a> {
            inner: &'a OnlineQuadratic,
            offset: f64,
        }
        impl Problem for Shifted<'_> {
            fn dim(&self) -> usize {
                self.inner.dim()
            }
            fn n_batches(&self) -> usize {
                self.inner.n_batches()
            }
            fn loss(&self, theta: &ParamVector, batch: usize) -> crate::error::Result<f64> {
                Ok(self.inner.loss(theta, batch)? + self.offset)
            }
            fn gradient(
                &self,
                theta: &ParamVector,
                batch: usize,
            ) -> crate::error::Result<GradVector> {
                self.inner.gradient(theta, batch)
            }
            fn cumulative_min(
                &self,
                batches: &[usize],
                feasible: &FeasibleSet,
            ) -> Option<(ParamVector, f64)> {
                let (theta, v) = self.inner.cumulative_min(batches, feasible)?;
                Some((theta, v + self.offset * batches.len() as f64))
            }
        }

        let p = crate::problems::make_online_quadratic(2, 20, 9, 1.0).unwrap();
        let shifted = Shifted {
            inner: &p,
            offset: 3.5,
        };
        let theta = pv(&[0.25, -0.5]);
        let mut base = RegretLedger::new();
        let mut moved = RegretLedger::new();
        for b in 0..20 {
            base.record(b, p.loss(&theta, b).unwrap());
            moved.record(b, shifted.loss(&theta, b).unwrap());
        }
        let r0 = regret(&base, &p, &FeasibleSet::Unconstrained).unwrap();
        let r1 = regret(&moved, &shifted, &FeasibleSet::Unconstrained).unwrap();
        assert!((r0 - r1).abs() < 1e-9);
    }

    #[test]
    fn numerical_comparator_close_to_stationary_on_logistic() {
        let p = crate::problems::make_logistic(4, 64, 3).unwrap();
        let batches: Vec<usize> = (0..p.n_batches()).collect();
        let mut ledger = RegretLedger::new();
        let theta = pv(&[0.0, 0.0, 0.0, 0.0]);
        for &b in &batches {
            ledger.record(b, p.loss(&theta, b).unwrap());
        }
        // playing a fixed point cannot beat the comparator by more than
        // numerical slack
        let r = regret(&ledger, &p, &FeasibleSet::Unconstrained).unwrap();
        assert!(r >= -1e-6);
    }

    #[test]
    fn q_never_below_one() {
        use proptest::prelude::*;
        use proptest::test_runner::TestRunner;
        let mut runner = TestRunner::default();
        runner
            .run(
                &proptest::collection::vec(-5.0f64..5.0, 2..100),
                |path| {
                    let rec = record_path(&path);
                    match q_metric(&rec, 1e-8) {
                        Ok((q, n)) => {
                            prop_assert!(q >= 1.0, "q = {q}");
                            prop_assert!(n >= 1);
                        }
                        Err(Error::Degenerate(_)) => {}
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    }
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn unsupported_problem_without_comparator() {
        let p = crate::problems::make_scale_invariant_net(2, 1).unwrap();
        let theta = crate::problems::random_point(p.dim(), 4, 1.0);
        let mut ledger = RegretLedger::new();
        ledger.record(0, p.loss(&theta, 0).unwrap());
        assert!(matches!(
            regret(&ledger, &p, &FeasibleSet::Unconstrained),
            Err(Error::Unsupported(_))
        ));
    }
}
