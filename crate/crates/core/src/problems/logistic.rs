//! Binary logistic regression over a fixed synthetic dataset with
//! separable-plus-noise labels. Convex, smooth, and cheap enough for
//! full-batch comparators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::{GradVector, ParamVector};

use super::Problem;

const DEFAULT_BATCH_SIZE: usize = 32;
const LABEL_FLIP_PROB: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct LogisticRegression {
    dim: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<f64>, // +1 / -1
    batch_size: usize,
}

/// Synthetic dataset: features uniform in `[-1, 1]^dim`, labels from a random
/// separating direction with a small flip rate.
pub fn make_logistic(dim: usize, n_samples: usize, seed: u64) -> Result<LogisticRegression> {
    if n_samples < dim {
        return Err(Error::Config(format!(
            "need at least dim samples: {n_samples} < {dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // sign separator: every coordinate carries the same signal magnitude
    let separator: Vec<f64> = (0..dim)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let score: f64 = x.iter().zip(&separator).map(|(a, b)| a * b).sum();
        let mut y = if score >= 0.0 { 1.0 } else { -1.0 };
        if rng.random_bool(LABEL_FLIP_PROB) {
            y = -y;
        }
        features.push(x);
        labels.push(y);
    }
    Ok(LogisticRegression {
        dim,
        features,
        labels,
        batch_size: DEFAULT_BATCH_SIZE.min(n_samples),
    })
}

impl LogisticRegression {
    pub fn with_batch_size(mut self, batch_size: usize) -> Result<Self> {
        if batch_size == 0 || batch_size > self.features.len() {
            return Err(Error::Config(format!(
                "batch_size must be in 1..={}, got {batch_size}",
                self.features.len()
            )));
        }
        self.batch_size = batch_size;
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    fn batch_range(&self, batch: usize) -> Result<std::ops::Range<usize>> {
        if batch >= self.n_batches() {
            return Err(Error::Config(format!(
                "batch {batch} out of range (have {})",
                self.n_batches()
            )));
        }
        let start = batch * self.batch_size;
        let end = (start + self.batch_size).min(self.features.len());
        Ok(start..end)
    }

    /// One sample per row, label in the last column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (x, y) in self.features.iter().zip(&self.labels) {
            for v in x {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{y}\n"));
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols: Vec<f64> = Vec::new();
            for tok in line.split(',') {
                cols.push(tok.trim().parse().map_err(|e| {
                    Error::Config(format!("dataset line {}: {e}", lineno + 1))
                })?);
            }
            if cols.len() < 2 {
                return Err(Error::Config(format!(
                    "dataset line {}: need features and a label",
                    lineno + 1
                )));
            }
            let y = cols.pop().unwrap();
            features.push(cols);
            labels.push(y);
        }
        let dim = features
            .first()
            .map(|x| x.len())
            .ok_or_else(|| Error::Config("empty dataset".into()))?;
        if features.iter().any(|x| x.len() != dim) {
            return Err(Error::Config("ragged dataset rows".into()));
        }
        let n = features.len();
        Ok(Self {
            dim,
            features,
            labels,
            batch_size: DEFAULT_BATCH_SIZE.min(n),
        })
    }
}

fn softplus(u: f64) -> f64 {
    // ln(1 + e^u) without overflow
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl Problem for LogisticRegression {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_batches(&self) -> usize {
        self.features.len().div_ceil(self.batch_size)
    }

    fn loss(&self, theta: &ParamVector, batch: usize) -> Result<f64> {
        let range = self.batch_range(batch)?;
        let n = range.len() as f64;
        let mut total = 0.0;
        for i in range {
            let z: f64 = self.features[i]
                .iter()
                .zip(theta.values())
                .map(|(x, t)| x * t)
                .sum();
            total += softplus(-self.labels[i] * z);
        }
        Ok(total / n)
    }

    fn gradient(&self, theta: &ParamVector, batch: usize) -> Result<GradVector> {
        let range = self.batch_range(batch)?;
        let n = range.len() as f64;
        let mut g = vec![0.0; self.dim];
        for i in range {
            let z: f64 = self.features[i]
                .iter()
                .zip(theta.values())
                .map(|(x, t)| x * t)
                .sum();
            let y = self.labels[i];
            // d/dz softplus(-y z) = -y * sigmoid(-y z)
            let coeff = -y * sigmoid(-y * z) / n;
            for (gi, x) in g.iter_mut().zip(&self.features[i]) {
                *gi += coeff * x;
            }
        }
        Ok(GradVector::new(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{finite_diff_gradient, random_point};

    #[test]
    fn loss_at_origin_is_ln2() {
        let p = make_logistic(8, 64, 5).unwrap();
        let theta = ParamVector::single_group(vec![0.0; 8]).unwrap();
        for b in 0..p.n_batches() {
            let loss = p.loss(&theta, b).unwrap();
            assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_at_origin_is_half_mean_label_feature() {
        let p = make_logistic(4, 32, 9).unwrap().with_batch_size(32).unwrap();
        let theta = ParamVector::single_group(vec![0.0; 4]).unwrap();
        let g = p.gradient(&theta, 0).unwrap();
        let mut expected = vec![0.0; 4];
        for (x, y) in p.features.iter().zip(&p.labels) {
            for (e, xi) in expected.iter_mut().zip(x) {
                *e += -y * xi / 2.0 / 32.0;
            }
        }
        for (a, b) in g.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicating_samples_keeps_gradient() {
        let p = make_logistic(3, 16, 2).unwrap().with_batch_size(16).unwrap();
        let mut doubled = p.clone();
        doubled.features.extend(p.features.clone());
        doubled.labels.extend(p.labels.clone());
        doubled.batch_size = 32;
        let theta = random_point(3, 8, 1.0);
        let g1 = p.gradient(&theta, 0).unwrap();
        let g2 = doubled.gradient(&theta, 0).unwrap();
        for (a, b) in g1.values().iter().zip(g2.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = make_logistic(6, 64, 13).unwrap();
        for pt in 0..5u64 {
            let theta = random_point(6, 900 + pt, 2.0);
            let batch = (pt as usize) % p.n_batches();
            let g = p.gradient(&theta, batch).unwrap();
            let fd = finite_diff_gradient(&p, &theta, batch, 1e-6).unwrap();
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
    fn csv_round_trip() {
        let p = make_logistic(3, 10, 21).unwrap();
        let text = p.to_csv();
        let q = LogisticRegression::from_csv(&text).unwrap();
        assert_eq!(p.dim, q.dim);
        assert_eq!(p.labels, q.labels);
        for (a, b) in p.features.iter().zip(&q.features) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn last_batch_may_be_short() {
        let p = make_logistic(2, 10, 4).unwrap().with_batch_size(4).unwrap();
        assert_eq!(p.n_batches(), 3);
        let theta = ParamVector::single_group(vec![0.1, -0.2]).unwrap();
        assert!(p.loss(&theta, 2).unwrap().is_finite());
        assert!(p.loss(&theta, 3).is_err());
    }
}
