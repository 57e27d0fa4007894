//! Flat parameter and gradient vectors with per-coordinate group labels.
//!
//! Parameters are stored as a single flat `f64` array; grouping only matters
//! for the momentum-scope statistic (`group_max_abs`), so a parallel array of
//! group ids is enough. Vectors are immutable after construction; optimizer
//! steps build a new vector instead of mutating in place.

use crate::error::{Error, Result};

/// Flat parameter vector with a group id per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    group_ids: Vec<usize>,
}

impl ParamVector {
    /// Builds a vector with explicit group membership per coordinate.
    pub fn new(values: Vec<f64>, group_ids: Vec<usize>) -> Result<Self> {
        if values.len() != group_ids.len() {
            return Err(Error::Dimension {
                expected: values.len(),
                got: group_ids.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter at index {i}")));
        }
        Ok(Self { values, group_ids })
    }

    /// Builds a vector where every coordinate belongs to group 0.
    pub fn single_group(values: Vec<f64>) -> Result<Self> {
        let ids = vec![0; values.len()];
        Self::new(values, ids)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn group_ids(&self) -> &[usize] {
        &self.group_ids
    }

    /// Replaces the values, keeping group structure. Used by optimizer steps.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.group_ids.clone())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Gradient of the objective with respect to a `ParamVector`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradVector {
    values: Vec<f64>,
}

impl GradVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Coordinate-wise binary operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Applies `op` coordinate-wise. Division requires every divisor coordinate
/// to be nonzero.
pub fn elementwise(op: ElemOp, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    if op == ElemOp::Div {
        if let Some(i) = b.iter().position(|&x| x == 0.0) {
            return Err(Error::Domain(format!("division by zero at index {i}")));
        }
    }
    let out = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| match op {
            ElemOp::Add => x + y,
            ElemOp::Sub => x - y,
            ElemOp::Mul => x * y,
            ElemOp::Div => x / y,
        })
        .collect();
    Ok(out)
}

/// Per-group maxima of `|v_i|`, indexable by group id.
#[derive(Debug, Clone)]
pub struct GroupMax {
    per_group: Vec<f64>,
}

impl GroupMax {
    /// Value for the group that coordinate `i` of the source vector belongs to.
    pub fn for_group(&self, group_id: usize) -> f64 {
        self.per_group[group_id]
    }

    pub fn values(&self) -> &[f64] {
        &self.per_group
    }
}

/// Computes max |v_i| within each group. Group ids must cover 0..=max_id with
/// no empty group.
pub fn group_max_abs(v: &[f64], groups: &[usize]) -> Result<GroupMax> {
    if v.len() != groups.len() {
        return Err(Error::Dimension {
            expected: v.len(),
            got: groups.len(),
        });
    }
    if groups.is_empty() {
        return Err(Error::Config("group_max_abs on empty vector".into()));
    }
    let n_groups = groups.iter().max().copied().unwrap_or(0) + 1;
    let mut max = vec![f64::NEG_INFINITY; n_groups];
    for (&x, &g) in v.iter().zip(groups) {
        if x.abs() > max[g] {
            max[g] = x.abs();
        }
    }
    if let Some(g) = max.iter().position(|m| *m == f64::NEG_INFINITY) {
        return Err(Error::Config(format!("group {g} has no members")));
    }
    Ok(GroupMax { per_group: max })
}

/// Max |v_i| over the whole vector, ignoring groups.
pub fn global_max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
