//! The iteration-`t` programs as plain data: the objective and constraints of
//! the "maximize the sum of the `t` smallest expectations" program, its
//! linearization with auxiliary variables, and the layout of the dual point.

use std::cmp::Ordering;

use crate::lp::{solve_dense_lp, DenseLP, LpOutcome, RowSense, Sense};
use crate::model::{ExpectedVector, SparseDistribution, SparseWeights, StateRecord, TAU_DIST};

use super::ReductionError;

/// Iteration index `t` and the constants fixed by earlier iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramContext {
    pub t: usize,
    pub z_prefix: Vec<f64>,
    pub z_t: Option<f64>,
}

impl ProgramContext {
    pub fn new(t: usize, z_prefix: Vec<f64>) -> Result<Self, ReductionError> {
        if t == 0 || z_prefix.len() != t - 1 {
            return Err(ReductionError::Context { t, prefix: z_prefix.len() });
        }
        Ok(Self { t, z_prefix, z_t: None })
    }

    pub fn with_target(&self, z_t: f64) -> Self {
        Self {
            z_t: Some(z_t),
            ..self.clone()
        }
    }

    /// `Z_l = z_1 + ... + z_l` for `l = 1..t`; needs `z_t`.
    pub fn cumulative(&self) -> Result<Vec<f64>, ReductionError> {
        let z_t = self.z_t.ok_or(ReductionError::MissingTarget)?;
        let mut out = Vec::with_capacity(self.t);
        let mut acc = 0.0;
        for &z in self.z_prefix.iter().chain(std::iter::once(&z_t)) {
            acc += z;
            out.push(acc);
        }
        Ok(out)
    }

    /// `Z_l` for `l < t`.
    pub fn prefix_targets(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.z_prefix
            .iter()
            .map(|z| {
                acc += z;
                acc
            })
            .collect()
    }

    pub fn prefix_sum(&self) -> f64 {
        self.z_prefix.iter().sum()
    }
}

/// Sum of the `k` smallest entries of `v`.
pub fn smallest_sum(v: &[f64], k: usize) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.iter().take(k).sum()
}

fn prefix_sums(e: &ExpectedVector) -> Vec<f64> {
    let mut s = e.0.clone();
    s.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    s.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// `sum_{i<=t} E_sorted_i(x) - sum_{i<t} z_i`.
pub fn p1_objective(x: &SparseDistribution, ctx: &ProgramContext) -> f64 {
    smallest_sum(&x.expected_utilities().0, ctx.t) - ctx.prefix_sum()
}

/// `x` is a distribution and the `l` smallest expectations sum to at least
/// `Z_l - tol` for every `l < t`.
pub fn p1_feasible(x: &SparseDistribution, ctx: &ProgramContext, tol: f64) -> bool {
    if (x.total() - 1.0).abs() > TAU_DIST || x.iter().any(|(_, p)| p < 0.0) {
        return false;
    }
    let sums = prefix_sums(&x.expected_utilities());
    ctx.prefix_targets()
        .iter()
        .zip(&sums)
        .all(|(target, have)| *have >= target - tol)
}

/// Largest shortfall of the prefix constraints `sum of l smallest >= Z_l`,
/// `l = 1..t`, for a sub-probability vector.
pub fn p2_shortfall(x: &SparseWeights, n: usize, ctx: &ProgramContext) -> Result<f64, ReductionError> {
    let sums = prefix_sums(&x.expected(n));
    Ok(ctx
        .cumulative()?
        .iter()
        .zip(&sums)
        .map(|(target, have)| target - have)
        .fold(0.0, f64::max))
}

/// Witness for "the `k` smallest entries of `v` sum to at least `c`":
/// `y = v_sorted_k` and `m_i = max(0, y - v_i)`.
pub fn linearization_witness(v: &[f64], k: usize) -> (f64, Vec<f64>) {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let y = s[k - 1];
    let m = v.iter().map(|vi| (y - vi).max(0.0)).collect();
    (y, m)
}

/// `k*y - sum m >= c`, `m_i >= y - v_i`, `m_i >= 0`, all within `tol`.
pub fn auxiliary_constraints_hold(v: &[f64], c: f64, k: usize, y: f64, m: &[f64], tol: f64) -> bool {
    let head = k as f64 * y - m.iter().sum::<f64>() >= c - tol;
    head && m.iter().zip(v).all(|(mi, vi)| *mi >= -tol && mi - y + vi >= -tol)
}

/// Whether the auxiliary system for `(v, c, k)` has a solution with `y` free,
/// decided by the dense simplex.
pub fn auxiliary_system_feasible(v: &[f64], c: f64, k: usize) -> bool {
    let n = v.len();
    // Variables: y (free), m_1..m_n (>= 0). Feasibility only.
    let mut lp = DenseLP::new(Sense::Minimize, vec![0.0; n + 1]);
    lp.set_free(0);
    let mut head = vec![k as f64];
    head.extend(std::iter::repeat_n(-1.0, n));
    lp.add_row(head, RowSense::Ge, c);
    for i in 0..n {
        let mut row = vec![0.0; n + 1];
        row[0] = -1.0;
        row[i + 1] = 1.0;
        lp.add_row(row, RowSense::Ge, -v[i]);
    }
    matches!(solve_dense_lp(&lp), Ok(LpOutcome::Optimal { .. }))
}

/// Assignment of the dual variables `q_l` (`l = 1..t`) and `v_{l,i}`.
///
/// Flattened as `q_1..q_t` followed by `v_{1,1..n}, ..., v_{t,1..n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    pub q: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

impl DualPoint {
    pub fn dimension(t: usize, n: usize) -> usize {
        t * (n + 1)
    }

    pub fn q_index(l: usize) -> usize {
        l - 1
    }

    pub fn v_index(t: usize, n: usize, l: usize, i: usize) -> usize {
        t + (l - 1) * n + i
    }

    pub fn zeros(t: usize, n: usize) -> Self {
        Self {
            q: vec![0.0; t],
            v: vec![vec![0.0; n]; t],
        }
    }

    pub fn from_flat(t: usize, n: usize, y: &[f64]) -> Self {
        Self {
            q: y[..t].to_vec(),
            v: (1..=t).map(|l| y[Self::v_index(t, n, l, 0)..Self::v_index(t, n, l, 0) + n].to_vec()).collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.q.clone();
        for row in &self.v {
            out.extend_from_slice(row);
        }
        out
    }

    /// `c_i = sum_l v_{l,i}`.
    pub fn agent_weights(&self) -> Vec<f64> {
        let n = self.v.first().map_or(0, |r| r.len());
        (0..n).map(|i| self.v.iter().map(|row| row[i]).sum()).collect()
    }
}

/// Sparse solution of the linearized minimization program.
#[derive(Clone, Debug, PartialEq)]
pub struct P3Solution {
    pub x: SparseWeights,
    pub y: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    pub objective: f64,
}

impl P3Solution {
    /// Largest violation of the linearized constraints (and signs).
    pub fn max_violation(&self, n: usize, ctx: &ProgramContext) -> Result<f64, ReductionError> {
        let z = ctx.cumulative()?;
        let e = self.x.expected(n);
        let mut worst = 0.0f64;
        for l in 1..=ctx.t {
            let head = l as f64 * self.y[l - 1] - self.m[l - 1].iter().sum::<f64>();
            worst = worst.max(z[l - 1] - head);
            for i in 0..n {
                worst = worst.max(-(self.m[l - 1][i] - self.y[l - 1] + e.0[i]));
                worst = worst.max(-self.m[l - 1][i]);
            }
        }
        for (_, w) in self.x.iter() {
            worst = worst.max(-w);
        }
        Ok(worst)
    }

    pub fn scale(&mut self, factor: f64) {
        self.x.scale(factor);
        for v in self.y.iter_mut() {
            *v *= factor;
        }
        for row in self.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= factor;
            }
        }
        self.objective *= factor;
    }
}

/// A state used as a lazily generated dual row, ordered by handle.
#[derive(Clone, Debug)]
pub struct StateKey(pub StateRecord);

impl PartialEq for StateKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.handle == other.0.handle
    }
}

impl Eq for StateKey {}

impl PartialOrd for StateKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StateKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.handle.cmp(&other.0.handle)
    }
}
