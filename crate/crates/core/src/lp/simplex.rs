//! Dense two-phase tableau simplex for small programs.
//!
//! Pivoting uses Dantzig's rule until a run of degenerate pivots is seen and
//! then switches to Bland's rule for the rest of the phase, which rules out
//! cycling.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// `opt c^T x` subject to linear rows and per-variable lower bounds
/// (`f64::NEG_INFINITY` marks a free variable).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLP {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower_bounds: Vec<f64>,
}

impl DenseLP {
    /// A program over `vars` non-negative variables with no rows yet.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let vars = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            lower_bounds: vec![0.0; vars],
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, sense: RowSense, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coefficients,
            sense,
            rhs,
        });
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.lower_bounds[var] = f64::NEG_INFINITY;
        self
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.constraints {
            let lhs: f64 = row.coefficients.iter().zip(x).map(|(a, v)| a * v).sum();
            let gap = match row.sense {
                RowSense::Ge => row.rhs - lhs,
                RowSense::Le => lhs - row.rhs,
                RowSense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        for (v, lb) in x.iter().zip(&self.lower_bounds) {
            worst = worst.max(lb - v);
        }
        worst
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<f64>, f64)> {
        match self {
            Self::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLength { row: usize, got: usize, expected: usize },
    #[error("lower-bound vector has length {got}, expected {expected}")]
    BoundLength { got: usize, expected: usize },
    #[error("non-finite coefficient in the program")]
    NonFinite,
    #[error("simplex did not finish within {0} pivots")]
    IterationLimit(usize),
}

struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * (self.cols + 1) + self.cols]
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.cols + 1;
        &self.data[r * w..(r + 1) * w]
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let w = self.cols + 1;
        let p = self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.row(pr).to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f != 0.0 {
                for (v, pv) in self.data[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        let f = cost[pc];
        if f != 0.0 {
            for (v, pv) in cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Reduced-cost row (last entry is minus the objective value) for
    /// minimizing `costs` over the current basis.
    fn reduced_costs(&self, costs: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = costs.to_vec();
        out.push(0.0);
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for (o, v) in out.iter_mut().zip(self.row(r)) {
                    *o -= cb * v;
                }
            }
        }
        out
    }

    /// Runs primal simplex minimizing the cost row in place. Columns with
    /// `allowed[c] == false` never enter. Returns false if unbounded.
    fn optimize(&mut self, cost: &mut [f64], allowed: &[bool], limit: usize) -> Result<bool, LpError> {
        let mut degenerate = 0usize;
        for _ in 0..limit {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut most = -COST_TOL;
            for c in 0..self.cols {
                if !allowed[c] || cost[c] >= -COST_TOL {
                    continue;
                }
                if bland {
                    enter = Some(c);
                    break;
                }
                if cost[c] < most {
                    most = cost[c];
                    enter = Some(c);
                }
            }
            let Some(pc) = enter else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12 * (1.0 + lratio.abs())
                            || (ratio <= lratio + 1e-12 * (1.0 + lratio.abs()) && self.basis[r] < self.basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc, cost);
        }
        Err(LpError::IterationLimit(limit))
    }
}

fn validate(lp: &DenseLP) -> Result<(), LpError> {
    let n = lp.vars();
    if lp.lower_bounds.len() != n {
        return Err(LpError::BoundLength {
            got: lp.lower_bounds.len(),
            expected: n,
        });
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite);
    }
    for (row, c) in lp.constraints.iter().enumerate() {
        if c.coefficients.len() != n {
            return Err(LpError::RowLength {
                row,
                got: c.coefficients.len(),
                expected: n,
            });
        }
        if !c.rhs.is_finite() || c.coefficients.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
    }
    if lp.lower_bounds.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(LpError::NonFinite);
    }
    Ok(())
}

/// Solves `lp` exactly (up to floating-point pivoting tolerances).
pub fn solve_dense_lp(lp: &DenseLP) -> Result<LpOutcome, LpError> {
    validate(lp)?;
    let n = lp.vars();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Structural columns: x_j = lb_j + x'_j, or x_j = x+ - x- when free.
    let mut structural: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        structural.push((j, 1.0));
        if lp.lower_bounds[j] == f64::NEG_INFINITY {
            structural.push((j, -1.0));
        }
    }
    let shift: Vec<f64> = lp
        .lower_bounds
        .iter()
        .map(|&lb| if lb.is_finite() { lb } else { 0.0 })
        .collect();

    let m = lp.constraints.len();
    let mut rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::with_capacity(m);
    for c in &lp.constraints {
        let mut coeffs: Vec<f64> = structural.iter().map(|&(j, s)| s * c.coefficients[j]).collect();
        let mut rhs = c.rhs - c.coefficients.iter().zip(&shift).map(|(a, l)| a * l).sum::<f64>();
        let mut sense = c.sense;
        if rhs < 0.0 {
            rhs = -rhs;
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            sense = match sense {
                RowSense::Ge => RowSense::Le,
                RowSense::Le => RowSense::Ge,
                RowSense::Eq => RowSense::Eq,
            };
        }
        rows.push((coeffs, sense, rhs));
    }

    let ns = structural.len();
    let slacks = rows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != RowSense::Le).count();
    let cols = ns + slacks + artificials;
    let width = cols + 1;
    let mut data = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let mut is_artificial = vec![false; cols];
    let (mut next_slack, mut next_art) = (ns, ns + slacks);
    for (r, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        data[r * width..r * width + ns].copy_from_slice(coeffs);
        data[r * width + cols] = *rhs;
        match sense {
            RowSense::Le => {
                data[r * width + next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            RowSense::Ge => {
                data[r * width + next_slack] = -1.0;
                next_slack += 1;
                data[r * width + next_art] = 1.0;
                is_artificial[next_art] = true;
                basis[r] = next_art;
                next_art += 1;
            }
            RowSense::Eq => {
                data[r * width + next_art] = 1.0;
                is_artificial[next_art] = true;
                basis[r] = next_art;
                next_art += 1;
            }
        }
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        data,
        basis,
    };
    let limit = 200 * (m + cols) + 10_000;

    if artificials > 0 {
        let phase1: Vec<f64> = (0..cols).map(|c| if is_artificial[c] { 1.0 } else { 0.0 }).collect();
        let mut cost = tab.reduced_costs(&phase1);
        let allowed = vec![true; cols];
        tab.optimize(&mut cost, &allowed, limit)?;
        let infeasibility = -cost[cols];
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if !is_artificial[tab.basis[r]] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for c in 0..cols {
                let a = tab.at(r, c).abs();
                if !is_artificial[c] && a > 1e-9 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((c, a));
                }
            }
            if let Some((c, _)) = best {
                tab.pivot(r, c, &mut cost);
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    for (k, &(j, s)) in structural.iter().enumerate() {
        phase2[k] = sign * s * lp.objective[j];
    }
    let mut cost = tab.reduced_costs(&phase2);
    let allowed: Vec<bool> = is_artificial.iter().map(|a| !a).collect();
    if !tab.optimize(&mut cost, &allowed, limit)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut column_value = vec![0.0; cols];
    for r in 0..m {
        column_value[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let mut x = shift;
    for (k, &(j, s)) in structural.iter().enumerate() {
        x[j] += s * column_value[k];
    }
    let value = lp.evaluate(&x);
    Ok(LpOutcome::Optimal { x, value })
}
