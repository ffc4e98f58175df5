//! Ellipsoid method on a dual program `max b^T y s.t. A^T y <= c, y >= 0`,
//! driven by an approximate separation oracle.
//!
//! Approximately feasible centers trigger optimality cuts, violated rows
//! trigger feasibility cuts. Every cut is logged so that the primal can later
//! be re-solved over only the columns whose rows were cut on.

use std::fmt::Debug;

use serde_json::json;
use thiserror::Error;

/// Which dual row a feasibility cut came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowId<R> {
    /// A lazily discovered row (one primal column per key).
    Dynamic(R),
    /// One of the polynomially many rows that are always present.
    Fixed(usize),
    /// The sign constraint `y_k >= 0`.
    Sign(usize),
}

/// Answer of a separation oracle at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum Separation<R> {
    /// `normal . y <= bound` holds for every feasible `y` but fails at the
    /// queried point.
    Violated { row: RowId<R>, normal: Vec<f64>, bound: f64 },
    ApproxFeasible,
}

pub trait SeparationOracle {
    type Row: Clone + Ord + Debug;
    fn separate(&mut self, point: &[f64]) -> Separation<Self::Row>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutKind {
    Feasibility,
    Optimality,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutRecord<R> {
    pub iteration: usize,
    pub kind: CutKind,
    pub row: Option<RowId<R>>,
    pub point: Vec<f64>,
    /// Dual objective at `point`.
    pub objective: f64,
    /// For feasibility cuts, the violated row `normal . y <= bound`.
    pub normal: Vec<f64>,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutLog<R> {
    pub records: Vec<CutRecord<R>>,
}

impl<R> Default for CutLog<R> {
    fn default() -> Self {
        Self { records: Vec::new() }
    }
}

impl<R: Clone + Ord + Debug> CutLog<R> {
    pub fn feasibility_cuts(&self) -> impl Iterator<Item = &CutRecord<R>> {
        self.records.iter().filter(|r| r.kind == CutKind::Feasibility)
    }

    pub fn feasibility_count(&self) -> usize {
        self.feasibility_cuts().count()
    }

    /// Distinct lazily generated rows that were cut on.
    pub fn dynamic_rows(&self) -> Vec<&R> {
        let mut rows: Vec<&R> = self
            .feasibility_cuts()
            .filter_map(|r| match &r.row {
                Some(RowId::Dynamic(k)) => Some(k),
                _ => None,
            })
            .collect();
        rows.sort();
        rows.dedup();
        rows
    }

    /// Line-delimited JSON, one object per cut.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let kind = match r.kind {
                CutKind::Feasibility => "feasibility",
                CutKind::Optimality => "optimality",
            };
            let row = r.row.as_ref().map(|row| format!("{row:?}"));
            let line = json!({
                "iteration": r.iteration,
                "kind": kind,
                "row": row,
                "objective": r.objective,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipsoidError {
    #[error("no approximately feasible point found in {iterations} iterations")]
    NoFeasiblePoint { iterations: usize },
    #[error("objective has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("initial region must have positive finite extent in every coordinate")]
    BadRegion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidParams {
    /// Multiplies the semi-axes of the ellipsoid enclosing the initial box.
    pub radius_scale: f64,
    /// The constant `c_K` in the iteration cap `c_K * d^2 * ln(R / tol)`.
    pub iteration_factor: f64,
    /// Hard override of the iteration cap.
    pub max_iterations: Option<usize>,
    /// Stop once no point of the ellipsoid can beat the best value by more
    /// than this (relative to `1 + |best|`).
    pub value_tol: f64,
    /// Violation allowed by separation oracles before a row counts as violated.
    pub tau_lp: f64,
    /// Stop when the shape matrix loses positive definiteness past this.
    pub tau_psd: f64,
    pub early_stop: bool,
    /// Cut at the violated bound (or at the best value) instead of through
    /// the center.
    pub deep_cuts: bool,
    /// Query the origin before the first center.
    pub probe_origin: bool,
}

impl Default for EllipsoidParams {
    fn default() -> Self {
        Self {
            radius_scale: 1.0,
            iteration_factor: 8.0,
            max_iterations: None,
            value_tol: 1e-9,
            tau_lp: 1e-7,
            tau_psd: 1e-9,
            early_stop: true,
            deep_cuts: true,
            probe_origin: true,
        }
    }
}

impl EllipsoidParams {
    /// `ceil(c_K * d^2 * ln(R / value_tol))`, or the override.
    pub fn iteration_cap(&self, dim: usize, radius: f64) -> usize {
        if let Some(k) = self.max_iterations {
            return k;
        }
        let d = dim.max(1) as f64;
        let ratio = (radius / self.value_tol).ln().max(1.0);
        (self.iteration_factor * d * d * ratio).ceil() as usize
    }
}

/// Result of one ellipsoid update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutEffect {
    Shrunk,
    /// The kept half-space misses the ellipsoid.
    Empty,
    /// The shape matrix is numerically singular along the cut.
    Degenerate,
}

/// `{y : (y - center)^T P^{-1} (y - center) <= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidState {
    pub center: Vec<f64>,
    /// Row-major `d x d` shape matrix `P`.
    pub shape: Vec<f64>,
    pub iteration: usize,
    /// `ln det P`, tracked through the updates.
    pub log_det: f64,
}

impl EllipsoidState {
    /// Smallest axis-aligned ellipsoid of the form `diag(d * h_k^2)` that
    /// contains the box `[0, upper]`, with semi-axes multiplied by `scale`.
    pub fn enclosing_box(upper: &[f64], scale: f64) -> Result<Self, EllipsoidError> {
        let d = upper.len();
        if d == 0 || upper.iter().any(|u| !(u.is_finite() && *u > 0.0)) || !(scale >= 1.0) {
            return Err(EllipsoidError::BadRegion);
        }
        let mut shape = vec![0.0; d * d];
        let mut log_det = 0.0;
        for k in 0..d {
            let h = upper[k] / 2.0;
            let p = d as f64 * h * h * scale * scale;
            shape[k * d + k] = p;
            log_det += p.ln();
        }
        Ok(Self {
            center: upper.iter().map(|u| u / 2.0).collect(),
            shape,
            iteration: 0,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn shape_times(&self, a: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|r| self.shape[r * d..(r + 1) * d].iter().zip(a).map(|(p, v)| p * v).sum())
            .collect()
    }

    /// Largest semi-axis bound `sqrt(max_k P_kk)`.
    pub fn radius(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|k| self.shape[k * d + k]).fold(0.0, f64::max).sqrt()
    }

    /// `max b^T y` over the ellipsoid.
    pub fn max_along(&self, b: &[f64]) -> f64 {
        let pb = self.shape_times(b);
        let bpb: f64 = b.iter().zip(&pb).map(|(x, y)| x * y).sum();
        dot(b, &self.center) + bpb.max(0.0).sqrt()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        // Solve P z = y - c by Cholesky and test (y - c)^T z <= 1.
        let d = self.dim();
        let diff: Vec<f64> = y.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let Some(l) = cholesky(&self.shape, d) else {
            return false;
        };
        let mut w = vec![0.0; d];
        for i in 0..d {
            let s: f64 = (0..i).map(|k| l[i * d + k] * w[k]).sum();
            w[i] = (diff[i] - s) / l[i * d + i];
        }
        w.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-9
    }

    /// Keeps `{y : a^T y <= bound}` where `bound <= a^T center`, replacing the
    /// ellipsoid with the minimum-volume ellipsoid containing the kept part.
    pub fn cut(&mut self, a: &[f64], bound: f64, tau_psd: f64) -> CutEffect {
        let d = self.dim();
        let pa = self.shape_times(a);
        let apa: f64 = a.iter().zip(&pa).map(|(x, y)| x * y).sum();
        let scale = a.iter().map(|v| v * v).sum::<f64>();
        if !(apa.is_finite() && apa > tau_psd * tau_psd * scale.max(1e-300)) {
            return CutEffect::Degenerate;
        }
        let root = apa.sqrt();
        let depth = ((dot(a, &self.center) - bound) / root).max(0.0);
        if depth >= 1.0 {
            return CutEffect::Empty;
        }
        let g: Vec<f64> = pa.iter().map(|v| v / root).collect();
        self.iteration += 1;
        if d == 1 {
            let step = (1.0 + depth) / 2.0;
            self.center[0] -= step * g[0];
            let factor = ((1.0 - depth) / 2.0).powi(2);
            self.shape[0] *= factor;
            self.log_det += factor.ln();
            return CutEffect::Shrunk;
        }
        let df = d as f64;
        let tau = (1.0 + df * depth) / (df + 1.0);
        let sigma = 2.0 * (1.0 + df * depth) / ((df + 1.0) * (1.0 + depth));
        let delta = df * df * (1.0 - depth * depth) / (df * df - 1.0);
        for (c, gv) in self.center.iter_mut().zip(&g) {
            *c -= tau * gv;
        }
        for r in 0..d {
            for c in 0..d {
                let v = delta * (self.shape[r * d + c] - sigma * g[r] * g[c]);
                self.shape[r * d + c] = v;
            }
        }
        for r in 0..d {
            for c in (r + 1)..d {
                let avg = 0.5 * (self.shape[r * d + c] + self.shape[c * d + r]);
                self.shape[r * d + c] = avg;
                self.shape[c * d + r] = avg;
            }
        }
        self.log_det += df * delta.ln() + (1.0 - sigma).ln();
        if (0..d).any(|k| !(self.shape[k * d + k] > 0.0)) {
            return CutEffect::Degenerate;
        }
        CutEffect::Shrunk
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cholesky(p: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = p[i * d + i] - s;
                if v <= 0.0 {
                    return None;
                }
                l[i * d + i] = v.sqrt();
            } else {
                l[i * d + j] = (p[i * d + j] - s) / l[j * d + j];
            }
        }
    }
    Some(l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No point left in the ellipsoid can beat the best value by more than
    /// the tolerance.
    Converged,
    IterationCap,
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct EllipsoidOutcome<R> {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub log: CutLog<R>,
    pub iterations: usize,
    pub stop: StopReason,
    pub final_state: EllipsoidState,
}

/// Maximizes `objective . y` over the approximately feasible region exposed
/// by `oracle`, starting from `initial`.
pub fn ellipsoid_solve<O: SeparationOracle>(
    initial: EllipsoidState,
    objective: &[f64],
    oracle: &mut O,
    params: &EllipsoidParams,
) -> Result<EllipsoidOutcome<O::Row>, EllipsoidError> {
    let d = initial.dim();
    if objective.len() != d {
        return Err(EllipsoidError::Dimension {
            got: objective.len(),
            expected: d,
        });
    }
    let flat = objective.iter().all(|&b| b == 0.0);
    let neg_objective: Vec<f64> = objective.iter().map(|b| -b).collect();
    let cap = params.iteration_cap(d, initial.radius());
    let mut state = initial;
    let mut log = CutLog::default();
    let mut best: Option<(Vec<f64>, f64)> = None;

    if params.probe_origin {
        let origin = vec![0.0; d];
        if oracle.separate(&origin) == Separation::ApproxFeasible {
            best = Some((origin, 0.0));
        }
    }

    let mut stop = StopReason::IterationCap;
    let mut iterations = 0;
    while iterations < cap {
        if let Some((_, value)) = &best {
            if flat {
                stop = StopReason::Converged;
                break;
            }
            if params.early_stop && state.max_along(objective) <= value + params.value_tol * (1.0 + value.abs()) {
                stop = StopReason::Converged;
                break;
            }
        }
        iterations += 1;
        let point = state.center.clone();
        let value = dot(objective, &point);
        let effect = match oracle.separate(&point) {
            Separation::Violated { row, normal, bound } => {
                let at = dot(&normal, &point);
                let cut_at = if params.deep_cuts { bound.min(at) } else { at };
                let effect = state.cut(&normal, cut_at, params.tau_psd);
                log.records.push(CutRecord {
                    iteration: iterations,
                    kind: CutKind::Feasibility,
                    row: Some(row),
                    point,
                    objective: value,
                    normal,
                    bound,
                });
                effect
            }
            Separation::ApproxFeasible => {
                if best.as_ref().is_none_or(|(_, b)| value > *b) {
                    best = Some((point.clone(), value));
                }
                let threshold = best.as_ref().map_or(value, |(_, b)| *b);
                let cut_at = if params.deep_cuts { -threshold } else { -value };
                log.records.push(CutRecord {
                    iteration: iterations,
                    kind: CutKind::Optimality,
                    row: None,
                    point,
                    objective: value,
                    normal: Vec::new(),
                    bound: threshold,
                });
                if flat {
                    CutEffect::Empty
                } else {
                    state.cut(&neg_objective, cut_at, params.tau_psd)
                }
            }
        };
        match effect {
            CutEffect::Shrunk => {}
            CutEffect::Empty => {
                stop = StopReason::Converged;
                break;
            }
            CutEffect::Degenerate => {
                stop = StopReason::Degenerate;
                break;
            }
        }
    }
    if stop == StopReason::IterationCap {
        if let Some((_, value)) = &best {
            if state.max_along(objective) <= value + params.value_tol * (1.0 + value.abs()) {
                stop = StopReason::Converged;
            }
        }
    }
    let Some((best_point, best_value)) = best else {
        return Err(EllipsoidError::NoFeasiblePoint { iterations });
    };
    Ok(EllipsoidOutcome {
        best_point,
        best_value,
        log,
        iterations,
        stop,
        final_state: state,
    })
}

/// Separation for a dual whose rows are listed explicitly: column `j` of the
/// primal gives the row `a_j . y <= c_j`. Rows are approved up to a factor
/// `1 + beta`, which models an approximate oracle.
#[derive(Clone, Debug)]
pub struct ExplicitDual {
    pub columns: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub beta: f64,
    pub tau: f64,
}

impl SeparationOracle for ExplicitDual {
    type Row = usize;

    fn separate(&mut self, y: &[f64]) -> Separation<usize> {
        for (k, &v) in y.iter().enumerate() {
            if v < -self.tau {
                let mut normal = vec![0.0; y.len()];
                normal[k] = -1.0;
                return Separation::Violated {
                    row: RowId::Sign(k),
                    normal,
                    bound: 0.0,
                };
            }
        }
        for (j, col) in self.columns.iter().enumerate() {
            if dot(col, y) > (1.0 + self.beta) * self.costs[j] + self.tau {
                return Separation::Violated {
                    row: RowId::Dynamic(j),
                    normal: col.clone(),
                    bound: self.costs[j],
                };
            }
        }
        Separation::ApproxFeasible
    }
}
