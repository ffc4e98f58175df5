//! Sparse primal recovery: re-solve `min c^T x, A x >= b, x >= 0` over only
//! the columns whose dual rows the ellipsoid cut on, plus a set of columns
//! that are always kept, and set every other variable to zero.

use std::collections::BTreeMap;
use std::fmt::Debug;

use thiserror::Error;

use super::ellipsoid::{CutLog, RowId};
use super::simplex::{solve_dense_lp, DenseLP, LpError, LpOutcome, RowSense, Sense};

/// One primal variable: its column of `A` and its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalColumn<R> {
    pub key: RowId<R>,
    pub coefficients: Vec<f64>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredPrimal<R> {
    /// Value of every column of the reduced program, in key order.
    pub values: Vec<(PrimalColumn<R>, f64)>,
    pub objective: f64,
}

impl<R> RecoveredPrimal<R> {
    pub fn support(&self) -> impl Iterator<Item = &(PrimalColumn<R>, f64)> {
        self.values.iter().filter(|(_, v)| *v > 0.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoverError {
    #[error("the reduced primal program is infeasible")]
    Infeasible,
    #[error("the reduced primal program is unbounded")]
    Unbounded,
    #[error("column has {got} coefficients, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Columns of the reduced primal: `always` first, then every distinct
/// non-sign row cut on in `log`.
pub fn reduced_columns<R: Clone + Ord + Debug>(log: &CutLog<R>, always: &[PrimalColumn<R>]) -> Vec<PrimalColumn<R>> {
    let mut by_key: BTreeMap<RowId<R>, PrimalColumn<R>> = BTreeMap::new();
    for col in always {
        by_key.entry(col.key.clone()).or_insert_with(|| col.clone());
    }
    for cut in log.feasibility_cuts() {
        let Some(row) = &cut.row else { continue };
        if matches!(row, RowId::Sign(_)) {
            continue;
        }
        by_key.entry(row.clone()).or_insert_with(|| PrimalColumn {
            key: row.clone(),
            coefficients: cut.normal.clone(),
            cost: cut.bound,
        });
    }
    by_key.into_values().collect()
}

/// Solves the reduced primal exactly over `columns` with right-hand side `rhs`.
pub fn solve_reduced<R: Clone>(columns: Vec<PrimalColumn<R>>, rhs: &[f64]) -> Result<RecoveredPrimal<R>, RecoverError> {
    let rows = rhs.len();
    for c in &columns {
        if c.coefficients.len() != rows {
            return Err(RecoverError::Dimension {
                got: c.coefficients.len(),
                expected: rows,
            });
        }
    }
    let mut lp = DenseLP::new(Sense::Minimize, columns.iter().map(|c| c.cost).collect());
    for (r, &b) in rhs.iter().enumerate() {
        lp.add_row(columns.iter().map(|c| c.coefficients[r]).collect(), RowSense::Ge, b);
    }
    match solve_dense_lp(&lp)? {
        LpOutcome::Optimal { x, value } => Ok(RecoveredPrimal {
            values: columns.into_iter().zip(x).collect(),
            objective: value,
        }),
        LpOutcome::Infeasible => Err(RecoverError::Infeasible),
        LpOutcome::Unbounded => Err(RecoverError::Unbounded),
    }
}

/// Builds the reduced primal from the cut log and solves it.
pub fn recover_sparse_primal<R: Clone + Ord + Debug>(
    log: &CutLog<R>,
    always: &[PrimalColumn<R>],
    rhs: &[f64],
) -> Result<RecoveredPrimal<R>, RecoverError> {
    solve_reduced(reduced_columns(log, always), rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::ellipsoid::{ellipsoid_solve, CutKind, CutRecord, EllipsoidParams, EllipsoidState, ExplicitDual};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(j: usize, coefficients: Vec<f64>, cost: f64) -> PrimalColumn<usize> {
        PrimalColumn {
            key: RowId::Dynamic(j),
            coefficients,
            cost,
        }
    }

    #[test]
    fn all_columns_cut_reproduces_optimum() {
        // min x0 + 2 x1  s.t. x0 + x1 >= 1, x1 >= 0.5
        let cols = vec![column(0, vec![1.0, 0.0], 1.0), column(1, vec![1.0, 1.0], 2.0)];
        let mut log = CutLog::default();
        for c in &cols {
            log.records.push(CutRecord {
                iteration: 0,
                kind: CutKind::Feasibility,
                row: Some(c.key.clone()),
                point: vec![0.0, 0.0],
                objective: 0.0,
                normal: c.coefficients.clone(),
                bound: c.cost,
            });
        }
        let out = recover_sparse_primal(&log, &[], &[1.0, 0.5]).unwrap();
        assert!((out.objective - 1.5).abs() < 1e-9);
    }

    #[test]
    fn empty_log_uses_only_always_included() {
        let always = vec![column(7, vec![2.0], 3.0)];
        let out = recover_sparse_primal(&CutLog::default(), &always, &[1.0]).unwrap();
        assert_eq!(out.values.len(), 1);
        assert!((out.values[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_reduction_is_reported() {
        let always = vec![column(0, vec![0.0], 1.0)];
        let err = recover_sparse_primal(&CutLog::default(), &always, &[1.0]).unwrap_err();
        assert_eq!(err, RecoverError::Infeasible);
    }

    #[test]
    fn random_six_column_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rows = rng.gen_range(1..=3);
            let cols = 6;
            let a: Vec<Vec<f64>> = (0..cols)
                .map(|_| (0..rows).map(|_| rng.gen_range(0.1..1.0)).collect())
                .collect();
            let c: Vec<f64> = (0..cols).map(|_| rng.gen_range(1.0..4.0)).collect();
            let b: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.5..2.0)).collect();
            let all: Vec<PrimalColumn<usize>> = (0..cols).map(|j| column(j, a[j].clone(), c[j])).collect();
            let opt = solve_reduced(all, &b).unwrap().objective;

            let upper: Vec<f64> = (0..rows)
                .map(|r| (0..cols).map(|j| c[j] / a[j][r]).fold(f64::INFINITY, f64::min))
                .collect();
            let bounding: Vec<PrimalColumn<usize>> = (0..rows)
                .map(|r| {
                    let j = (0..cols)
                        .min_by(|&x, &y| (c[x] / a[x][r]).total_cmp(&(c[y] / a[y][r])))
                        .unwrap();
                    column(j, a[j].clone(), c[j])
                })
                .collect();
            let mut oracle = ExplicitDual {
                columns: a.clone(),
                costs: c.clone(),
                beta: 0.0,
                tau: 1e-9,
            };
            let start = EllipsoidState::enclosing_box(&upper, 1.0).unwrap();
            let out = ellipsoid_solve(start, &b, &mut oracle, &EllipsoidParams::default()).unwrap();
            let rec = recover_sparse_primal(&out.log, &bounding, &b).unwrap();
            assert!(rec.objective <= opt + 1e-6, "{} vs {}", rec.objective, opt);
            assert!(rec.objective >= opt - 1e-9);
        }
    }
}
