//! Approximate separation for the dual of the linearized program.
//!
//! Dual rows come in four families: the sign constraints, the rows of the
//! `y_l` and `m_{l,i}` columns (polynomially many, checked directly), and one
//! row per state (exponentially many). The state rows are separated by asking
//! the black-box for a state maximizing `sum_i c_i u_i(s)` with
//! `c_i = sum_l v_{l,i}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blackbox::{SeedStream, UtilitarianSolver, WeightVector};
use crate::lp::{PrimalColumn, RowId, Separation, SeparationOracle};
use crate::model::StateRecord;

use super::programs::{DualPoint, StateKey};

/// Primal column of state `s`: `u_i(s)` in every `(l, i)` row.
pub fn state_column(t: usize, n: usize, state: &StateRecord) -> Vec<f64> {
    let mut col = vec![0.0; DualPoint::dimension(t, n)];
    for l in 1..=t {
        for i in 0..n {
            col[DualPoint::v_index(t, n, l, i)] = state.utilities.get(i);
        }
    }
    col
}

/// Column of `y_l`: `l` in the head row `l`, `-1` in each `(l, i)` row.
pub fn y_column(t: usize, n: usize, l: usize) -> Vec<f64> {
    let mut col = vec![0.0; DualPoint::dimension(t, n)];
    col[DualPoint::q_index(l)] = l as f64;
    for i in 0..n {
        col[DualPoint::v_index(t, n, l, i)] = -1.0;
    }
    col
}

/// Column of `m_{l,i}`: `-1` in the head row `l`, `+1` in row `(l, i)`.
pub fn m_column(t: usize, n: usize, l: usize, i: usize) -> Vec<f64> {
    let mut col = vec![0.0; DualPoint::dimension(t, n)];
    col[DualPoint::q_index(l)] = -1.0;
    col[DualPoint::v_index(t, n, l, i)] = 1.0;
    col
}

/// Key of the `y_l` column among the fixed columns.
pub fn y_key(l: usize) -> usize {
    l - 1
}

/// Key of the `m_{l,i}` column among the fixed columns.
pub fn m_key(t: usize, n: usize, l: usize, i: usize) -> usize {
    DualPoint::v_index(t, n, l, i)
}

/// The `y` and `m` columns, which every reduced primal keeps.
pub fn auxiliary_columns(t: usize, n: usize) -> Vec<PrimalColumn<StateKey>> {
    let mut out = Vec::with_capacity(t * (n + 1));
    for l in 1..=t {
        out.push(PrimalColumn {
            key: RowId::Fixed(y_key(l)),
            coefficients: y_column(t, n, l),
            cost: 0.0,
        });
        for i in 0..n {
            out.push(PrimalColumn {
                key: RowId::Fixed(m_key(t, n, l, i)),
                coefficients: m_column(t, n, l, i),
                cost: 0.0,
            });
        }
    }
    out
}

pub fn state_primal_column(t: usize, n: usize, state: &StateRecord) -> PrimalColumn<StateKey> {
    PrimalColumn {
        key: RowId::Dynamic(StateKey(state.clone())),
        coefficients: state_column(t, n, state),
        cost: 1.0,
    }
}

/// Separation oracle over the dual of the linearized program at iteration `t`.
pub struct DualSeparation<'a, S: ?Sized> {
    t: usize,
    n: usize,
    solver: &'a S,
    seeds: &'a SeedStream,
    tau: f64,
    false_approval: Option<(f64, ChaCha8Rng)>,
    pub blackbox_calls: u64,
    pub false_approvals: u64,
}

impl<'a, S: UtilitarianSolver + ?Sized> DualSeparation<'a, S> {
    pub fn new(t: usize, n: usize, solver: &'a S, seeds: &'a SeedStream, tau: f64) -> Self {
        Self {
            t,
            n,
            solver,
            seeds,
            tau,
            false_approval: None,
            blackbox_calls: 0,
            false_approvals: 0,
        }
    }

    /// Wrongly approve each would-be violation with probability `rate`.
    pub fn with_false_approvals(mut self, rate: f64, seed: u64) -> Self {
        if rate > 0.0 {
            self.false_approval = Some((rate, ChaCha8Rng::seed_from_u64(seed)));
        }
        self
    }

    fn exact(&mut self, y: &[f64]) -> Separation<StateKey> {
        let (t, n, tau) = (self.t, self.n, self.tau);
        for (k, &v) in y.iter().enumerate() {
            if v < -tau {
                let mut normal = vec![0.0; y.len()];
                normal[k] = -1.0;
                return Separation::Violated {
                    row: RowId::Sign(k),
                    normal,
                    bound: 0.0,
                };
            }
        }
        let point = DualPoint::from_flat(t, n, y);
        for l in 1..=t {
            let lhs = l as f64 * point.q[l - 1] - point.v[l - 1].iter().sum::<f64>();
            if lhs > tau {
                return Separation::Violated {
                    row: RowId::Fixed(y_key(l)),
                    normal: y_column(t, n, l),
                    bound: 0.0,
                };
            }
        }
        for l in 1..=t {
            for i in 0..n {
                if point.v[l - 1][i] - point.q[l - 1] > tau {
                    return Separation::Violated {
                        row: RowId::Fixed(m_key(t, n, l, i)),
                        normal: m_column(t, n, l, i),
                        bound: 0.0,
                    };
                }
            }
        }
        let weights = point.agent_weights();
        let c = WeightVector::clamped(weights.clone());
        let seed = self.seeds.next_seed();
        self.blackbox_calls += 1;
        let state = self.solver.solve(&c, seed);
        let value = state.utilities.weighted_sum(&weights);
        if value > 1.0 + tau {
            return Separation::Violated {
                normal: state_column(t, n, &state),
                row: RowId::Dynamic(StateKey(state)),
                bound: 1.0,
            };
        }
        Separation::ApproxFeasible
    }
}

impl<S: UtilitarianSolver + ?Sized> SeparationOracle for DualSeparation<'_, S> {
    type Row = StateKey;

    fn separate(&mut self, y: &[f64]) -> Separation<StateKey> {
        let answer = self.exact(y);
        if let (Separation::Violated { .. }, Some((rate, rng))) = (&answer, self.false_approval.as_mut()) {
            if rng.gen::<f64>() < *rate {
                self.false_approvals += 1;
                return Separation::ApproxFeasible;
            }
        }
        answer
    }
}

/// One-shot separation of `point` at iteration `t`.
pub fn separation_oracle_d3<S: UtilitarianSolver + ?Sized>(
    point: &DualPoint,
    t: usize,
    solver: &S,
    seed: u64,
    tau: f64,
) -> Separation<StateKey> {
    let n = solver.agents();
    let seeds = SeedStream::new(seed);
    let mut oracle = DualSeparation::new(t, n, solver, &seeds, tau);
    oracle.separate(&point.to_flat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::Exhaustive;
    use crate::model::{Outcome, StateHandle, UtilityVector};

    fn fixture() -> Exhaustive {
        Exhaustive::new(
            2,
            vec![StateRecord {
                handle: StateHandle::from_bytes(vec![1]),
                utilities: UtilityVector::new(vec![10.0, 10.0]).unwrap(),
                payload: Outcome::Listed { index: 0 },
            }],
        )
    }

    #[test]
    fn negative_coordinate_is_a_sign_cut() {
        let mut p = DualPoint::zeros(1, 2);
        p.q[0] = -1.0;
        let s = separation_oracle_d3(&p, 1, &fixture(), 0, 1e-7);
        assert!(matches!(s, Separation::Violated { row: RowId::Sign(0), .. }));
    }

    #[test]
    fn origin_is_approved() {
        let s = separation_oracle_d3(&DualPoint::zeros(2, 2), 2, &fixture(), 0, 1e-7);
        assert_eq!(s, Separation::ApproxFeasible);
    }

    #[test]
    fn heavy_point_cuts_on_the_state_row() {
        // q = 0.2 and v = (0.1, 0.1): head row 0.2 - 0.2 <= 0, v <= q, and
        // sum_i c_i u_i = 0.1*10 + 0.1*10 = 2 > 1.
        let p = DualPoint {
            q: vec![0.2],
            v: vec![vec![0.1, 0.1]],
        };
        match separation_oracle_d3(&p, 1, &fixture(), 0, 1e-7) {
            Separation::Violated {
                row: RowId::Dynamic(key),
                normal,
                bound,
            } => {
                assert_eq!(key.0.handle, StateHandle::from_bytes(vec![1]));
                let lhs: f64 = normal.iter().zip(p.to_flat()).map(|(a, b)| a * b).sum();
                assert!((lhs - 2.0).abs() < 1e-12 && bound == 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn head_and_coupling_rows_are_checked_directly() {
        let p = DualPoint {
            q: vec![1.0],
            v: vec![vec![0.0, 0.0]],
        };
        let s = separation_oracle_d3(&p, 1, &fixture(), 0, 1e-7);
        assert!(matches!(s, Separation::Violated { row: RowId::Fixed(0), .. }));
        let p = DualPoint {
            q: vec![0.0],
            v: vec![vec![0.0, 0.01]],
        };
        let s = separation_oracle_d3(&p, 1, &fixture(), 0, 1e-7);
        assert!(matches!(s, Separation::Violated { row: RowId::Fixed(k), .. } if k == m_key(1, 2, 1, 1)));
    }

    #[test]
    fn columns_match_dual_rows() {
        // The dual row of the y_l column is l q_l - sum_i v_{l,i}.
        let p = DualPoint {
            q: vec![1.0, 2.0],
            v: vec![vec![0.5, 0.25], vec![1.0, 3.0]],
        };
        let y = p.to_flat();
        let dotp = |c: &[f64]| c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        assert_eq!(dotp(&y_column(2, 2, 2)), 2.0 * 2.0 - 4.0);
        assert_eq!(dotp(&m_column(2, 2, 1, 0)), 0.5 - 1.0);
        assert_eq!(auxiliary_columns(2, 2).len(), 6);
    }
}
