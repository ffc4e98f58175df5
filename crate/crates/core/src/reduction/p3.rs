//! Sparse approximate solver for the linearized program, via the ellipsoid
//! method on its dual and exact re-solution of the reduced primal.

use serde::Serialize;

use crate::blackbox::{SeedStream, UtilitarianSolver, WeightVector};
use crate::lp::{ellipsoid_solve, recover_sparse_primal, EllipsoidState, RecoverError, RowId, StopReason};
use crate::model::{SparseWeights, StateRecord};

use super::programs::{DualPoint, P3Solution, ProgramContext};
use super::separation::{auxiliary_columns, state_primal_column, DualSeparation};
use super::{ReductionError, ReductionParams};

/// One black-box answer per agent for the weights `e_i`. Their columns stay
/// in every reduced primal, which bounds the reduced dual and so gives the
/// initial ellipsoid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundingStates {
    pub states: Vec<StateRecord>,
    /// `1 / u_i(s_i)`, or `None` when agent `i` got nothing.
    pub capacity: Vec<Option<f64>>,
}

impl BoundingStates {
    pub fn compute<S: UtilitarianSolver + ?Sized>(solver: &S, seeds: &SeedStream) -> Self {
        let n = solver.agents();
        let mut states = Vec::with_capacity(n);
        let mut capacity = Vec::with_capacity(n);
        for i in 0..n {
            let s = solver.solve(&WeightVector::unit(n, i), seeds.next_seed());
            let u = s.utilities.get(i);
            capacity.push(if u > 0.0 { Some(1.0 / u) } else { None });
            states.push(s);
        }
        Self { states, capacity }
    }

    /// Per-coordinate upper bounds on the reduced dual at iteration `t`.
    pub fn dual_upper(&self, t: usize) -> Vec<f64> {
        let n = self.capacity.len();
        let zero_agents = self.capacity.iter().filter(|c| c.is_none()).count();
        let finite: f64 = self.capacity.iter().flatten().sum();
        let fallback = 1.0 + finite;
        let mut upper = vec![0.0; DualPoint::dimension(t, n)];
        for l in 1..=t {
            let q = if l > zero_agents {
                finite / (l - zero_agents) as f64
            } else {
                fallback
            };
            upper[DualPoint::q_index(l)] = q;
            for i in 0..n {
                upper[DualPoint::v_index(t, n, l, i)] = match self.capacity[i] {
                    Some(v) => v.min(q),
                    None => q,
                };
            }
        }
        upper
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct P3Stats {
    pub ellipsoid_iterations: usize,
    pub iteration_cap: usize,
    pub feasibility_cuts: usize,
    pub cut_states: usize,
    pub blackbox_calls: u64,
    pub false_approvals: u64,
    pub converged: bool,
    pub best_dual_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct P3Run {
    /// `None` when the reduced primal is infeasible.
    pub solution: Option<P3Solution>,
    pub stats: P3Stats,
}

/// Solves the linearized minimization program at `ctx` (which must carry
/// `z_t`) to within factor `1/alpha`, with support on the states the
/// black-box produced.
pub fn solve_p3_sparse<S: UtilitarianSolver + ?Sized>(
    ctx: &ProgramContext,
    solver: &S,
    alpha: f64,
    params: &ReductionParams,
    bounds: &BoundingStates,
    seeds: &SeedStream,
) -> Result<P3Run, ReductionError> {
    let n = solver.agents();
    let t = ctx.t;
    let d = DualPoint::dimension(t, n);
    let z = ctx.cumulative()?;
    let mut rhs = vec![0.0; d];
    for l in 1..=t {
        rhs[DualPoint::q_index(l)] = z[l - 1];
    }

    let start = EllipsoidState::enclosing_box(&bounds.dual_upper(t), params.ellipsoid.radius_scale)?;
    let iteration_cap = params.ellipsoid.iteration_cap(d, start.radius());
    let fault_seed = seeds.next_seed();
    let mut oracle = DualSeparation::new(t, n, solver, seeds, params.ellipsoid.tau_lp)
        .with_false_approvals(params.false_approval_rate, fault_seed);
    let outcome = ellipsoid_solve(start, &rhs, &mut oracle, &params.ellipsoid)?;

    let mut always = auxiliary_columns(t, n);
    for s in &bounds.states {
        if !s.is_degenerate() && !s.utilities.is_zero() {
            always.push(state_primal_column(t, n, s));
        }
    }
    let stats = P3Stats {
        ellipsoid_iterations: outcome.iterations,
        iteration_cap,
        feasibility_cuts: outcome.log.feasibility_count(),
        cut_states: outcome.log.dynamic_rows().len(),
        blackbox_calls: oracle.blackbox_calls,
        false_approvals: oracle.false_approvals,
        converged: outcome.stop == StopReason::Converged,
        best_dual_value: outcome.best_value,
    };
    let recovered = match recover_sparse_primal(&outcome.log, &always, &rhs) {
        Ok(r) => r,
        Err(RecoverError::Infeasible) => return Ok(P3Run { solution: None, stats }),
        Err(e) => return Err(e.into()),
    };

    let mut x = SparseWeights::new();
    let mut y = vec![0.0; t];
    let mut m = vec![vec![0.0; n]; t];
    for (col, value) in recovered.values {
        let value = value.max(0.0);
        match col.key {
            RowId::Dynamic(key) => x.add(key.0, value),
            RowId::Fixed(k) if k < t => y[k] = value,
            RowId::Fixed(k) => m[(k - t) / n][(k - t) % n] = value,
            RowId::Sign(_) => {}
        }
    }
    let objective = x.total();
    let mut solution = P3Solution { x, y, m, objective };
    if params.worst_case_scaling {
        solution.scale(1.0 / alpha);
    }
    Ok(P3Run {
        solution: Some(solution),
        stats,
    })
}

/// The `x` part of [`solve_p3_sparse`]: a sparse sub-probability vector
/// whose `l` smallest expectations sum to at least `Z_l` for every `l <= t`.
pub fn solve_p2_sparse<S: UtilitarianSolver + ?Sized>(
    ctx: &ProgramContext,
    solver: &S,
    alpha: f64,
    params: &ReductionParams,
    bounds: &BoundingStates,
    seeds: &SeedStream,
) -> Result<(Option<SparseWeights>, P3Stats), ReductionError> {
    let run = solve_p3_sparse(ctx, solver, alpha, params, bounds, seeds)?;
    Ok((run.solution.map(|s| s.x), run.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::Exhaustive;
    use crate::lp::{solve_dense_lp, DenseLP, RowSense, Sense};
    use crate::model::{Outcome, StateHandle, UtilityVector};
    use crate::reduction::programs::p2_shortfall;

    fn state(tag: u8, utilities: &[f64]) -> StateRecord {
        StateRecord {
            handle: StateHandle::from_bytes(vec![tag]),
            utilities: UtilityVector::new(utilities.to_vec()).unwrap(),
            payload: Outcome::Listed { index: tag as usize },
        }
    }

    fn run(solver: &Exhaustive, ctx: &ProgramContext) -> P3Run {
        let seeds = SeedStream::new(0);
        let bounds = BoundingStates::compute(solver, &seeds);
        solve_p3_sparse(ctx, solver, 1.0, &ReductionParams::default(), &bounds, &seeds).unwrap()
    }

    /// Full P3 with every state as an explicit column.
    fn dense_p3(states: &[StateRecord], n: usize, ctx: &ProgramContext) -> f64 {
        let t = ctx.t;
        let z = ctx.cumulative().unwrap();
        let k = states.len();
        let vars = k + t + t * n;
        let mut objective = vec![0.0; vars];
        objective[..k].iter_mut().for_each(|c| *c = 1.0);
        let mut lp = DenseLP::new(Sense::Minimize, objective);
        for l in 1..=t {
            let mut row = vec![0.0; vars];
            row[k + l - 1] = l as f64;
            for i in 0..n {
                row[k + t + (l - 1) * n + i] = -1.0;
            }
            lp.add_row(row, RowSense::Ge, z[l - 1]);
            for i in 0..n {
                let mut row = vec![0.0; vars];
                for (j, s) in states.iter().enumerate() {
                    row[j] = s.utilities.get(i);
                }
                row[k + l - 1] = -1.0;
                row[k + t + (l - 1) * n + i] = 1.0;
                lp.add_row(row, RowSense::Ge, 0.0);
            }
        }
        solve_dense_lp(&lp).unwrap().optimal().unwrap().1
    }

    #[test]
    fn zero_target_costs_nothing() {
        let solver = Exhaustive::new(2, vec![state(1, &[3.0, 1.0])]);
        let ctx = ProgramContext::new(1, vec![]).unwrap().with_target(0.0);
        let sol = run(&solver, &ctx).solution.unwrap();
        assert!(sol.objective <= 1e-7);
    }

    #[test]
    fn binding_single_state() {
        let solver = Exhaustive::new(2, vec![state(1, &[3.0, 5.0])]);
        let ctx = ProgramContext::new(1, vec![]).unwrap().with_target(3.0);
        let sol = run(&solver, &ctx).solution.unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-6, "{}", sol.objective);
        assert!(sol.max_violation(2, &ctx).unwrap() < 1e-7);
    }

    #[test]
    fn matches_full_enumeration() {
        let states = vec![state(1, &[4.0, 1.0, 0.0]), state(2, &[0.0, 3.0, 2.0]), state(3, &[1.0, 1.0, 5.0])];
        let solver = Exhaustive::new(3, states.clone());
        for (t, prefix, target) in [(1, vec![], 1.0), (2, vec![0.8], 1.5), (3, vec![0.8, 1.0], 2.0)] {
            let ctx = ProgramContext::new(t, prefix).unwrap().with_target(target);
            let sol = run(&solver, &ctx).solution.unwrap();
            let opt = dense_p3(&states, 3, &ctx);
            assert!((sol.objective - opt).abs() < 1e-4, "t={t}: {} vs {opt}", sol.objective);
            assert!(sol.max_violation(3, &ctx).unwrap() < 1e-6);
            assert!(p2_shortfall(&sol.x, 3, &ctx).unwrap() < 1e-6);
        }
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        // Agent 2 never gets anything, so the smallest expectation stays 0.
        let solver = Exhaustive::new(2, vec![state(1, &[3.0, 0.0])]);
        let ctx = ProgramContext::new(1, vec![]).unwrap().with_target(1.0);
        assert!(run(&solver, &ctx).solution.is_none());
    }

    #[test]
    fn projection_keeps_objective() {
        let solver = Exhaustive::new(2, vec![state(1, &[2.0, 6.0]), state(2, &[5.0, 1.0])]);
        let ctx = ProgramContext::new(1, vec![]).unwrap().with_target(2.5);
        let seeds = SeedStream::new(0);
        let bounds = BoundingStates::compute(&solver, &seeds);
        let p3 = solve_p3_sparse(&ctx, &solver, 1.0, &ReductionParams::default(), &bounds, &seeds).unwrap();
        let seeds = SeedStream::new(0);
        let (x, _) = solve_p2_sparse(&ctx, &solver, 1.0, &ReductionParams::default(), &bounds, &seeds).unwrap();
        let x = x.unwrap();
        assert!((x.total() - p3.solution.unwrap().objective).abs() < 1e-12);
        assert!(p2_shortfall(&x, 2, &ctx).unwrap() < 1e-7);
    }
}
