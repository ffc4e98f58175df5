//! Binary search over the iteration objective, driven by a weak feasibility
//! oracle that only promises to recognize values reachable with at most
//! `alpha` mass off the degenerate state.

use serde::Serialize;

use crate::blackbox::{SeedStream, UtilitarianSolver, WeightVector};
use crate::leximin::upgrade;
use crate::model::SparseDistribution;

use super::p3::{solve_p2_sparse, BoundingStates, P3Stats};
use super::programs::{p1_feasible, ProgramContext};
use super::{ReductionError, ReductionParams};

#[derive(Clone, Debug, PartialEq)]
pub enum WeakVerdict {
    /// A distribution whose iteration objective reaches the probed value.
    Feasible(SparseDistribution),
    /// No distribution with non-degenerate mass at most `alpha` reaches it.
    InfeasibleUnderXalpha,
}

impl WeakVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible(_))
    }
}

/// Decides whether `ctx.z_t` is reachable: solve the sparse minimization
/// program and accept when its mass fits in one, padding the rest with the
/// degenerate state.
pub fn weak_feasibility_oracle<S: UtilitarianSolver + ?Sized>(
    ctx: &ProgramContext,
    solver: &S,
    alpha: f64,
    params: &ReductionParams,
    bounds: &BoundingStates,
    seeds: &SeedStream,
) -> Result<(WeakVerdict, P3Stats), ReductionError> {
    let n = solver.agents();
    let (x, stats) = solve_p2_sparse(ctx, solver, alpha, params, bounds, seeds)?;
    let verdict = match x {
        Some(x) if x.total() <= 1.0 + params.mass_slack => {
            WeakVerdict::Feasible(SparseDistribution::pad_with_degenerate(n, &x, params.mass_slack)?)
        }
        _ => WeakVerdict::InfeasibleUnderXalpha,
    };
    Ok((verdict, stats))
}

/// One probed value of the binary search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Probe {
    pub value: f64,
    pub feasible: bool,
    pub stats: P3Stats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShallowOutcome {
    pub x: SparseDistribution,
    pub z: f64,
    pub probes: Vec<Probe>,
    pub lower_start: f64,
    pub upper_start: f64,
    /// The black-box welfare bound fell below the warm start's objective,
    /// which an honest `alpha`-approximate solver cannot cause; the search
    /// then starts with an empty interval.
    pub upper_clamped: bool,
}

/// Binary search between the warm start's objective and `1/alpha` times the
/// black-box's unit-weight welfare, stopping when the interval is at most
/// `eps` wide. Returns the last accepted distribution and the lower end.
#[allow(clippy::too_many_arguments)]
pub fn shallow_solve<S: UtilitarianSolver + ?Sized>(
    ctx: &ProgramContext,
    warm: &SparseDistribution,
    solver: &S,
    alpha: f64,
    eps: f64,
    params: &ReductionParams,
    bounds: &BoundingStates,
    seeds: &SeedStream,
) -> Result<ShallowOutcome, ReductionError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ReductionError::Alpha(alpha));
    }
    if !(eps > 0.0) {
        return Err(ReductionError::Eps(eps));
    }
    let warm_tol = 1e-6 * (1.0 + ctx.prefix_sum());
    if !p1_feasible(warm, ctx, warm_tol) {
        return Err(ReductionError::WarmStartInfeasible { t: ctx.t });
    }
    let n = solver.agents();
    let mut lower = super::programs::p1_objective(warm, ctx);
    let welfare = solver
        .solve(&WeightVector::ones(n), seeds.next_seed())
        .utilities
        .total();
    let mut upper = welfare / alpha;
    let lower_start = lower;
    let upper_clamped = upper < lower;
    if upper_clamped {
        upper = lower;
    }
    let upper_start = upper;

    let mut best = warm.clone();
    let mut probes = Vec::new();
    while upper - lower > eps {
        let mid = 0.5 * (lower + upper);
        if !(mid > lower && mid < upper) {
            break;
        }
        let (verdict, stats) = weak_feasibility_oracle(&ctx.with_target(mid), solver, alpha, params, bounds, seeds)?;
        let feasible = verdict.is_feasible();
        probes.push(Probe {
            value: mid,
            feasible,
            stats,
        });
        match verdict {
            WeakVerdict::Feasible(x) => {
                lower = mid;
                best = x;
            }
            WeakVerdict::InfeasibleUnderXalpha => upper = mid,
        }
    }
    Ok(ShallowOutcome {
        x: best,
        z: lower,
        probes,
        lower_start,
        upper_start,
        upper_clamped,
    })
}

/// Settles the value an iteration reports. The retained lottery's
/// non-degenerate part is rescaled to total mass one when that raises the
/// objective: every expectation grows by the same factor, so earlier prefix
/// constraints keep holding. The reported value is the objective the chosen
/// lottery actually attains, which also corrects for totals the oracle
/// accepted slightly above one and renormalized.
pub fn upgrade_retained(
    ctx: &ProgramContext,
    x: SparseDistribution,
) -> Result<(SparseDistribution, f64), ReductionError> {
    let objective = super::programs::p1_objective(&x, ctx);
    let mass = x.non_degenerate_mass();
    if !(mass > 0.0 && mass < 1.0) {
        return Ok((x, objective));
    }
    let up = upgrade(&x, mass)?;
    let raised = super::programs::p1_objective(&up, ctx);
    Ok(if raised > objective { (up, raised) } else { (x, objective) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::Exhaustive;
    use crate::model::{Outcome, StateHandle, StateRecord, UtilityVector};
    use crate::reduction::programs::p1_objective;

    fn state(tag: u8, utilities: &[f64]) -> StateRecord {
        StateRecord {
            handle: StateHandle::from_bytes(vec![tag]),
            utilities: UtilityVector::new(utilities.to_vec()).unwrap(),
            payload: Outcome::Listed { index: tag as usize },
        }
    }

    fn fixture() -> Exhaustive {
        Exhaustive::new(2, vec![state(1, &[10.0, 10.0]), state(2, &[0.0, 1000.0])])
    }

    fn oracle_at(solver: &Exhaustive, z: f64, params: &ReductionParams) -> WeakVerdict {
        let seeds = SeedStream::new(1);
        let bounds = BoundingStates::compute(solver, &seeds);
        let ctx = ProgramContext::new(1, vec![]).unwrap().with_target(z);
        weak_feasibility_oracle(&ctx, solver, 0.9, params, &bounds, &seeds).unwrap().0
    }

    #[test]
    fn zero_target_is_feasible() {
        assert!(oracle_at(&fixture(), 0.0, &ReductionParams::default()).is_feasible());
    }

    #[test]
    fn worst_case_scaling_separates_nine_from_nine_and_a_half() {
        let params = ReductionParams {
            worst_case_scaling: true,
            ..Default::default()
        };
        assert!(oracle_at(&fixture(), 9.0, &params).is_feasible());
        assert!(!oracle_at(&fixture(), 9.5, &params).is_feasible());
    }

    #[test]
    fn only_degenerate_state() {
        let solver = Exhaustive::new(2, vec![]);
        let seeds = SeedStream::new(0);
        let bounds = BoundingStates::compute(&solver, &seeds);
        let ctx = ProgramContext::new(1, vec![]).unwrap();
        let warm = SparseDistribution::degenerate(2);
        let out = shallow_solve(&ctx, &warm, &solver, 1.0, 1e-6, &ReductionParams::default(), &bounds, &seeds).unwrap();
        assert_eq!(out.z, 0.0);
        assert_eq!(out.x, warm);
        assert!(out.probes.is_empty());
    }

    #[test]
    fn probes_are_monotone_and_feasible_ones_deliver() {
        let solver = fixture();
        let seeds = SeedStream::new(0);
        let bounds = BoundingStates::compute(&solver, &seeds);
        let ctx = ProgramContext::new(1, vec![]).unwrap();
        let warm = SparseDistribution::degenerate(2);
        let out = shallow_solve(&ctx, &warm, &solver, 1.0, 1e-4, &ReductionParams::default(), &bounds, &seeds).unwrap();
        assert!((out.z - 10.0).abs() <= 1e-4, "{}", out.z);
        assert!(p1_objective(&out.x, &ctx) >= out.z - 1e-7);
        for a in &out.probes {
            for b in &out.probes {
                if a.feasible && b.value < a.value {
                    assert!(b.feasible);
                }
                if !a.feasible && b.value > a.value {
                    assert!(!b.feasible);
                }
            }
        }
    }

    #[test]
    fn upgrading_the_retained_lottery_closes_the_search_gap() {
        let solver = fixture();
        let seeds = SeedStream::new(0);
        let bounds = BoundingStates::compute(&solver, &seeds);
        let ctx = ProgramContext::new(1, vec![]).unwrap();
        let warm = SparseDistribution::degenerate(2);
        let out = shallow_solve(&ctx, &warm, &solver, 1.0, 1e-2, &ReductionParams::default(), &bounds, &seeds).unwrap();
        assert!(out.z < 10.0);
        let (x, z) = upgrade_retained(&ctx, out.x).unwrap();
        assert!((z - 10.0).abs() < 1e-9, "{z}");
        assert!(x.degenerate_mass() < 1e-12);
    }

    #[test]
    fn rejects_infeasible_warm_start() {
        let solver = fixture();
        let seeds = SeedStream::new(0);
        let bounds = BoundingStates::compute(&solver, &seeds);
        let ctx = ProgramContext::new(2, vec![9.0]).unwrap();
        let warm = SparseDistribution::degenerate(2);
        let err = shallow_solve(&ctx, &warm, &solver, 1.0, 1e-3, &ReductionParams::default(), &bounds, &seeds).unwrap_err();
        assert_eq!(err, ReductionError::WarmStartInfeasible { t: 2 });
    }
}
