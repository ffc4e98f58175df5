//! The outer loop: for `t = 1..n`, maximize the sum of the `t` smallest
//! expectations subject to keeping every earlier prefix sum, warm-starting
//! from the previous iteration's distribution.

use serde::Serialize;

use crate::blackbox::{compute_repetitions, Boosted, Counting, SeedStream, UtilitarianSolver};
use crate::model::{ExpectedVector, SparseDistribution};

use super::p3::BoundingStates;
use super::programs::{p1_feasible, DualPoint, ProgramContext};
use super::shallow::{shallow_solve, upgrade_retained, Probe};
use super::{BoostPolicy, ReductionError, ReductionParams};

/// What one iteration produced.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationOutcome {
    pub x: SparseDistribution,
    pub z: f64,
    pub probes: Vec<Probe>,
    pub upper_clamped: bool,
}

/// Solver for the iteration-`t` program.
pub trait P1Solver {
    fn agents(&self) -> usize;
    fn solve_iteration(
        &mut self,
        ctx: &ProgramContext,
        warm: &SparseDistribution,
    ) -> Result<IterationOutcome, ReductionError>;
}

/// Per-iteration entry of the run report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationSummary {
    pub t: usize,
    pub z: f64,
    pub probe_count: usize,
    pub feasible_probes: usize,
    pub cut_count: usize,
    pub ellipsoid_iterations: usize,
    pub blackbox_calls: u64,
    pub upper_clamped: bool,
    pub support: usize,
}

/// Runs the outer loop with any per-iteration solver. Each iteration's
/// output is checked to be feasible for the next program.
pub fn run_main_loop<P: P1Solver + ?Sized>(
    solver: &mut P,
    chain_tol: f64,
) -> Result<(SparseDistribution, Vec<f64>, Vec<IterationOutcome>), ReductionError> {
    let n = solver.agents();
    let mut x = SparseDistribution::degenerate(n);
    let mut z: Vec<f64> = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for t in 1..=n {
        let ctx = ProgramContext::new(t, z.clone())?;
        let out = solver.solve_iteration(&ctx, &x)?;
        z.push(out.z);
        if t < n {
            let next = ProgramContext::new(t + 1, z.clone())?;
            let tol = chain_tol * (1.0 + next.prefix_sum());
            if !p1_feasible(&out.x, &next, tol) {
                return Err(ReductionError::Invariant(format!(
                    "iteration {t} output is infeasible for iteration {}",
                    t + 1
                )));
            }
        }
        x = out.x.clone();
        outcomes.push(out);
    }
    Ok((x, z, outcomes))
}

/// The black-box reduction as an iteration solver.
pub struct ShallowP1<'a, S: ?Sized> {
    solver: &'a S,
    alpha: f64,
    eps: f64,
    params: &'a ReductionParams,
    seeds: &'a SeedStream,
    bounds: Option<BoundingStates>,
}

impl<'a, S: UtilitarianSolver + ?Sized> ShallowP1<'a, S> {
    pub fn new(solver: &'a S, alpha: f64, eps: f64, params: &'a ReductionParams, seeds: &'a SeedStream) -> Self {
        Self {
            solver,
            alpha,
            eps,
            params,
            seeds,
            bounds: None,
        }
    }
}

impl<S: UtilitarianSolver + ?Sized> P1Solver for ShallowP1<'_, S> {
    fn agents(&self) -> usize {
        self.solver.agents()
    }

    fn solve_iteration(
        &mut self,
        ctx: &ProgramContext,
        warm: &SparseDistribution,
    ) -> Result<IterationOutcome, ReductionError> {
        if self.bounds.is_none() {
            self.bounds = Some(BoundingStates::compute(self.solver, self.seeds));
        }
        let bounds = self.bounds.as_ref().expect("computed above");
        let out = shallow_solve(
            ctx,
            warm,
            self.solver,
            self.alpha,
            self.eps,
            self.params,
            bounds,
            self.seeds,
        )?;
        let (x, z) = if self.params.upgrade_retained {
            upgrade_retained(ctx, out.x)?
        } else {
            (out.x, out.z)
        };
        Ok(IterationOutcome {
            x,
            z,
            probes: out.probes,
            upper_clamped: out.upper_clamped,
        })
    }
}

/// Everything a pipeline run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub distribution: SparseDistribution,
    pub expected: ExpectedVector,
    pub z: Vec<f64>,
    pub iterations: Vec<IterationSummary>,
    pub blackbox_calls: u64,
    pub repetitions: u64,
    /// `n * (K + 1) + 1` for the largest iteration cap `K` used.
    pub support_cap: usize,
    pub alpha: f64,
    pub eps: f64,
}

/// Upper estimate of the black-box calls in one run, used to size boosting.
pub fn estimated_calls(n: usize, params: &ReductionParams) -> u64 {
    let d = DualPoint::dimension(n, n);
    let cap = params.ellipsoid.iteration_cap(d, 1e6) as u64;
    let probes = 64u64;
    n as u64 * (2 + probes * (cap + 1)) + n as u64
}

/// Computes an `(alpha, eps)`-leximin-approximate distribution using only
/// calls to `blackbox`.
pub fn leximin_main_loop(
    blackbox: &dyn UtilitarianSolver,
    alpha: f64,
    eps: f64,
    params: &ReductionParams,
) -> Result<RunReport, ReductionError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ReductionError::Alpha(alpha));
    }
    if !(eps > 0.0) {
        return Err(ReductionError::Eps(eps));
    }
    let n = blackbox.agents();
    let p = blackbox.spec().success_probability;
    let repetitions = match params.boost {
        BoostPolicy::Off => 1,
        BoostPolicy::Fixed(q) => q.max(1),
        BoostPolicy::Auto => compute_repetitions(p, estimated_calls(n, params))?,
    };
    let counted = Counting::new(Boosted::new(blackbox, repetitions)?);
    let seeds = SeedStream::new(params.seed);
    let mut solver = ShallowP1::new(&counted, alpha, eps, params, &seeds);

    let mut summaries = Vec::with_capacity(n);
    let mut max_cap = 0usize;
    let (x, z, outcomes) = run_main_loop(&mut solver, 1e-6)?;
    for (k, out) in outcomes.iter().enumerate() {
        let cut_count = out.probes.iter().map(|p| p.stats.feasibility_cuts).sum();
        let ellipsoid_iterations = out.probes.iter().map(|p| p.stats.ellipsoid_iterations).sum();
        let calls: u64 = out.probes.iter().map(|p| p.stats.blackbox_calls).sum::<u64>() + 1;
        max_cap = max_cap.max(out.probes.iter().map(|p| p.stats.iteration_cap).max().unwrap_or(0));
        summaries.push(IterationSummary {
            t: k + 1,
            z: out.z,
            probe_count: out.probes.len(),
            feasible_probes: out.probes.iter().filter(|p| p.feasible).count(),
            cut_count,
            ellipsoid_iterations,
            blackbox_calls: calls * repetitions,
            upper_clamped: out.upper_clamped,
            support: out.x.support_size(),
        });
    }
    let distribution = x.without_negligible_degenerate(params.tau_dist);
    let expected = distribution.expected_utilities();
    Ok(RunReport {
        distribution,
        expected,
        z,
        iterations: summaries,
        blackbox_calls: counted.calls(),
        repetitions,
        support_cap: n * (max_cap + 1) + 1,
        alpha,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::Exhaustive;
    use crate::leximin::{leximin_compare, LeximinOrdering};
    use crate::model::{Outcome, StateHandle, StateRecord, UtilityVector};

    fn state(tag: u8, utilities: &[f64]) -> StateRecord {
        StateRecord {
            handle: StateHandle::from_bytes(vec![tag]),
            utilities: UtilityVector::new(utilities.to_vec()).unwrap(),
            payload: Outcome::Listed { index: tag as usize },
        }
    }

    #[test]
    fn single_agent_single_state() {
        let solver = Exhaustive::new(1, vec![state(1, &[7.0])]);
        let report = leximin_main_loop(&solver, 1.0, 1e-6, &ReductionParams::default()).unwrap();
        assert_eq!(report.distribution.support_size(), 1);
        assert!((report.distribution.probability(&StateHandle::from_bytes(vec![1])) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_agent_fixture_reaches_the_equal_state() {
        let solver = Exhaustive::new(2, vec![state(1, &[10.0, 10.0]), state(2, &[0.0, 1000.0])]);
        let report = leximin_main_loop(&solver, 1.0, 1e-6, &ReductionParams::default()).unwrap();
        let cmp = leximin_compare(&report.expected, &ExpectedVector(vec![10.0, 10.0]), 2e-6).unwrap();
        assert_eq!(cmp, LeximinOrdering::Equivalent, "{:?}", report.expected);
        assert!(report.distribution.support_size() <= report.support_cap);
        assert_eq!(report.iterations.len(), 2);
    }

    #[test]
    fn equalizing_lottery() {
        // Two states each favouring one agent: the leximin lottery mixes them.
        let solver = Exhaustive::new(2, vec![state(1, &[4.0, 0.0]), state(2, &[0.0, 2.0])]);
        let report = leximin_main_loop(&solver, 1.0, 1e-7, &ReductionParams::default()).unwrap();
        let e = &report.expected.0;
        assert!((e[0] - 4.0 / 3.0).abs() < 1e-5 && (e[1] - 4.0 / 3.0).abs() < 1e-5, "{e:?}");
    }
}
