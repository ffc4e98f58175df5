//! Ground truth for small instances: full state enumeration, the exact
//! leximin-optimal lottery over the enumerated states, and verification of
//! pipeline outputs against it.
//!
//! The exact solver reuses the outer loop of the reduction with a dense LP
//! over every state in place of the black-box machinery. Random-mixture
//! dominance sampling gives an independent falsifier for both.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::apps::{AppError, Instance, ENUMERATION_CAP};
use crate::blackbox::derive_seed;
use crate::leximin::{leximin_compare, sorted_ascending, LeximinOrdering};
use crate::lp::{solve_dense_lp, DenseLP, LpOutcome, RowSense, Sense};
use crate::model::{ExpectedVector, SparseDistribution, StateHandle, StateRecord, TAU_DIST};
use crate::parallel::{map_indexed, Execution};
use crate::reduction::main_loop::IterationOutcome;
use crate::reduction::{p1_objective, run_main_loop, P1Solver, ProgramContext, ReductionError};

/// Every state of an instance, the degenerate one included, keyed by handle.
#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedUniverse {
    n: usize,
    states: Vec<StateRecord>,
}

impl EnumeratedUniverse {
    /// Adds the degenerate state if missing and drops repeated handles.
    pub fn new(n: usize, mut states: Vec<StateRecord>) -> Self {
        states.push(StateRecord::degenerate(n));
        states.sort_by(|a, b| a.handle.cmp(&b.handle));
        states.dedup_by(|a, b| a.handle == b.handle);
        Self { n, states }
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[StateRecord] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, handle: &StateHandle) -> Option<&StateRecord> {
        self.states
            .binary_search_by(|s| s.handle.cmp(handle))
            .ok()
            .map(|k| &self.states[k])
    }

    /// The record is one of the enumerated states, with the same utilities.
    pub fn contains(&self, record: &StateRecord) -> bool {
        self.get(&record.handle).is_some_and(|s| s.utilities == record.utilities)
    }
}

pub fn enumerate_states(instance: &Instance) -> Result<EnumeratedUniverse, AppError> {
    enumerate_states_capped(instance, ENUMERATION_CAP)
}

pub fn enumerate_states_capped(instance: &Instance, cap: usize) -> Result<EnumeratedUniverse, AppError> {
    Ok(EnumeratedUniverse::new(instance.agents(), instance.enumerate(cap)?))
}

/// Exact solver for the iteration-`t` program: a dense LP with one column
/// per enumerated state plus the auxiliary linearization variables.
pub struct ExactP1<'a> {
    universe: &'a EnumeratedUniverse,
}

impl<'a> ExactP1<'a> {
    pub fn new(universe: &'a EnumeratedUniverse) -> Self {
        Self { universe }
    }
}

impl P1Solver for ExactP1<'_> {
    fn agents(&self) -> usize {
        self.universe.n
    }

    fn solve_iteration(
        &mut self,
        ctx: &ProgramContext,
        _warm: &SparseDistribution,
    ) -> Result<IterationOutcome, ReductionError> {
        let n = self.universe.n;
        let t = ctx.t;
        let states = &self.universe.states;
        let k = states.len();
        let y = |l: usize| k + l - 1;
        let m = |l: usize, i: usize| k + t + (l - 1) * n + i;
        let vars = k + t + t * n;

        let mut objective = vec![0.0; vars];
        objective[y(t)] = t as f64;
        for i in 0..n {
            objective[m(t, i)] = -1.0;
        }
        let mut lp = DenseLP::new(Sense::Maximize, objective);
        for l in 1..=t {
            lp.set_free(y(l));
        }
        let mut row = vec![0.0; vars];
        row[..k].iter_mut().for_each(|c| *c = 1.0);
        lp.add_row(row, RowSense::Eq, 1.0);
        for (l, target) in ctx.prefix_targets().iter().enumerate().map(|(j, z)| (j + 1, *z)) {
            let mut row = vec![0.0; vars];
            row[y(l)] = l as f64;
            for i in 0..n {
                row[m(l, i)] = -1.0;
            }
            lp.add_row(row, RowSense::Ge, target - 1e-11 * (1.0 + target.abs()));
        }
        for l in 1..=t {
            for i in 0..n {
                let mut row = vec![0.0; vars];
                for (j, s) in states.iter().enumerate() {
                    row[j] = s.utilities.get(i);
                }
                row[y(l)] = -1.0;
                row[m(l, i)] = 1.0;
                lp.add_row(row, RowSense::Ge, 0.0);
            }
        }

        let x = match solve_dense_lp(&lp)? {
            LpOutcome::Optimal { x, .. } => x,
            other => {
                return Err(ReductionError::Invariant(format!(
                    "exact iteration-{t} program is {other:?}; the previous iteration's lottery should be feasible"
                )))
            }
        };
        let total: f64 = x[..k].iter().map(|v| v.max(0.0)).sum();
        let entries = states
            .iter()
            .zip(&x[..k])
            .filter(|(_, &p)| p > 1e-12)
            .map(|(s, &p)| (s.clone(), p / total));
        let dist = SparseDistribution::new(n, entries)?;
        let z = p1_objective(&dist, ctx);
        Ok(IterationOutcome {
            x: dist,
            z,
            probes: Vec::new(),
            upper_clamped: false,
        })
    }
}

/// The leximin-optimal lottery over the enumerated states and its expected
/// vector.
pub fn brute_force_leximin(universe: &EnumeratedUniverse) -> Result<(SparseDistribution, ExpectedVector), ReductionError> {
    let mut solver = ExactP1::new(universe);
    let (x, _, _) = run_main_loop(&mut solver, 1e-6)?;
    let x = x.without_negligible_degenerate(TAU_DIST);
    let e = x.expected_utilities();
    Ok((x, e))
}

/// Largest achievable minimum expectation, from one dense LP.
pub fn max_min_value(universe: &EnumeratedUniverse) -> Result<f64, ReductionError> {
    let k = universe.len();
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut lp = DenseLP::new(Sense::Maximize, objective);
    let mut row = vec![1.0; k + 1];
    row[k] = 0.0;
    lp.add_row(row, RowSense::Eq, 1.0);
    for i in 0..universe.n {
        let mut row: Vec<f64> = universe.states.iter().map(|s| s.utilities.get(i)).collect();
        row.push(-1.0);
        lp.add_row(row, RowSense::Ge, 0.0);
    }
    match solve_dense_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        other => Err(ReductionError::Invariant(format!("max-min program is {other:?}"))),
    }
}

/// Outcome of random-mixture dominance sampling.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub samples: usize,
    pub dominating: usize,
    /// Expected vector of the first dominating mixture found, if any.
    pub witness: Option<Vec<f64>>,
}

/// Expected vector of a random mixture of a few states (sample `index`).
pub fn random_mixture(universe: &EnumeratedUniverse, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index));
    let k = universe.len();
    let picks = rng.gen_range(1..=k.min(universe.n + 2));
    let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
    for _ in 0..picks {
        let w: f64 = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln();
        *weights.entry(rng.gen_range(0..k)).or_insert(0.0) += w;
    }
    let total: f64 = weights.values().sum();
    let mut e = vec![0.0; universe.n];
    for (j, w) in weights {
        for (i, ei) in e.iter_mut().enumerate() {
            *ei += w / total * universe.states[j].utilities.get(i);
        }
    }
    e
}

/// Samples random mixtures of enumerated states and counts those that
/// leximin-dominate `expected` by more than `tol`.
pub fn dominance_check(
    universe: &EnumeratedUniverse,
    expected: &ExpectedVector,
    samples: usize,
    seed: u64,
    tol: f64,
    exec: Execution,
) -> DominanceReport {
    let hits = map_indexed(exec, samples, |s| {
        let e = ExpectedVector(random_mixture(universe, seed, s as u64));
        match leximin_compare(&e, expected, tol) {
            Ok(LeximinOrdering::StrictlyPreferred) => Some(e.0),
            _ => None,
        }
    });
    let dominating = hits.iter().filter(|h| h.is_some()).count();
    DominanceReport {
        samples,
        dominating,
        witness: hits.into_iter().flatten().next(),
    }
}

/// Verdict on a candidate lottery, listing the sorted vectors side by side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictReport {
    pub pass: bool,
    pub valid: bool,
    pub support_feasible: bool,
    pub approximation: bool,
    pub alpha: f64,
    pub eps: f64,
    pub candidate_sorted: Vec<f64>,
    pub optimum_sorted: Vec<f64>,
    /// `alpha * optimum - eps`, sorted.
    pub target_sorted: Vec<f64>,
    pub failures: Vec<String>,
}

/// Checks `candidate` against a known optimum: a valid lottery, supported
/// on states of `universe`, and leximin-weakly-preferred to
/// `alpha * optimum - eps`.
pub fn verify_against(
    universe: &EnumeratedUniverse,
    optimum: &ExpectedVector,
    candidate: &SparseDistribution,
    alpha: f64,
    eps: f64,
) -> VerdictReport {
    let mut failures = Vec::new();
    let total = candidate.total();
    let valid = candidate.agents() == universe.n
        && (total - 1.0).abs() <= TAU_DIST
        && candidate.iter().all(|(_, p)| p >= 0.0);
    if !valid {
        failures.push(format!(
            "not a lottery over {} agents: {} agents, total mass {total}",
            universe.n,
            candidate.agents()
        ));
    }
    let mut support_feasible = true;
    for (record, _) in candidate.iter() {
        if !universe.contains(record) {
            support_feasible = false;
            failures.push(format!("state {} is not a state of the instance", record.handle));
        }
    }
    let e = candidate.expected_utilities();
    let target = optimum.scaled(alpha).shifted(-eps);
    let scale = optimum.0.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let approximation = match leximin_compare(&e, &target, 1e-9 * scale) {
        Ok(ord) => ord.is_weakly_preferred(),
        Err(err) => {
            failures.push(err.to_string());
            false
        }
    };
    if !approximation {
        failures.push(format!("expected vector is leximin-below {alpha} * optimum - {eps}"));
    }
    VerdictReport {
        pass: valid && support_feasible && approximation,
        valid,
        support_feasible,
        approximation,
        alpha,
        eps,
        candidate_sorted: sorted_ascending(&e).0,
        optimum_sorted: sorted_ascending(optimum).0,
        target_sorted: sorted_ascending(&target).0,
        failures,
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    App(#[from] AppError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

/// Enumerates `instance`, computes its leximin optimum and checks that
/// `candidate` is an `(alpha, eps)`-leximin-approximation.
pub fn verify_output(
    instance: &Instance,
    candidate: &SparseDistribution,
    alpha: f64,
    eps: f64,
) -> Result<VerdictReport, OracleError> {
    let universe = enumerate_states(instance)?;
    let (_, optimum) = brute_force_leximin(&universe)?;
    Ok(verify_against(&universe, &optimum, candidate, alpha, eps))
}
