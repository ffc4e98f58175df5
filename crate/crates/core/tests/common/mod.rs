//! Seeded instance generators and a pipeline wrapper shared by the
//! integration tests.
#![allow(dead_code)]

use leximin::apps::{
    build_blackbox, AllocationInstance, AllocationUtilities, BudgetInstance, CoverageUtility, ExplicitInstance,
    GiveawayInstance, Instance, SolverChoice,
};
use leximin::reduction::{leximin_main_loop, ReductionError, ReductionParams, RunReport};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` agents and 1 to `max_states` listed states with integer utilities
/// in `[0, 10]`.
pub fn explicit(rng: &mut ChaCha8Rng, n: usize, max_states: usize) -> Instance {
    let k = rng.gen_range(1..=max_states);
    let states = (0..k)
        .map(|_| (0..n).map(|_| rng.gen_range(0..=10) as f64).collect())
        .collect();
    Instance::Explicit(ExplicitInstance::new(n, states).unwrap())
}

pub fn additive(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Instance {
    let values = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0..=10) as f64).collect())
        .collect();
    Instance::Allocation(AllocationInstance::new(n, m, AllocationUtilities::Additive(values)).unwrap())
}

/// Weighted coverage utilities over a private ground set per agent.
pub fn coverage(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Instance {
    let specs = (0..n)
        .map(|_| {
            let ground = rng.gen_range(3..=6);
            let weights = (0..ground).map(|_| rng.gen_range(1..=5) as f64).collect();
            let covers = (0..m)
                .map(|_| (0..ground).filter(|_| rng.gen_bool(0.4)).collect())
                .collect();
            CoverageUtility { weights, covers }
        })
        .collect();
    Instance::Allocation(AllocationInstance::new(n, m, AllocationUtilities::Coverage(specs)).unwrap())
}

/// 2 to `max_groups` groups, capacity at most `max_capacity`, total size
/// above capacity.
pub fn giveaway(rng: &mut ChaCha8Rng, max_groups: usize, max_capacity: u64) -> Instance {
    loop {
        let n = rng.gen_range(2..=max_groups);
        let capacity = rng.gen_range(1..=max_capacity);
        let sizes: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=capacity)).collect();
        if let Ok(g) = GiveawayInstance::new(sizes, capacity) {
            return Instance::Giveaway(g);
        }
    }
}

/// 2 or 3 voters, 1 to `max_projects` projects, budget at most `max_budget`.
pub fn budget(rng: &mut ChaCha8Rng, max_projects: usize, max_budget: u64) -> Instance {
    let voters = rng.gen_range(2..=3);
    let projects = rng.gen_range(1..=max_projects);
    let budget = rng.gen_range(1..=max_budget);
    let costs = (0..projects).map(|_| rng.gen_range(1..=budget.max(2))).collect();
    let utilities = (0..voters)
        .map(|_| (0..projects).map(|_| rng.gen_range(0..=5) as f64).collect())
        .collect();
    Instance::Budget(BudgetInstance::new(costs, budget, utilities).unwrap())
}

/// Runs the pipeline with the solver's own approximation factor.
pub fn run(instance: &Instance, choice: SolverChoice, eps: f64, params: &ReductionParams) -> Result<RunReport, ReductionError> {
    let bb = build_blackbox(instance, choice).unwrap();
    let alpha = bb.spec().alpha;
    leximin_main_loop(bb.as_ref(), alpha, eps, params)
}

pub fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Largest per-entry gap between two vectors after sorting both.
pub fn sorted_gap(a: &[f64], b: &[f64]) -> f64 {
    sorted(a)
        .iter()
        .zip(sorted(b))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
