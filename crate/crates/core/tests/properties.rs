mod common;

use common::rng;
use leximin::apps::{Instance, SolverChoice};
use leximin::oracle::{brute_force_leximin, dominance_check, enumerate_states, verify_against};
use leximin::parallel::Execution;
use leximin::reduction::programs::smallest_sum;
use leximin::reduction::ReductionParams;
use proptest::prelude::*;

fn any_instance(seed: u64) -> (Instance, SolverChoice) {
    let mut r = rng(seed);
    match seed % 5 {
        0 => (common::explicit(&mut r, 2 + (seed / 5 % 2) as usize, 6), SolverChoice::Exhaustive),
        1 => (common::additive(&mut r, 2, 3), SolverChoice::GreedyAdditive),
        2 => (common::coverage(&mut r, 2, 3), SolverChoice::GreedySubmodular),
        3 => (common::giveaway(&mut r, 4, 8), SolverChoice::KnapsackExact),
        _ => (common::budget(&mut r, 4, 8), SolverChoice::KnapsackFptas { eps: 0.2 }),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pipeline_output_is_a_feasible_lottery(seed in 0u64..1_000_000) {
        let (instance, choice) = any_instance(seed);
        let report = common::run(&instance, choice, 1e-6, &ReductionParams::default()).unwrap();
        let universe = enumerate_states(&instance).unwrap();
        let (_, optimum) = brute_force_leximin(&universe).unwrap();
        let verdict = verify_against(&universe, &optimum, &report.distribution, report.alpha, f64::INFINITY);
        prop_assert!(verdict.valid && verdict.support_feasible, "{:?}", verdict.failures);
        prop_assert!(report.distribution.support_size() <= report.support_cap);
        for (record, _) in report.distribution.iter() {
            let outcome = instance.decode_state(record).unwrap();
            prop_assert!(instance.is_feasible(&outcome));
        }
    }

    #[test]
    fn expected_vector_meets_every_prefix_target(seed in 0u64..1_000_000) {
        let (instance, choice) = any_instance(seed);
        let report = common::run(&instance, choice, 1e-6, &ReductionParams::default()).unwrap();
        let e = &report.expected.0;
        let mut prefix = 0.0;
        for (t, z) in report.z.iter().enumerate() {
            prefix += z;
            let slack = 1e-6 * (1.0 + prefix.abs());
            prop_assert!(smallest_sum(e, t + 1) >= prefix - slack, "t = {}: {:?} vs {:?}", t + 1, e, report.z);
        }
    }

    #[test]
    fn runs_are_reproducible(seed in 0u64..1_000_000) {
        let (instance, choice) = any_instance(seed);
        let params = ReductionParams { seed, ..Default::default() };
        let a = common::run(&instance, choice, 1e-6, &params).unwrap();
        let b = common::run(&instance, choice, 1e-6, &params).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn instances_survive_a_json_round_trip(seed in 0u64..1_000_000) {
        let (instance, _) = any_instance(seed);
        let back = Instance::from_json(&instance.to_json()).unwrap();
        prop_assert_eq!(&back, &instance);
        for record in enumerate_states(&instance).unwrap().states() {
            let outcome = instance.decode_handle(&record.handle).unwrap();
            prop_assert_eq!(instance.record(&outcome), Some(record.clone()));
        }
    }

    #[test]
    fn execution_modes_agree(seed in 0u64..1_000_000) {
        let (instance, _) = any_instance(seed);
        let universe = enumerate_states(&instance).unwrap();
        let (_, optimum) = brute_force_leximin(&universe).unwrap();
        let seq = dominance_check(&universe, &optimum, 300, seed, 1e-7, Execution::Sequential);
        let par = dominance_check(&universe, &optimum, 300, seed, 1e-7, Execution::Parallel);
        prop_assert_eq!(&seq, &par);
        prop_assert_eq!(seq.dominating, 0);
    }
}
