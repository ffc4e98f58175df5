//! Welfare black-boxes for each application.

use std::fmt;
use std::str::FromStr;

use crate::blackbox::allocation::{greedy_additive_allocate, greedy_submodular_allocate};
use crate::blackbox::knapsack::{knapsack_exact, knapsack_fptas};
use crate::blackbox::{BlackBoxSpec, Exhaustive, UtilitarianSolver, WeightVector};
use crate::model::{Outcome, StateRecord};

use super::{pb_item_values, AllocationInstance, AppError, Instance, ENUMERATION_CAP};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverChoice {
    /// Scan every enumerated state; any kind, small instances only.
    Exhaustive,
    /// Each good to the agent valuing it most; exact for additive utilities.
    GreedyAdditive,
    /// Greedy on marginal gains; 1/2-approximate for submodular utilities.
    GreedySubmodular,
    KnapsackExact,
    KnapsackFptas { eps: f64 },
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exhaustive => "exhaustive",
            Self::GreedyAdditive => "greedy-additive",
            Self::GreedySubmodular => "greedy-submodular",
            Self::KnapsackExact => "knapsack-exact",
            Self::KnapsackFptas { .. } => "knapsack-fptas",
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    /// Parses a solver name; the FPTAS gets a placeholder accuracy of 0.1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "exhaustive" => Self::Exhaustive,
            "greedy-additive" => Self::GreedyAdditive,
            "greedy-submodular" => Self::GreedySubmodular,
            "knapsack-exact" => Self::KnapsackExact,
            "knapsack-fptas" => Self::KnapsackFptas { eps: 0.1 },
            other => return Err(format!("unknown solver `{other}`")),
        })
    }
}

/// Builds a welfare maximizer for `instance`.
pub fn build_blackbox(instance: &Instance, choice: SolverChoice) -> Result<Box<dyn UtilitarianSolver>, AppError> {
    let incompatible = || AppError::Incompatible {
        solver: choice.name().to_string(),
        kind: instance.kind(),
    };
    match (choice, instance) {
        (SolverChoice::Exhaustive, _) => {
            let states = instance.enumerate(ENUMERATION_CAP)?;
            Ok(Box::new(Exhaustive::new(instance.agents(), states)))
        }
        (SolverChoice::GreedyAdditive, Instance::Allocation(a)) if a.is_additive() => Ok(Box::new(GreedyAllocation {
            instance: instance.clone(),
            allocation: a.clone(),
            submodular: false,
        })),
        (SolverChoice::GreedySubmodular, Instance::Allocation(a)) => Ok(Box::new(GreedyAllocation {
            instance: instance.clone(),
            allocation: a.clone(),
            submodular: true,
        })),
        (SolverChoice::KnapsackExact, Instance::Giveaway(_) | Instance::Budget(_)) => Ok(Box::new(Knapsack {
            instance: instance.clone(),
            fptas: None,
        })),
        (SolverChoice::KnapsackFptas { eps }, Instance::Giveaway(_) | Instance::Budget(_)) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(crate::blackbox::BlackBoxError::FptasEpsilon(eps).into());
            }
            Ok(Box::new(Knapsack {
                instance: instance.clone(),
                fptas: Some(eps),
            }))
        }
        _ => Err(incompatible()),
    }
}

/// Wraps a feasible outcome, returning the degenerate state when it is worth
/// nothing under `weights`.
fn finish(instance: &Instance, outcome: Outcome, weights: &WeightVector) -> StateRecord {
    let record = instance.record(&outcome).expect("solvers only produce feasible outcomes");
    if weights.welfare(&record.utilities) > 0.0 {
        record
    } else {
        StateRecord::degenerate(instance.agents())
    }
}

struct GreedyAllocation {
    instance: Instance,
    allocation: AllocationInstance,
    submodular: bool,
}

impl UtilitarianSolver for GreedyAllocation {
    fn agents(&self) -> usize {
        self.allocation.agents
    }

    fn spec(&self) -> BlackBoxSpec {
        if self.submodular && !self.allocation.is_additive() {
            BlackBoxSpec::new(0.5, 1.0, "greedy-submodular").expect("valid spec")
        } else {
            BlackBoxSpec::exact(if self.submodular { "greedy-submodular" } else { "greedy-additive" })
        }
    }

    fn solve(&self, weights: &WeightVector, _seed: u64) -> StateRecord {
        let a = &self.allocation;
        let owner = match (&a.utilities, self.submodular) {
            (super::AllocationUtilities::Additive(values), false) => greedy_additive_allocate(values, weights.as_slice()),
            _ => greedy_submodular_allocate(a.agents, a.goods, |i, bundle| a.value(i, bundle), weights.as_slice()),
        };
        finish(&self.instance, Outcome::Allocation { owner }, weights)
    }
}

struct Knapsack {
    instance: Instance,
    fptas: Option<f64>,
}

impl UtilitarianSolver for Knapsack {
    fn agents(&self) -> usize {
        self.instance.agents()
    }

    fn spec(&self) -> BlackBoxSpec {
        match self.fptas {
            Some(eps) => BlackBoxSpec::new(1.0 - eps, 1.0, format!("knapsack-fptas[eps={eps}]")).expect("checked at build"),
            None => BlackBoxSpec::exact("knapsack-exact"),
        }
    }

    fn solve(&self, weights: &WeightVector, _seed: u64) -> StateRecord {
        let (values, sizes, capacity) = match &self.instance {
            Instance::Giveaway(g) => (weights.as_slice().to_vec(), g.sizes.clone(), g.capacity),
            Instance::Budget(b) => (pb_item_values(b, weights), b.costs.clone(), b.budget),
            _ => unreachable!("knapsack solvers are only built for giveaway and budget instances"),
        };
        let chosen = match self.fptas {
            Some(eps) => knapsack_fptas(&values, &sizes, capacity, eps),
            None => knapsack_exact(&values, &sizes, capacity),
        }
        .expect("lengths and accuracy validated at build");
        let outcome = match &self.instance {
            Instance::Giveaway(_) => Outcome::Admitted { groups: chosen },
            _ => Outcome::Funded { projects: chosen },
        };
        finish(&self.instance, outcome, weights)
    }
}
