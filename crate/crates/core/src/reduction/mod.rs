//! The reduction from leximin to utilitarian welfare: main loop, shallow
//! binary-search solver, weak feasibility oracle, sparse solver for the
//! linearized program, and the black-box separation oracle for its dual.

pub mod main_loop;
pub mod p3;
pub mod programs;
pub mod separation;
pub mod shallow;

use thiserror::Error;

use crate::blackbox::BlackBoxError;
use crate::lp::{EllipsoidError, EllipsoidParams, LpError, RecoverError};
use crate::model::{ModelError, TAU_DIST};

pub use main_loop::{leximin_main_loop, run_main_loop, IterationSummary, P1Solver, RunReport, ShallowP1};
pub use p3::{solve_p2_sparse, solve_p3_sparse, BoundingStates, P3Run, P3Stats};
pub use programs::{p1_feasible, p1_objective, DualPoint, P3Solution, ProgramContext, StateKey};
pub use separation::{separation_oracle_d3, DualSeparation};
pub use shallow::{shallow_solve, upgrade_retained, weak_feasibility_oracle, Probe, ShallowOutcome, WeakVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("iteration {t} needs {expected} earlier values, got {prefix}", expected = t.saturating_sub(1))]
    Context { t: usize, prefix: usize },
    #[error("the program needs a target value for the current iteration")]
    MissingTarget,
    #[error("alpha must lie in (0, 1], got {0}")]
    Alpha(f64),
    #[error("binary-search error must be positive, got {0}")]
    Eps(f64),
    #[error("warm start is not feasible for iteration {t}")]
    WarmStartInfeasible { t: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Ellipsoid(#[from] EllipsoidError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Recover(#[from] RecoverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    BlackBox(#[from] BlackBoxError),
}

/// How to protect a randomized black-box by repetition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoostPolicy {
    /// Derive the repetition count from the success probability and an upper
    /// estimate of the number of calls in a run.
    Auto,
    Fixed(u64),
    Off,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionParams {
    pub ellipsoid: EllipsoidParams,
    pub tau_dist: f64,
    /// How far above one the sparse solution's total may go and still be
    /// accepted (then renormalized). Later iterations can trade this slack
    /// for large gains elsewhere, so it is kept well below `tau_dist`.
    pub mass_slack: f64,
    /// Scale every sparse solution by `1/alpha`, the most the approximate
    /// solver is allowed to lose. Makes the feasibility oracle decide
    /// exactly as if the black-box were only `alpha`-approximate.
    pub worst_case_scaling: bool,
    /// Report each iteration's value as the objective its retained lottery
    /// attains, after rescaling that lottery's non-degenerate mass to one.
    /// When off, the value is the binary search's lower end.
    pub upgrade_retained: bool,
    /// Probability of wrongly approving a violated dual point (fault injection).
    pub false_approval_rate: f64,
    pub boost: BoostPolicy,
    pub seed: u64,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            ellipsoid: EllipsoidParams::default(),
            tau_dist: TAU_DIST,
            mass_slack: 1e-9,
            worst_case_scaling: false,
            upgrade_retained: true,
            false_approval_rate: 0.0,
            boost: BoostPolicy::Auto,
            seed: 0,
        }
    }
}
