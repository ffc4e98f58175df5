//! Linear programming: a dense simplex for small programs, and an ellipsoid
//! method whose cut log yields a sparse approximate primal solution.

pub mod ellipsoid;
pub mod recover;
pub mod simplex;

pub use ellipsoid::{
    ellipsoid_solve, CutKind, CutLog, CutRecord, EllipsoidError, EllipsoidOutcome, EllipsoidParams, EllipsoidState,
    ExplicitDual, RowId, Separation, SeparationOracle, StopReason,
};
pub use recover::{recover_sparse_primal, reduced_columns, solve_reduced, PrimalColumn, RecoverError, RecoveredPrimal};
pub use simplex::{solve_dense_lp, Constraint, DenseLP, LpError, LpOutcome, RowSense, Sense};
