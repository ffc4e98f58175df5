//! Leximin-approximate lotteries over deterministic states, computed from an
//! approximate maximizer of weighted utilitarian welfare.

// `!(x > 0.0)` style checks are how NaN gets rejected; dense numeric loops
// read better with indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apps;
pub mod blackbox;
pub mod leximin;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod reduction;
