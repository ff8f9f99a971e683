//! Solution-probability estimation for binary constraint satisfaction
//! problems by probabilistic arc consistency, with the classical and rival
//! estimators it is compared against, an exhaustive-count oracle, and a
//! backtracking searcher that uses the estimates as ordering heuristics.

pub mod ac3;
pub mod baselines;
pub mod csp;
pub mod estimate;
pub mod error;
pub mod format;
pub mod generator;
pub mod harness;
pub mod oracle;
pub mod pac;
pub mod search;

pub use csp::{AllowMatrix, CspInstance, GraphInfo, Var};
pub use error::{Error, Result};
