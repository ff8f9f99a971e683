use thiserror::Error;

use crate::csp::Var;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constraint between {0} and {1} given more than once")]
    DuplicateEdge(Var, Var),
    #[error("self-constraint on variable {0}")]
    SelfLoop(Var),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("no constraint between {0} and {1}")]
    NoSuchEdge(Var, Var),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("non-finite belief state at iteration {0}")]
    NonFiniteState(usize),
    #[error("census was truncated by its cap; frequencies are unavailable")]
    TruncatedCensus,
    #[error("invalid spanning tree: {0}")]
    InvalidTree(String),
    #[error("invalid variable ordering: {0}")]
    InvalidOrdering(String),
    #[error("constraint ({0}, {1}) is not covered by any tree of the forest")]
    EdgeNotCovered(Var, Var),
    #[error("correlation undefined: a vector has zero variance")]
    DegenerateVariance,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for failures of floating-point state rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFiniteInput | Error::NonFiniteState(_))
    }
}
