use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(usize, usize, &'static str),
    #[error("invalid node subset: {0}")]
    InvalidSubset(String),
    #[error("unsupported size {size}: {reason}")]
    UnsupportedSize { size: usize, reason: &'static str },
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("infeasible constraint system; violated constraints: {}", .0.join(", "))]
    Infeasible(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;
