use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("flavor or cutoff mismatch: {0}")]
    Mismatch(String),
    #[error("polynomial degree {degree} exceeds cutoff {n_max}")]
    DegreeOverflow { degree: usize, n_max: usize },
    #[error("hbar must be positive for a Moyal bracket; use the Poisson bracket")]
    ZeroHbar,
    #[error("singular system: {0}")]
    Singular(String),
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("empty feasible set: {0}")]
    EmptyFeasibleSet(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
