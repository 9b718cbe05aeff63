use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate label id `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label id `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("not a permutation of the operator labels")]
    NotAPermutation,
    #[error("invalid Hamiltonian for `{0}`: {1}")]
    InvalidHamiltonian(String, String),
    #[error("inconsistent Kraus operators: {0}")]
    InconsistentKraus(String),
    #[error("invalid comb: {0}")]
    InvalidComb(String),
    #[error("wiring mismatch: {0}")]
    WiringMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature did not converge (change {0:.3e})")]
    QuadratureNonConvergence(f64),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("size budget exceeded: {0}")]
    SizeBudget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
