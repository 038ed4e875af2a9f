use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} sites, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("site index {site} out of range for a {n_sites}-site system")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("operator is not Hermitian (largest imaginary coefficient {0:e})")]
    NotHermitian(f64),

    #[error("spin conventions differ between operands ({0} vs {1})")]
    ConventionMismatch(&'static str, &'static str),

    #[error("at most {max} sites may be kept in a reduced density matrix, got {got}")]
    TooManyKeptSites { got: usize, max: usize },

    #[error("dense representation limited to {max} sites, got {n_sites}")]
    DenseLimit { n_sites: usize, max: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("pulse sequence is not cyclic (residual {0:e})")]
    NonCyclic(f64),

    #[error("matrix is not unitary (residual {0:e})")]
    NonUnitary(f64),

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("imaginary residue {0:e} in expectation value")]
    ImaginaryResidue(f64),

    #[error("channel reconstruction residual {0:e} exceeds tolerance")]
    ChannelResidual(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
