use thiserror::Error;

/// Errors produced by the library.
///
/// The distinction between variants matters to callers: `Validation` means
/// the input data is malformed, while e.g. `NearBifurcation` means the input
/// was well-formed but the field sits too close to the bifurcation set for
/// the requested computation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("consistency: {0}")]
    Consistency(String),
    #[error("path construction: {0}")]
    PathConstruction(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("near bifurcation: {0}")]
    NearBifurcation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
