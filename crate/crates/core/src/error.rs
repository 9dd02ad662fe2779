//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IronfaceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral parameter {lambda} is singular (denominator magnitude {magnitude:.3e})")]
    SingularSpectralParameter { lambda: String, magnitude: f64 },

    #[error("size {size} exceeds the dense limit {limit}")]
    SizeTooLarge { size: usize, limit: usize },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("vertex/IRF spectral mapping mismatch {0:.3e}")]
    MappingMismatch(f64),

    #[error("ambiguous subleading degeneracy: {0} states share the same modulus")]
    DegeneracyAmbiguity(usize),

    #[error("lambda2 vanishes at Bethe root {0}")]
    DivisionByZeroAtRoot(usize),

    #[error("argument {0} lies outside the analyticity strip")]
    OutOfStrip(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("grid too coarse: driving term is {0:.3e} at the boundary")]
    GridTooCoarse(f64),

    #[error("magnetic sector M={0} is odd")]
    OddMagneticSector(i64),
}

pub type Result<T> = std::result::Result<T, IronfaceError>;
