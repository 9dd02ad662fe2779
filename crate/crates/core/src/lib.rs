//! Numerical toolkit for the face (IRF) version of the six-vertex model.
//!
//! The crate builds Boltzmann weights and transfer matrices, the associated
//! three-spin quantum chain, and solves the finite-temperature non-linear
//! integral equations of the quantum transfer matrix.

pub mod asymptotics;
pub mod bethe;
pub mod error;
pub mod nlie;
pub mod operators;
pub mod spectra;
pub mod weights;

pub use error::{IronfaceError, Result};
pub use operators::{DenseOperator, ModelParams};
pub use weights::{FaceWeightTable, Regime, RegimeKind, VertexWeights};
