//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by validation and capacity checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is not a projector (residual {residual:.3e})")]
    NotProjector { residual: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("not a density operator: {reason}")]
    NotDensity { reason: String },

    #[error("invalid projector family: {reason}")]
    InvalidFamily { reason: String },

    #[error("capacity exceeded: {what} = {requested} exceeds cap {cap}")]
    Capacity {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("assignments overlap at factor {factor}")]
    OverlappingFactors { factor: usize },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid bipartition: {reason}")]
    InvalidCut { reason: String },

    #[error("incomplete pointer basis: {reason}")]
    IncompleteBasis { reason: String },

    #[error(
        "re-interference detected: max cross-branch record overlap {max_overlap:.3e} exceeds {tol:.3e}"
    )]
    Reinterference { max_overlap: f64, tol: f64 },

    #[error("cannot drop a time from a single-time history family")]
    SingleTime,

    #[error("record target ({tx},{tt}) lies outside the future lightcone of ({sx},{st})")]
    AcausalRecord { sx: i64, st: i64, tx: i64, tt: i64 },

    #[error("points ({ax},{at}) and ({bx},{bt}) are not space-like separated")]
    NonSpacelikePair { ax: i64, at: i64, bx: i64, bt: i64 },

    #[error("invalid foliation: {reason}")]
    InvalidFoliation { reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
