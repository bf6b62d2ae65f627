//! Error type shared by all modules.

use thiserror::Error;

/// Errors for attack construction and bound evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimension {0} is odd; quadrature matrices are 2n x 2n")]
    OddDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("conditioning block is singular")]
    SingularConditioning,

    #[error("symplectic invariants are implemented for 3 modes only, got {0}")]
    UnsupportedModeCount(usize),

    #[error(
        "channel T = {transmission}, chi = {chi} cannot be made symmetric: rho = {rho} < 0"
    )]
    NotSymmetrizable {
        transmission: f64,
        chi: f64,
        rho: f64,
    },

    #[error("degenerate channel: vanishing signal transmission on the {0} quadrature")]
    DegenerateChannel(&'static str),

    #[error("orthogonal completion is degenerate: the unmeasured ancilla decouples")]
    DegenerateBasis,

    #[error("{attack} tuning unrealizable: {reason}")]
    UnrealizableTuning {
        attack: &'static str,
        reason: String,
    },

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("inconsistent invariant solution: discriminant = {discriminant}")]
    InconsistentSolution { discriminant: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
