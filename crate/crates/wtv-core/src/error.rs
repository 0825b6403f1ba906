//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A frame carries no positive mass after clamping negatives to zero,
    /// so there is nothing to put on the probability simplex.
    #[error("frame {frame} has zero total mass after clamping; nothing to transport")]
    AllZeroFrame { frame: usize },

    /// `denormalize` was called on a series that never went through `normalize`.
    #[error("series carries no per-frame mass scale; run normalize first")]
    MissingScale,

    /// A vector had the wrong length for the operator it was applied to.
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// A time series is too short for the requested finite-difference order.
    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    /// An iterative solver hit its iteration cap before meeting its certificate.
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    /// A Sinkhorn update produced a zero or non-finite denominator. Enable
    /// log-domain updates or raise gamma.
    #[error("numeric underflow in sinkhorn update{}", transition.map(|t| format!(" at transition {t}")).unwrap_or_default())]
    NumericUnderflow { transition: Option<usize> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input to the Wasserstein filter must be on the per-frame simplex.
    #[error("series is not normalized: frame {frame} sums to {sum}")]
    NotNormalized { frame: usize, sum: f64 },

    #[error("invalid ring spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Otsu thresholding needs at least two distinct intensity values.
    #[error("frame is constant; no threshold separates foreground from background")]
    ConstantFrame,

    /// The calibration target lies outside the fidelity range spanned by the bracket.
    #[error("target fidelity {target} outside bracket range [{lo_fidelity}, {hi_fidelity}]")]
    BracketInvalid {
        target: f64,
        lo_fidelity: f64,
        hi_fidelity: f64,
    },

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value in frame {frame}")]
    NonFinite { frame: usize },

    /// A linear system factorization found a non-positive pivot.
    #[error("linear system is singular or not positive definite")]
    SingularSystem,
}

pub type Result<T> = std::result::Result<T, Error>;
