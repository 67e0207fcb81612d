//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::dsl::{EvalError, ParseError};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the toolkit.
///
/// The variants are split into two families: configuration/argument errors
/// (the caller asked for something ill-formed) and numerical failures (the
/// request was well-formed but the computation could not be completed).  The
/// command-line front end maps them to exit codes 2 and 3 respectively.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two arrays or fields have incompatible shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A Fourier symbol evaluated to NaN or infinity.
    #[error("symbol is not finite at lattice point k=({k1}, {k2}) (xi=({xi1}, {xi2}))")]
    NonFiniteSymbol {
        /// First lattice index.
        k1: i64,
        /// Second lattice index.
        k2: i64,
        /// First frequency component.
        xi1: f64,
        /// Second frequency component.
        xi2: f64,
    },

    /// An operator with a `|D|^{-1}`-type factor was applied to data with a
    /// nonzero mean.
    #[error("zero-mode obstruction: |coeff(0)| = {value:e} exceeds {threshold:e}")]
    ZeroMode {
        /// Magnitude of the offending zero-frequency coefficient.
        value: f64,
        /// Admissible threshold.
        threshold: f64,
    },

    /// The per-frequency collocation matrix could not be factored reliably.
    #[error("singular collocation matrix at xi=({xi1}, {xi2}): condition estimate {cond:e}")]
    Singular {
        /// First frequency component.
        xi1: f64,
        /// Second frequency component.
        xi2: f64,
        /// Pivot-ratio condition estimate.
        cond: f64,
    },

    /// Zero-frequency data violate the divergence/kinematic compatibility.
    #[error("compatibility violated at xi=0: {0}")]
    Compatibility(String),

    /// The flattening map is not a diffeomorphism (Jacobian too small).
    #[error("flattening degenerate: min J = {0}")]
    DegenerateGeometry(f64),

    /// A sample point lies outside the fluid domain.
    #[error("point outside domain: {0}")]
    OutsideDomain(String),

    /// The quasi-Newton iteration stopped contracting.
    #[error("outside small-data regime: {0}")]
    NonContraction(String),

    /// The iteration hit its iteration cap before reaching tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A verification check did not meet its tolerance.
    #[error("check failed: {0}")]
    CheckFailed(String),

    /// A request outside the supported scope.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Field-expression syntax error.
    #[error(transparent)]
    Parse(#[from] ParseError),

    /// Field-expression evaluation error.
    #[error(transparent)]
    Eval(#[from] EvalError),

    /// Malformed configuration file.
    #[error("config: {0}")]
    Config(String),

    /// File-system failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error is a configuration/argument problem rather than a
    /// numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Shape(_) | Error::Parse(_) | Error::Config(_)
        )
    }

    /// Short machine-readable code, printed by the command-line front end
    /// as the `E:<code>:` prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "argument",
            Error::Shape(_) => "shape",
            Error::NonFiniteSymbol { .. } => "nonfinite_symbol",
            Error::ZeroMode { .. } => "zero_mode",
            Error::Singular { .. } => "singular",
            Error::Compatibility(_) => "compatibility",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::OutsideDomain(_) => "outside_domain",
            Error::NonContraction(_) => "non_contraction",
            Error::NoConvergence(_) => "no_convergence",
            Error::CheckFailed(_) => "check_failed",
            Error::Unsupported(_) => "unsupported",
            Error::Parse(_) => "parse",
            Error::Eval(_) => "eval",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            2
        } else {
            3
        }
    }
}
