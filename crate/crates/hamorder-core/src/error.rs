//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors reported by the library.
///
/// [`Error::kind`] groups the variants into the coarse classes used for
/// process exit codes (validation / numeric failure / inapplicable method).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A sequence rule cannot be evaluated (bad parameters, undefined index,
    /// missing residue case, ...).
    InvalidSpec(String),
    /// A materialisation request exceeds the configured memory cap.
    CapExceeded { requested: u64, cap: u64 },
    /// Hamiltonian data violates `l_n > 0` or `φ_{n+1} ≢ φ_n (mod π)`.
    InvalidHamiltonian(String),
    /// Jacobi parameters with nonpositive off-diagonal entries.
    InvalidJacobi(String),
    /// A Hankel matrix was numerically singular; carries the failing size.
    IllConditionedMoments { size: usize },
    /// Argument outside the mathematical domain of an operation.
    Domain(String),
    /// The requested method does not apply to this input
    /// (non-diagonal Hamiltonian, limit point case, infinite index, ...).
    Inapplicable(String),
    /// Not enough data to run an estimator (horizon or grid too short).
    InsufficientData(String),
    /// Target order violates the strict feasibility inequality of the
    /// cut-off plan construction.
    InvalidTargetOrder(String),
    /// A plan weight left `(0, 1]`, indicating inconsistent surrogate
    /// exponents.
    WeightOverflow(String),
    /// A calibrated round trip failed to reproduce its input.
    RoundTripMismatch { residual: f64 },
    /// NaN or infinity appeared where a finite number was required.
    NumericFailure(String),
}

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numeric,
    Inapplicable,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidSpec(_)
            | Error::CapExceeded { .. }
            | Error::InvalidHamiltonian(_)
            | Error::InvalidJacobi(_)
            | Error::Domain(_)
            | Error::InsufficientData(_)
            | Error::InvalidTargetOrder(_) => ErrorKind::Validation,
            Error::IllConditionedMoments { .. }
            | Error::WeightOverflow(_)
            | Error::RoundTripMismatch { .. }
            | Error::NumericFailure(_) => ErrorKind::Numeric,
            Error::Inapplicable(_) => ErrorKind::Inapplicable,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(m) => write!(f, "invalid sequence spec: {m}"),
            Error::CapExceeded { requested, cap } => {
                write!(f, "materialisation of {requested} values exceeds cap {cap}")
            }
            Error::InvalidHamiltonian(m) => write!(f, "invalid Hamiltonian: {m}"),
            Error::InvalidJacobi(m) => write!(f, "invalid Jacobi parameters: {m}"),
            Error::IllConditionedMoments { size } => {
                write!(f, "Hankel matrix numerically singular at size {size}")
            }
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Inapplicable(m) => write!(f, "method not applicable: {m}"),
            Error::InsufficientData(m) => write!(f, "insufficient data: {m}"),
            Error::InvalidTargetOrder(m) => write!(f, "invalid target order: {m}"),
            Error::WeightOverflow(m) => write!(f, "weight outside (0, 1]: {m}"),
            Error::RoundTripMismatch { residual } => {
                write!(f, "round-trip residual {residual:.3e} above tolerance")
            }
            Error::NumericFailure(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
