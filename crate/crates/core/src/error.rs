use thiserror::Error;

/// Errors produced by the plate spectrum routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("sum indistinguishable from zero at {bits} bits (|sum| <= exp({ln_bound:.3}))")]
    Cancellation { bits: usize, ln_bound: f64 },

    #[error("no hat root bracketed for r = {r} in [{lo}, {hi}]")]
    NoRootBracketed { r: f64, lo: f64, hi: f64 },

    #[error("minimization failed: {0}")]
    Bracket(String),

    #[error("degenerate minimum: computed curvature {0:e} is not positive")]
    DegenerateMinimum(f64),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("series truncation needs at least {required} terms (limit {limit})")]
    Truncation { required: usize, limit: usize },

    #[error("PSD violation (upstream bug): mu[{n}] = {value:e}")]
    PsdViolation { n: usize, value: f64 },

    #[error("index {index} beyond spectrum of length {len}")]
    OutOfSpectrum { index: usize, len: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
