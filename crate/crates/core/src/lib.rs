//! Spectral analysis of the zero-Poisson elastic plate: dispersion branches
//! of the cross-section operator, the degenerate band minimum, the model
//! operator of a rotationally symmetric Young's-modulus perturbation, and
//! the accumulation envelopes of the resulting trapped-mode eigenvalues.

pub mod asymptotics;
pub mod band;
pub mod error;
pub mod fd;
pub mod minimum;
pub mod model;
pub mod precision;
pub mod profile;
pub mod quadrature;
pub mod solve;

pub use error::{Error, Result};
pub use precision::{HighPrecisionSum, Sign, SignedLog};
pub use profile::RadialProfile;
pub use quadrature::Interval;
