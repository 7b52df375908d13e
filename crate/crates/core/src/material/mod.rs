//! Heat-capacity laws and the scalar functionals built on them.

mod functionals;
mod hypotheses;
mod kappa;
pub mod quadrature;

pub use functionals::{ell_inverse, ScalarFunctionals, DEFAULT_M};
pub use hypotheses::{admissibility_check, classify, AdmissibilityReport, HypothesisReport};
pub use kappa::{regularize_kappa, HeatCapacityModel, KappaLaw};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("temperature argument must be nonnegative (got {0})")]
    NegativeArgument(f64),
    #[error("regularization parameter must lie in (0, 1) (got {0})")]
    InvalidEpsilon(f64),
    #[error("logarithmic entropy requires M >= e^4 (got {0})")]
    InvalidM(f64),
    #[error("cutoff entropy requires M > 1 (got {0})")]
    InvalidCutoff(f64),
    #[error("value {value} lies below the range of the entropy density (infimum {infimum})")]
    BelowRange { value: f64, infimum: f64 },
    #[error("invalid heat-capacity parameter: {0}")]
    InvalidParameter(String),
}

/// A real number or the `−∞` limit of an entropy density whose lower
/// integral diverges. Never converted to a floating infinity implicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    NegInfinity,
}

impl Extended {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::NegInfinity => None,
        }
    }

    /// Unwraps a value known to be finite (arguments strictly positive).
    pub fn expect_finite(self, what: &str) -> f64 {
        match self {
            Extended::Finite(x) => x,
            Extended::NegInfinity => panic!("{what}: divergent entropy density"),
        }
    }
}
