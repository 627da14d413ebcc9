use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar parameter falls outside its admissible domain.
    #[error("{name} = {value} is out of range: {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("dimension mismatch: expected length {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    /// The leading scheme weight `l_0^(2)` rounded to a non-positive value,
    /// so the system matrix is no longer positive definite.
    #[error("leading scheme weight l0 = {l0:e} is not positive (lambda*tau = {lambda_tau})")]
    NonPositiveLeadingWeight { l0: f64, lambda_tau: f64 },

    #[error("non-finite value produced at time step {step}")]
    NonFinite { step: usize },

    #[error("linear solver failed at time step {step}: {reason}")]
    SolverBreakdown { step: usize, reason: String },

    #[error("power series did not converge within {terms} terms (|c| = {modulus})")]
    SeriesTruncation { terms: usize, modulus: f64 },

    #[error("grids are not nested: {0}")]
    NonNestedGrids(String),

    #[error("point x = {x} is not a grid node (h = {h})")]
    OffGrid { x: f64, h: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Numerical failures are distinguished from configuration errors by the CLI.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::SolverBreakdown { .. } | Error::SeriesTruncation { .. }
        )
    }
}

pub(crate) fn check_open(name: &'static str, value: f64, lo: f64, hi: f64, expected: &'static str) -> Result<()> {
    if value > lo && value < hi {
        Ok(())
    } else {
        Err(Error::Parameter { name, value, expected })
    }
}

pub(crate) fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter { name, value, expected: "must be finite and >= 0" })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter { name, value, expected: "must be finite and > 0" })
    }
}
