use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("gap height h = {h} is not admissible: need 0 < h and h + r0^(1+alpha) <= d0 (largest admissible h is {max_h})")]
    InadmissibleGap { h: f64, max_h: f64 },

    #[error("point (r = {r}, x3 = {x3}) lies outside the cusp region")]
    OutsideCusp { r: f64, x3: f64 },

    #[error("invalid h grid: {0}")]
    InvalidGrid(&'static str),

    #[error("quadrature did not reach the tolerance: value {value}, error estimate {error}, worst cell [{worst_a}, {worst_b}] with error {worst_error}")]
    Quadrature {
        value: f64,
        error: f64,
        worst_a: f64,
        worst_b: f64,
        worst_error: f64,
    },

    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: &'static str },

    #[error("fit failure: {0}")]
    Fit(&'static str),

    #[error("mass threshold search failed: {0}")]
    MassThreshold(&'static str),

    #[error("contact dichotomy violated at alpha = {alpha} (beta = {beta})")]
    Dichotomy { alpha: f64, beta: f64 },
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::InadmissibleGap { .. }
                | Error::OutsideCusp { .. }
                | Error::InvalidGrid(_)
        )
    }
}

pub(crate) fn ensure(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
