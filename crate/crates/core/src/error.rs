use thiserror::Error;

use crate::ode::OdeFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow at tau = {tau}")]
    StepUnderflow { tau: f64 },

    #[error("integration step budget exhausted at tau = {tau}")]
    StepBudget { tau: f64 },

    #[error("quench integration failed at t = {t} (g = {g}): {reason}")]
    QuenchFailure { t: f64, g: f64, reason: String },

    #[error("mode k = {k}: {source}")]
    Mode {
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{} modes failed; first: {}", .0.len(), .0[0])]
    Aggregate(Vec<Error>),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("time {t} s lies outside the plan (duration {duration} s)")]
    OutsidePlan { t: f64, duration: f64 },

    #[error(
        "sample rate {sample_rate} S/s is below twice the largest offset frequency {max_offset_hz} Hz"
    )]
    Nyquist { sample_rate: f64, max_offset_hz: f64 },
}

impl Error {
    /// `true` for bad inputs, `false` for failures of the numerics themselves.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::OutsidePlan { .. } | Error::Nyquist { .. } => true,
            Error::Mode { source, .. } => source.is_validation(),
            Error::Aggregate(all) => all.iter().all(Error::is_validation),
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn from_ode(f: OdeFailure) -> Self {
        match f {
            OdeFailure::StepUnderflow { t } => Error::StepUnderflow { tau: t },
            OdeFailure::StepBudget { t } => Error::StepBudget { tau: t },
        }
    }
}
