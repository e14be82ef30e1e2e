use thiserror::Error;

/// Errors raised by the model, solvers and experiments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root polish failed on [{lo}, {hi}]: residual {residual:e}")]
    RootNotConverged { lo: f64, hi: f64, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigen iteration did not converge after {iterations} steps (residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("solution blew up at t = {t}: max u = {max_u:e}, max v = {max_v:e}")]
    BlowUp { t: f64, max_u: f64, max_v: f64 },

    #[error("no front crossing at level {level}")]
    FrontAbsent { level: f64 },

    #[error("non-monotone front: {crossings} crossings of level {level}")]
    NonMonotoneFront { crossings: usize, level: f64 },

    #[error("insufficient data: need {needed} samples, have {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("front reached x = {position} at t = {t} before the measurement window; try a domain of length >= {suggested_length}")]
    DomainTooSmall { t: f64, position: f64, suggested_length: f64 },

    #[error("no transition over [{lo}, {hi}]: {verdict}")]
    NoTransition { lo: f64, hi: f64, verdict: String },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootNotConverged { .. }
                | Error::Numerical(_)
                | Error::EigenNotConverged { .. }
                | Error::BlowUp { .. }
                | Error::FrontAbsent { .. }
                | Error::NonMonotoneFront { .. }
                | Error::InsufficientData { .. }
                | Error::DomainTooSmall { .. }
                | Error::NoTransition { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
