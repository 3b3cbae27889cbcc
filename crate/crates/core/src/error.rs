use thiserror::Error;

/// Errors raised by the telegraph-process library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A tabulated profile was evaluated past its last sample.
    #[error("extrapolation error: t = {t} lies beyond the last sample at {t_max}")]
    Extrapolation { t: f64, t_max: f64 },

    /// The requested clock value is not reached in finite time.
    #[error("saturation error: tau = {tau} is not below the asymptotic limit {tau_inf}")]
    Saturation { tau: f64, tau_inf: f64 },

    /// The speed shape vanishes where a division by it is required.
    #[error("singularity error: {0}")]
    Singularity(String),

    /// The law has no absolutely continuous part (zero tumbling rate).
    #[error("degenerate law: {0}")]
    Degenerate(String),

    /// The requested operation is not supported for these inputs.
    #[error("capability error: {0}")]
    Capability(String),

    /// A numerical result failed its own quality checks.
    #[error("quality error: {0}")]
    Quality(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
