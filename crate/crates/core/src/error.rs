use thiserror::Error;

/// Errors produced by the numerical engines, the simulator and the config loader.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// An adaptive integration ran out of subdivisions before meeting its tolerance.
    #[error("{context}: no convergence (partial estimate {estimate:e}, achieved error {achieved:e})")]
    NonConvergence {
        context: String,
        estimate: f64,
        achieved: f64,
    },

    /// Conditioning on an event of zero probability.
    #[error("conditioning on a null event: {0}")]
    NullEvent(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
