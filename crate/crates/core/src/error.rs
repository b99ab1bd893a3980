use thiserror::Error;

/// Errors produced by configuration validation, domain checks and statistics
/// queries. Simulation execution itself is infallible once a configuration
/// has been validated.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (distribution parameters, topology sizes, plans).
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the operation's domain (negative times, k out of range).
    #[error("domain error: {0}")]
    Domain(String),

    /// A time average was requested for a node that never accepted an update.
    #[error("undefined average: node {0} was never updated within the observation window")]
    UndefinedAverage(usize),

    /// A fraction or summary statistic was requested from an empty record set.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
