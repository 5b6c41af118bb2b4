use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, unknown, or out of range.
    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// An operation was called outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Greedy forwarding found no admissible next hop.
    #[error("route stuck after {hops} hops")]
    RouteStuck { hops: usize },

    /// Route exceeded the hop-count cap.
    #[error("route exceeded {cap} hops")]
    RouteLoop { cap: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad user input rather than a simulation failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
