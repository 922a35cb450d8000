use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The two anchors of a pair coincide, so the pair has no orientation.
    #[error("degenerate anchor pair: anchors coincide (separation {separation:e} km)")]
    DegeneratePair { separation: f64 },

    /// A baseline solver could not produce an estimate from the data.
    #[error("solver degenerate: {0}")]
    SolverDegenerate(String),

    /// A computation would exceed its configured budget.
    #[error("resource limit: {needed} lattice points exceed the budget of {budget}")]
    Resource { needed: u128, budget: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
