use std::path::PathBuf;

use crate::network::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("unknown {kind} id '{id}'")]
    UnknownId { kind: &'static str, id: String },

    #[error("invalid clock: {0}")]
    InvalidClock(String),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("no path from '{origin}' to '{destination}'")]
    Unreachable { origin: String, destination: String },

    #[error(
        "gridlock: {stranded} vehicles stranded at horizon end \
         ({on_links} on links, {at_origins} waiting at origins)"
    )]
    Gridlock {
        stranded: usize,
        on_links: usize,
        at_origins: usize,
    },

    #[error("relative gap undefined: zero denominator with positive demand")]
    UndefinedGap,

    #[error("non-finite relative gap at iteration {iteration}")]
    NonFiniteGap { iteration: usize },

    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("empty link set")]
    EmptyLinkSet,

    #[error("series too short: need at least {needed} points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("stage '{stage}' failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn range(what: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::OutOfRange {
            what,
            value,
            min,
            max,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps `self` with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
