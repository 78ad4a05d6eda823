use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid workload: {0}")]
    Workload(String),

    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("trace {path}:{line}: {msg}")]
    TraceParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("no jobs")]
    EmptyTrace,

    #[error("unknown block {block} of job {job}")]
    UnknownBlock { job: u32, block: usize },

    #[error("job {job}: unplaceable blocks ({remaining} map tasks have no replica holder)")]
    UnplaceableBlocks { job: u32, remaining: usize },

    #[error("invalid classification input: {0}")]
    Classify(String),

    #[error("registry {path}:{line}: {msg}")]
    RegistryParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config error at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("simulation stalled at t={time}: {msg}")]
    Stalled { time: f64, msg: String },

    #[error("report error: {0}")]
    Report(String),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
