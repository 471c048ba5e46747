use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by environments, learners, oracles and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an environment or learner precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// One or more configuration fields are invalid.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("value of vote is undefined for an empty recommender set")]
    UndefinedVote,

    #[error("stage game at state {state} has no pure saddle point")]
    NoPureSaddle { state: usize },

    #[error("game structure does not match the requested oracle: {0}")]
    StructureMismatch(String),

    #[error("value iteration did not converge within {iterations} sweeps")]
    NotConverged { iterations: usize },

    /// Covering-time trial hit its step cap with pairs still unvisited.
    #[error("{} state/joint-action pairs never visited, e.g. {:?}", .unvisited.len(), .unvisited.iter().take(8).collect::<Vec<_>>())]
    Unreachable { unvisited: Vec<(usize, Vec<usize>)> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 1,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
