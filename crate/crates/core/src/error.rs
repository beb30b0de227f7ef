use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Algorithm,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node {label:?} has no outgoing arcs")]
    DanglingNode { label: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid rewiring ({i}, {j}, {k}): {reason}")]
    InvalidRewiring {
        i: usize,
        j: usize,
        k: usize,
        reason: &'static str,
    },

    #[error("graph has {nodes} nodes, above the dense limit of {cap}; use a sampling algorithm or raise the limit")]
    TooLarge { nodes: usize, cap: usize },

    #[error("no legal rewiring exists in round {round} ({completed} rounds completed)")]
    NoLegalRewiring { round: usize, completed: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("forest sampler exceeded {limit} walk steps")]
    SamplerStalled { limit: u64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter(_) => ErrorCategory::Config,
            Error::Parse { .. }
            | Error::DanglingNode { .. }
            | Error::InvalidGraph(_)
            | Error::InvalidGroup(_)
            | Error::Io(_) => ErrorCategory::Data,
            Error::InvalidRewiring { .. }
            | Error::TooLarge { .. }
            | Error::NoLegalRewiring { .. }
            | Error::InsufficientData(_) => ErrorCategory::Algorithm,
            Error::SamplerStalled { .. } | Error::Internal(_) => ErrorCategory::Internal,
        }
    }
}
