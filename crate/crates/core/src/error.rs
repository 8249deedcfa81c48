use thiserror::Error;

/// Errors produced by graph loading and the embedding pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no {0}")]
    EmptyInput(&'static str),

    #[error("invalid {kind} id {id} (graph has {count})")]
    InvalidId {
        kind: &'static str,
        id: usize,
        count: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "graph is disconnected: node '{node}' is unreachable from '{root}' \
         ({reachable} of {total} nodes in the component of '{root}')"
    )]
    Disconnected {
        node: String,
        root: String,
        reachable: usize,
        total: usize,
    },

    #[error("need at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },

    #[error("graph has {nodes} nodes, above the exact solver cap of {cap}")]
    NodeCapExceeded { nodes: usize, cap: usize },

    #[error("blend coefficients must be non-negative and sum to 1, got {alpha} + {beta} + {gamma}")]
    InvalidBlend { alpha: f64, beta: f64, gamma: f64 },

    #[error("negative or non-finite weight {weight} at index {index}")]
    BadWeight { weight: f64, index: usize },

    #[error("predicate '{0}' is not covered by the relatedness matrix")]
    MissingPredicate(String),

    #[error("{0}")]
    Incompatible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
