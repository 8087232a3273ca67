use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a simplex point: {0}")]
    NotOnSimplex(String),

    #[error("action {action} out of range for {m} actions")]
    ActionOutOfRange { action: usize, m: usize },

    #[error("no potential attached to game `{0}`")]
    NoPotential(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("isolated node {0}: every node needs at least one neighbor")]
    IsolatedNode(usize),

    #[error("edge list parse error at line {line}: {msg}")]
    EdgeListParse { line: usize, msg: String },

    #[error("simplex guard failed at t = {t}: {msg}")]
    SimplexGuard { t: f64, msg: String },

    #[error("trajectory does not cover [0, {needed}] (covers up to {covered})")]
    Coverage { needed: f64, covered: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config line {line}, column {column}: {msg}")]
    Config {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
