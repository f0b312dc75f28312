use crate::topology::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("topology generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: u32, reason: String },
    #[error("invalid application: {0}")]
    InvalidApplication(String),
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("need at least {needed} alternatives, got {got}")]
    TooFewAlternatives { needed: usize, got: usize },
    #[error("no candidate replicas")]
    NoCandidates,
    #[error("node {node} does not host module `{module}` of application `{app}`")]
    NotHosted {
        node: NodeId,
        app: String,
        module: String,
    },
    #[error("invalid decision matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid configuration key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("invalid simulation input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
