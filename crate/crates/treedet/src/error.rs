use thiserror::Error;

use crate::topology::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    // -- topology construction ------------------------------------------------
    #[error("cycle detected involving node {0}")]
    CycleDetected(NodeId),
    #[error("multiple roots: nodes {0} and {1} both lack a parent")]
    MultipleRoots(NodeId, NodeId),
    #[error("node {child} references unknown parent {parent}")]
    DanglingParent { child: NodeId, parent: usize },
    #[error("node {0} has zero link rate")]
    ZeroRate(NodeId),
    #[error("link rate {rate} bits at node {node} exceeds the supported maximum of 16")]
    RateTooLarge { node: NodeId, rate: u32 },
    #[error("leaf {0} has incoming edges")]
    LeafWithPredecessors(NodeId),
    #[error("relay {0} has no incoming edges")]
    RelayWithoutPredecessors(NodeId),
    #[error("invalid topology description: {0}")]
    InvalidTopology(String),

    // -- structural queries ---------------------------------------------------
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("operation undefined for the fusion center ({0})")]
    IsFusionCenter(NodeId),

    // -- probability data -----------------------------------------------------
    #[error("bad probability vector: {0}")]
    BadProbabilityVector(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("observation discretization needs at least 2 bins, got {0}")]
    BadBinCount(usize),
    #[error("half_range must be positive, got {0}")]
    BadHalfRange(f64),
    #[error("operation supports {supported} hypotheses, model has {actual}")]
    UnsupportedHypothesisCount { supported: usize, actual: usize },

    // -- decision functions ---------------------------------------------------
    #[error("input index {index} out of range for input space of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("bad coordinate: {0}")]
    BadCoordinate(String),
    #[error("no decision function installed for node {0}")]
    MissingStrategy(NodeId),
    #[error("node {claimed} is not an immediate predecessor of {of}")]
    NotAPredecessor { claimed: NodeId, of: NodeId },

    // -- designer / baselines -------------------------------------------------
    #[error("wrong topology: {0}")]
    WrongTopology(String),

    // -- oracle ---------------------------------------------------------------
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),

    // -- external interfaces --------------------------------------------------
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
