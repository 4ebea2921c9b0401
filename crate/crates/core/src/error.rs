use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("empty sample")]
    EmptySample,
    #[error("empty text")]
    EmptyText,
    #[error("empty document")]
    EmptyDocument,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("insufficient data: need at least {needed} vectors, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("missing counterpart series for metric `{0}`")]
    MissingCounterpartSeries(String),
    #[error("empty label set")]
    EmptyLabels,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("every candidate node is pruned")]
    AllPruned,
    #[error("unknown node {0}")]
    UnknownNode(usize),
}
