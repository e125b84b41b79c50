use std::io;

use thiserror::Error;

use crate::id::EntityId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed entity id {0:?} (expected Q followed by a positive integer)")]
pub struct ParseIdError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("root {0} is not present in the graph")]
    RootMissing(EntityId),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed line: {0}")]
    MalformedLine(String),
}

#[derive(Debug, Error)]
pub enum LiveError {
    #[error("network error: {0}")]
    Network(String),
    #[error("unknown qid {0}")]
    UnknownQid(EntityId),
    #[error("rate limited by the remote endpoint")]
    RateLimited,
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("cache i/o error: {0}")]
    Cache(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("entity has neither label nor description")]
    EmptyText,
    #[error("provider returned dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding cache error: {0}")]
    Cache(String),
}

impl From<io::Error> for EmbedError {
    fn from(err: io::Error) -> Self {
        EmbedError::Cache(err.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DriftError {
    #[error("drift needs at least two parents, got {0}")]
    TooFewParents(usize),
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}
