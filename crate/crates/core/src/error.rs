use thiserror::Error;

use crate::amount::Amount;
use crate::network::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("topology still disconnected after {attempts} attempts")]
    DisconnectedTopology { attempts: usize },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no channel between {0} and {1}")]
    NoChannel(NodeId, NodeId),
    #[error("insufficient funds on {from}->{to}: have {available}, need {requested}")]
    InsufficientFunds {
        from: NodeId,
        to: NodeId,
        available: Amount,
        requested: Amount,
    },
    #[error("transfer amount must be positive, got {0}")]
    NonPositiveAmount(Amount),
    #[error("invalid demand: {0}")]
    InvalidDemand(String),
    #[error("malformed network dump at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid cost parameters: {0}")]
    InvalidCosts(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("no hub placed")]
    NoHubPlaced,
    #[error("set function is undefined on the empty set")]
    EmptySet,
    #[error("{candidates} candidates exceed the exact-solve limit of {limit}")]
    TooLarge { candidates: usize, limit: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("demand value {value} is below Min-TU {min_tu}")]
    ValueTooSmall { value: Amount, min_tu: Amount },
    #[error("demand value {value} cannot be split into units within [{min_tu}, {max_tu}]")]
    Unsplittable {
        value: Amount,
        min_tu: Amount,
        max_tu: Amount,
    },
    #[error("invalid TU bounds: {0}")]
    InvalidBounds(String),
    #[error("no path from {0} to {1}")]
    NoPath(NodeId, NodeId),
    #[error("fee threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueueError {
    #[error("queue overflow: volume {volume} + {amount} exceeds limit {limit}")]
    QueueOverflow {
        volume: Amount,
        amount: Amount,
        limit: Amount,
    },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}
