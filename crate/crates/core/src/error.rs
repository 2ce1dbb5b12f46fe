use alloc::string::String;

use crate::mlp::NeuronId;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("network layer {0} has zero width")]
    EmptyLayer(usize),
    #[error("network needs at least two layers, got {0}")]
    TooFewLayers(usize),
    #[error("action {action} out of range for {actions} actions")]
    InvalidAction { action: usize, actions: usize },
    #[error("episode already finished; reset before stepping")]
    EpisodeDone,
    #[error("neurons {a} and {b} are not in adjacent layers")]
    NotAdjacent { a: NeuronId, b: NeuronId },
    #[error("neuron {0} does not exist")]
    UnknownNeuron(NeuronId),
    #[error("connection cost undefined: scaled weight term {0} <= -1")]
    CostDomain(f64),
    #[error("graph has no edge weight")]
    EmptyGraph,
    #[error("every neuron in the network is masked")]
    FullyMasked,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("partitions cover different node sets")]
    NodeSetMismatch,
    #[error("community {0} does not exist in the partition")]
    UnknownCommunity(usize),
    #[error("intervention target set is empty")]
    EmptyTarget,
    #[error("non-finite loss at update {update}: {detail}")]
    NonFiniteLoss { update: usize, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
