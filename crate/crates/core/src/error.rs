use thiserror::Error;

use crate::graph::Edge;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a network needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge ({i}, {j}) has an endpoint outside 1..={n}")]
    VertexOutOfRange { i: usize, j: usize, n: usize },
    #[error("self loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("edge {edge} has non-positive or non-finite weight {weight}")]
    NonPositiveWeight { edge: Edge, weight: f64 },
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("tree Gram matrix is singular; partition is not a spanning tree")]
    SingularTreeGram,
    #[error("edge {0} is not in the graph")]
    UnknownEdge(Edge),
    #[error("attacked edge set is empty")]
    EmptyAttackSet,

    #[error("decoder gain must be positive and finite, got {0}")]
    NonPositiveGain(f64),
    #[error("weight {weight} on edge {edge} is not in the image of its decoding function")]
    WeightOutOfImage { edge: Edge, weight: f64 },
    #[error("codeword value {value} on edge {edge} leaves the decoder domain [{lo}, {hi}]")]
    DomainViolation { edge: Edge, value: f64, lo: f64, hi: f64 },
    #[error("coding assignment does not cover edge {0}")]
    MissingDecoder(Edge),
    #[error("codeword does not match the graph edge set")]
    CodewordMismatch,

    #[error("unknown benchmark attack variant {0} (expected 1 or 2)")]
    UnknownVariant(u8),
    #[error("attack support is empty")]
    EmptySupport,
    #[error("attack budget must be finite and non-negative, got {0}")]
    InvalidBudget(f64),
    #[error("deviation {deviation} on edge {edge} exceeds budget {budget}")]
    BudgetExceeded { edge: Edge, deviation: f64, budget: f64 },

    #[error("Lipschitz aggregate must be positive, got {0}")]
    NonPositiveLipschitz(f64),
    #[error("step size {epsilon} must lie in (0, {limit}) (inverse max weighted degree)")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },
    #[error("weight perturbation support does not match the attacked edge set")]
    SupportMismatch,
    #[error("resilience gap must lie in [0, 1), got {0}")]
    InvalidGap(f64),

    #[error("invalid simulation parameter: {0}")]
    InvalidParameter(String),
    #[error("state vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid leader configuration: {0}")]
    InvalidSanConfig(String),
    #[error("non-finite state encountered at t = {0}")]
    NonFiniteState(f64),
}
