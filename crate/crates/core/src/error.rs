//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification of an [`Error`], used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The caller supplied malformed or inconsistent input.
    InvalidInput,
    /// A regime or precondition gate refused the request.
    Gate,
    /// An exact computation exceeded its configured size cap.
    Oracle,
}

/// Errors raised by graph construction, model validation, sampling, counting and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An edge refers to a vertex outside `0..n`.
    #[error("edge ({u}, {v}) references a vertex outside 0..{n}")]
    VertexOutOfRange { u: usize, v: usize, n: usize },
    /// An edge joins a vertex to itself.
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    /// The same undirected edge was listed twice.
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    /// A parameter vector has the wrong length.
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    /// A model parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Two models cannot be compared (different graphs or model kinds).
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    /// The operation needs a soft model; run preprocessing first.
    #[error("model must be preprocessed first: {0}")]
    MustPreprocess(String),
    /// A pinning is inconsistent with the model or has zero weight.
    #[error("invalid pinning: {0}")]
    InvalidPin(String),
    /// A configuration has the wrong length or is otherwise malformed.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    /// No total-variation lower-bound constant applies to the pair.
    #[error("no lower-bound constant applies: {0}")]
    NoLowerBound(String),
    /// A precondition gate of an estimator failed.
    #[error("gate failed: {0}")]
    Gate(String),
    /// The input is outside the domain of the requested algorithm.
    #[error("outside algorithm domain: {0}")]
    Domain(String),
    /// An exact enumeration would exceed its size cap.
    #[error("{what}: size {size} exceeds cap {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },
}

impl Error {
    /// Classifies the error for exit-code selection.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::VertexOutOfRange { .. }
            | Error::SelfLoop(_)
            | Error::DuplicateEdge(..)
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidPair(_)
            | Error::MustPreprocess(_)
            | Error::InvalidPin(_)
            | Error::InvalidConfiguration(_) => ErrorClass::InvalidInput,
            Error::NoLowerBound(_) | Error::Gate(_) | Error::Domain(_) => ErrorClass::Gate,
            Error::TooLarge { .. } => ErrorClass::Oracle,
        }
    }
}
