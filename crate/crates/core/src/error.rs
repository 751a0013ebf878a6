use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateName(String),
    #[error("empty identifier")]
    EmptyName,
    #[error("net has no places")]
    NoPlaces,
    #[error("net has no transitions")]
    NoTransitions,
    #[error("net has an empty alphabet")]
    EmptyAlphabet,
    #[error("marking has {found} entries, net has {expected} places")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transition `{transition}` is not enabled: place `{place}` lacks tokens")]
    NotEnabled { transition: String, place: String },
    #[error("step {index} (`{transition}`) is not enabled: place `{place}` lacks tokens")]
    StepDisabled {
        index: usize,
        transition: String,
        place: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("event `{0}` is not protectable")]
    NotProtectable(String),
    #[error("malformed instance: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("counter place `{0}` has outgoing arcs")]
    CounterConsumed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

/// Errors surfaced by the high-level entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
