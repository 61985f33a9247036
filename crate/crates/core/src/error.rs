use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed pattern match: {0}")]
    MalformedMatch(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: alloc::vec::Vec<usize>,
        actual: alloc::vec::Vec<usize>,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("cannot sample {requested} candidates, only {available} available")]
    SamplerExhausted { requested: usize, available: usize },
    #[error("model is not trained")]
    NotTrained,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
