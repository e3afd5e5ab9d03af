use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument `{name}`: {detail}")]
    InvalidArgument { name: &'static str, detail: String },

    #[error("gradient requested for node {node} but the tape only holds {len} nodes; run the forward pass first")]
    NotRecorded { node: usize, len: usize },

    #[error("backward requires a scalar loss node, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("non-finite value at coordinate {coordinate} during {context}")]
    NonFinite { context: &'static str, coordinate: usize },

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("parameter layout mismatch: expected {expected} values, got {actual}")]
    Layout { expected: usize, actual: usize },

    #[error("prior assigns zero mass to every grid point")]
    ZeroPriorMass,

    #[error("{0}")]
    Unsupported(String),

    #[error("csv row {row}: {detail}")]
    Csv { row: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidArgument { name, detail: detail.into() }
}
