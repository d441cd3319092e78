use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown catalog model `{0}`")]
    UnknownModel(String),
    #[error("parameter `{name}` out of range: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("operation `{op}` does not support model kind `{kind}`")]
    Unsupported { op: &'static str, kind: String },
    #[error("{what} = {value} outside the available range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("soliton potential is not normalized (residual {residual:e}); shift f by a constant so that λ(|∇f|²+R) − f ≡ 0")]
    NotNormalized { residual: f64 },
    #[error("weight `{id}` has status {status} and is not admissible (use the allow-flagged override)")]
    InadmissibleWeight { id: String, status: String },
    #[error("empty test family")]
    EmptyTestFamily,
    #[error("missing reduced distance field: {0}")]
    MissingField(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
