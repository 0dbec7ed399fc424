use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("periodic pairing failed: {0}")]
    NoPartner(String),

    #[error("covariance matrix is not positive semidefinite (failed at jitter {jitter:e})")]
    NotPsd { jitter: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("noise sites do not match discretization: {0}")]
    SiteMismatch(String),

    #[error("non-finite value {value} at node {node}, t = {time}")]
    NonFinite { time: f64, node: usize, value: f64 },

    #[error("time step {dt} violates stability bound {bound}")]
    StepSize { dt: f64, bound: f64 },

    #[error("record too short: covers {covered} of required {required}")]
    RecordTooShort { covered: f64, required: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure came from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPsd { .. } | Error::NotSpd { .. } | Error::NonFinite { .. } | Error::StepSize { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
