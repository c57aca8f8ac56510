use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid field `{field}`: {msg}")]
    Validation { field: String, msg: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported basis: {0}")]
    Basis(String),
    #[error("sector clustering is degenerate (gap {gap:.3e})")]
    DegenerateClustering { gap: f64 },
    #[error("lossless/lossy split failed: {msg} (residual {residual:.3e})")]
    SplitFailed { residual: f64, msg: String },
    #[error("code projection is not contained in the protected projection (residual {residual:.3e})")]
    ChainViolated { residual: f64 },
    #[error("projection is not invariant under any control (rank Z = {rank_z}, rank [Z z0] = {rank_aug})")]
    NotInvariant { rank_z: usize, rank_aug: usize },
    #[error("Lie closure exceeded dimension cap {cap}")]
    DimensionCap { cap: usize },
    #[error("operation requires a closed (noise-free) model")]
    NoisyModel,
    #[error("integrator step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), msg: msg.into() }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Validation { .. }
            | Error::InvalidParameter(_)
            | Error::Basis(_)
            | Error::ChainViolated { .. }
            | Error::NoisyModel
            | Error::Io(_) => 2,
            Error::NotInvariant { .. } => 3,
            _ => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
