use thiserror::Error;

use crate::scalar::Mode;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dense table over {dim} coordinates exceeds the {mode:?} cap of {cap}")]
    DenseCap { dim: u32, cap: u32, mode: Mode },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("tables live on different sides (primal vs fourier)")]
    SideMismatch,

    #[error("tables use different arithmetic modes")]
    ModeMismatch,

    #[error("direction u must be nonzero")]
    ZeroDirection,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input is not a verified feasible solution: {0}")]
    NotVerified(String),

    #[error("construction invariant violated: {0}")]
    Construction(String),

    #[error("instance mismatch: {0}")]
    InstanceMismatch(String),

    #[error("oracle size cap exceeded: n = {n} > {cap}")]
    OracleCap { n: usize, cap: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
