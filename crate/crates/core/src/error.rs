use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frequency {omega:.6e} rad/s outside validity window of material `{material}`")]
    OutOfWindow { material: String, omega: f64 },

    #[error("invalid material `{name}`: {reason}")]
    InvalidMaterial { name: String, reason: String },

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid pump: {0}")]
    InvalidPump(String),

    #[error("invalid spectral basis: {0}")]
    InvalidBasis(String),

    #[error("singular matrix while computing {0}")]
    SingularMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("time grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("curve has no isolated peak")]
    NoPeak,

    #[error("oracle step {step:.3e} m too coarse (need <= {limit:.3e} m)")]
    StepTooCoarse { step: f64, limit: f64 },

    #[error("could not parse {what}: {msg}")]
    Parse { what: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
