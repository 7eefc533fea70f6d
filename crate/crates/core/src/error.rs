use thiserror::Error;

/// Errors raised while building maps or evaluating energies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent p = {0} is outside (1, inf)")]
    InvalidExponent(f64),

    #[error("grid size {0} is below the minimum of 16 samples")]
    GridTooSmall(usize),

    #[error("grid sizes differ: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("grid size {grid} is not divisible by {divisor} ({reason})")]
    Indivisible {
        grid: usize,
        divisor: usize,
        reason: &'static str,
    },

    #[error("lifting jumps by {jump} rad between samples {index} and {next}; the grid does not resolve the map")]
    UnresolvedLifting { index: usize, next: usize, jump: f64 },

    #[error("sample {index} is not finite")]
    NonFinite { index: usize },

    #[error("map passes within {modulus:e} of the origin at sample {index}; degree is ill-defined")]
    NearZero { index: usize, modulus: f64 },

    #[error("degenerate point triple: {0}")]
    DegenerateTriple(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Fourier degree not resolved: raw sum {raw} is {residual} from the nearest integer")]
    FourierDegreeUnresolved { raw: f64, residual: f64 },

    #[error("malformed map data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
