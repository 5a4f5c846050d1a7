use thiserror::Error;

use crate::linalg::Regime;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid sacrifice: {0}")]
    InvalidSacrifice(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{rows}x{cols} matrix is rank deficient along its {dimension} (singular value ratio {ratio:e})")]
    Singular {
        rows: usize,
        cols: usize,
        dimension: &'static str,
        ratio: f64,
    },

    #[error("theory undefined at the interpolation threshold ({params} parameters, {samples} samples)")]
    TheoryUndefinedAtThreshold { params: usize, samples: usize },

    #[error("expression requires the {expected:?} regime, got {found:?}")]
    WrongRegime { expected: Regime, found: Regime },

    #[error("degenerate interval: {0}")]
    DegenerateInterval(String),

    #[error("invalid sweep: {0}")]
    InvalidSpec(String),

    #[error("config error: {0}")]
    Config(String),
}
