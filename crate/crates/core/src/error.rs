use num_complex::Complex64;
use thiserror::Error;

use crate::grid::Space;

#[derive(Debug, Error)]
pub enum Error {
    #[error("n_sigma must be a power of two >= 8, got {0}")]
    InvalidBinCount(usize),

    #[error("sigma_max must be positive and finite, got {0}")]
    InvalidCutoff(f64),

    #[error("fiber dimension k_dim must be >= 1, got {0}")]
    InvalidFiberDim(usize),

    #[error("states or operators live on different grids")]
    GridMismatch,

    #[error("expected a {expected:?} state, got {found:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("amplitude length {found} does not match the space dimension {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("operator dimensions do not match: {0}")]
    DimensionMismatch(String),

    #[error("pole {0} is not in the open lower half-plane")]
    PoleNotInLowerHalfPlane(Complex64),

    #[error("pole order must be 1 or 2, got {0}")]
    InvalidPoleOrder(u32),

    #[error("time {time} is not on the dual lattice (step {step})")]
    OffLattice { time: f64, step: f64 },

    #[error("time must be finite and non-negative, got {0}")]
    NegativeTime(f64),

    #[error("operator is not Hermitian (relative defect {0:e})")]
    NotHermitian(f64),

    #[error("operator has eigenvalue {0:e} below the nonnegativity threshold")]
    NegativeEigenvalue(f64),

    #[error("eigenvalue {0:e} is not clustered near the projection spectrum")]
    ClusterGap(f64),

    #[error("state has zero norm")]
    ZeroState,

    #[error("time grid must start at 0 and increase strictly")]
    NonMonotoneGrid,

    #[error("projection family is empty")]
    EmptyFamily,

    #[error("{0} failed to converge")]
    Decomposition(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
