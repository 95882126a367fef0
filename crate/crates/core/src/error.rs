use crate::spectral::Representation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is in {found:?} representation, expected {expected:?}")]
    Representation { expected: Representation, found: Representation },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("wavevectors {first} and {second} coincide")]
    DuplicateWavevector { first: usize, second: usize },

    #[error("no modes given")]
    NoModes,

    #[error("wavevector of mode {mode} divided by epsilon = {epsilon:e} is not on the reciprocal lattice")]
    LatticeIncompatible { mode: usize, epsilon: f64 },

    #[error("phase quadrature did not converge after {doublings} doublings (last change {change:e})")]
    QuadratureDiverged { doublings: usize, change: f64 },

    #[error("time step refinement did not converge after {halvings} halvings (last difference {difference:e})")]
    Instability { halvings: usize, difference: f64 },

    #[error("relative L2 drift {drift:e} exceeds the limit {limit:e}")]
    L2Drift { drift: f64, limit: f64 },

    #[error("bound check needs at least two modes, got {0}")]
    TooFewModes(usize),

    #[error("rate fit needs at least 3 usable points, got {usable} ({dropped} dropped below the floor)")]
    InsufficientPoints { usable: usize, dropped: usize },

    #[error("sweep cases failed: {0}")]
    CaseFailures(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
