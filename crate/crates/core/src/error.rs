use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid must have a power-of-two number of points >= 16, got {0}")]
    InvalidGrid(usize),
    #[error("fields live on different grids ({left} vs {right} points)")]
    GridMismatch { left: usize, right: usize },
    #[error("invalid field recipe: {0}")]
    InvalidRecipe(String),
    #[error("circulant embedding is not nonnegative definite (min eigenvalue {min_eigenvalue:e}); increase n_points")]
    EmbeddingNotPsd { min_eigenvalue: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field must be real-valued for this operation")]
    NotReal,
    #[error("interval holds {samples} samples, need at least {needed}")]
    DegenerateInterval { samples: usize, needed: usize },
    #[error("polynomial degree {0} exceeds the supported maximum of 8")]
    DegreeTooLarge(usize),
    #[error("time step violates the phase accuracy bound; max admissible dt is {max_dt:e}")]
    PhaseAccuracy { max_dt: f64 },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("norm floor {target:e} not reached before t = {t_max} (sigma = {sigma:e})")]
    TimeBudget { target: f64, t_max: f64, sigma: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("need at least 1000 paths, got {0}")]
    TooFewPaths(usize),
}
