use thiserror::Error;

/// Errors produced by model fitting, basis extraction, and collision search.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on caller-supplied data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A kernel was evaluated at a time whose shifted value is not positive.
    #[error("shifted time must be positive: t = {t}, tau = {tau}")]
    NonPositiveShiftedTime { t: f64, tau: f64 },

    /// Factorization of the gram-plus-noise matrix failed at every jitter level.
    #[error("gram matrix is not positive definite (largest jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    /// A posterior variance fell below the numerical floor.
    #[error("posterior variance {value:e} at t = {t} is below the -1e-9 floor")]
    NegativeVariance { t: f64, value: f64 },

    /// A fitted polynomial failed to reproduce the posterior it was sampled
    /// from, typically because a time fell outside the prediction interval.
    #[error("polynomial basis mismatch at t = {t}: residual {residual:e}")]
    BasisMismatch { t: f64, residual: f64 },

    /// Real-root isolation did not converge on a trajectory segment.
    #[error("root isolation did not converge on segment [{start}, {end}]")]
    RootIsolation { start: f64, end: f64 },

    /// Named scenario that the generator does not know how to build.
    #[error("unknown scenario: {0}")]
    UnknownScenario(String),

    /// A generated scenario starts closer to the obstacle than the safety distance.
    #[error(
        "candidate '{candidate}' starts {separation} m from the obstacle at t = {t}; \
         required initial separation is > {required} m"
    )]
    InitialSeparation {
        candidate: String,
        separation: f64,
        t: f64,
        required: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
