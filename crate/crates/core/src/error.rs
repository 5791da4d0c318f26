use thiserror::Error;

/// Errors raised by the exact finite-space engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("atom {atom} has negative probability {prob}")]
    NegativeProbability { atom: usize, prob: f64 },
    #[error("atom probabilities sum to 1 {deviation:+e}, tolerance is 1e-12")]
    ProbabilitySumMismatch { deviation: f64 },
    #[error("space has no atoms")]
    EmptySpace,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("partition at t={t} does not refine the one at t={}", t - 1)]
    NotRefining { t: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("not a stopping time: {{sigma <= {t}}} splits block {block}")]
    NotAStoppingTime { t: usize, block: usize },
    #[error("process decreases on atom {atom} at t={t}")]
    NotIncreasing { atom: usize, t: usize },
    #[error("process is not adapted: value at t={t} varies on block {block}")]
    NotAdapted { t: usize, block: usize },
    #[error("process is not predictable: value at t={t} varies on block {block} of the previous partition")]
    NotPredictable { t: usize, block: usize },
    #[error("process is not a martingale: conditional drift {drift:e} at t={t} on block {block}")]
    NotMartingale { t: usize, block: usize, drift: f64 },
    #[error("not a point process on atom {atom} at t={t}: {reason}")]
    NotPointProcess { atom: usize, t: usize, reason: &'static str },
    #[error("filtrations are not independent: P(a∩b) - P(a)P(b) = {gap:e} on F-block {f_block}, H-block {h_block}")]
    IndependenceViolated { f_block: usize, h_block: usize, gap: f64 },
    #[error("random time must be > 0, atom {atom} has tau = 0")]
    TauAtZero { atom: usize },
    #[error("Azéma supermartingale vanishes at t={t} before tau on atom {atom}")]
    VanishingAzema { atom: usize, t: usize },
    #[error("process is not adapted to the target filtration (t={t}, block {block})")]
    FiltrationMismatch { t: usize, block: usize },
    #[error("document schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
