use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a phase configuration needs at least 2 oscillators, got {0}")]
    TooFewOscillators(usize),

    #[error("phase {index} is not finite ({value})")]
    NonFinitePhase { index: usize, value: f64 },

    #[error("moment must be a positive integer")]
    InvalidMoment,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state does not match the {model} model: {detail}")]
    ShapeMismatch { model: &'static str, detail: String },

    #[error("expected {expected} parameters, got {got}")]
    WrongModel {
        expected: &'static str,
        got: &'static str,
    },

    #[error("configuration is not a {m}-splay state: R_{m} = {r:.3e} >= {tol:.1e}")]
    NotSplay { m: u32, r: f64, tol: f64 },

    #[error("twist index {k} out of range for n = {n}")]
    TwistOutOfRange { n: usize, k: usize },

    #[error("antipodal-pairs family needs an even n >= 4 and n/2 - 1 offsets (n = {n}, {deltas} offsets)")]
    InvalidFamily { n: usize, deltas: usize },

    #[error("splay completion failed after {0} retries")]
    RetryBudgetExhausted(usize),

    #[error("QR iteration did not converge (matrix hash {hash:016x}, dimension {dim})")]
    EigenFailure { hash: u64, dim: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("adaptive traces (trLt, trLt2, trLLt) are missing")]
    MissingAdaptiveTraces,

    #[error("no real crossing frequency: {0}")]
    NoCrossing(String),

    #[error("state became non-finite at t = {0}")]
    BlowUp(f64),

    #[error("trajectory too short: need at least {needed} samples, have {have}")]
    TrajectoryTooShort { needed: usize, have: usize },

    #[error("no linear regime: deviation never stays inside [{lo:.0e}, {hi:.0e}]")]
    NoLinearRegime { lo: f64, hi: f64 },

    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
