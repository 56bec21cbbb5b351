use alloc::string::String;

/// Errors produced anywhere in the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("averaged drift is singular (1-norm condition estimate {condition:.3e})")]
    SingularDrift { condition: f64 },

    #[error(
        "lifted second-moment drift is singular near component pair {subspace} \
         (1-norm condition estimate {condition:.3e})"
    )]
    SingularLiftedDrift { subspace: String, condition: f64 },

    #[error("variance below floor {floor:.1e} (var1 = {var1:.3e}, var2 = {var2:.3e})")]
    DegenerateVariance { var1: f64, var2: f64, floor: f64 },

    #[error("integration diverged in trajectory {trajectory} at step {step}")]
    UnstableIntegration { trajectory: usize, step: u64 },

    #[error("trace has no samples")]
    EmptyTrace,

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("detuning grid does not contain zero")]
    GridMissingCenter,

    #[error("spectrum has no central peak at zero detuning")]
    NoPeak,

    #[error("half-maximum crossing not bracketed inside the detuning grid")]
    UnbracketedCrossing,

    #[error("width not saturated: relative change {relative_change:.3} between the two checks exceeds 5%")]
    NotSaturated { relative_change: f64 },

    #[error("polynomial fit is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditionedFit { condition: f64 },

    #[error("detrend window {window} μs shorter than 10 samples ({min} μs)")]
    WindowTooShort { window: f64, min: f64 },

    #[error("channel {channel} is not ac-coupled (|mean|/rms = {ratio:.3e})")]
    NotDetrended { channel: u8, ratio: f64 },

    #[error("trace collection has no zero-detuning entry")]
    MissingCenter,

    #[error("need at least {needed} distinct detuning labels, found {found}")]
    TooFewTraces { found: usize, needed: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
