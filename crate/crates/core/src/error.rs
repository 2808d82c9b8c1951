use thiserror::Error;

/// Errors reported by state, gate, and protocol operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("level counts differ: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },

    #[error("slot counts differ: {left} vs {right}")]
    SlotCountMismatch { left: usize, right: usize },

    #[error("level count {level_count} is below the minimum of 2")]
    InvalidLevelCount { level_count: usize },

    #[error("expected {expected} amplitudes, got {found}")]
    AmplitudeCountMismatch { expected: usize, found: usize },

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("operator acts on {arity} slots but {targets} targets were given")]
    ArityMismatch { arity: usize, targets: usize },

    #[error("target slot {slot} listed more than once")]
    RepeatedTarget { slot: usize },

    #[error("slot {slot} out of range for a register of {slot_count} slots")]
    SlotOutOfRange { slot: usize, slot_count: usize },

    #[error("digit {digit} out of range for level count {level_count}")]
    DigitOutOfRange { digit: usize, level_count: usize },

    #[error("Schmidt coefficient {index} is negative ({value})")]
    ChannelCoefficientNegative { index: usize, value: f64 },

    #[error("Schmidt coefficients not sorted ascending at index {index}")]
    ChannelNotAscending { index: usize },

    #[error("Schmidt coefficients not normalized: squared sum {sum_sqr}")]
    ChannelNotNormalized { sum_sqr: f64 },

    #[error("measurement on slot {slot} is numerically degenerate (total mass {total:e})")]
    DegenerateMeasurement { slot: usize, total: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
