use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A control channel or action id outside its legal range.
    #[error("{channel} out of range: {value}")]
    Domain { channel: &'static str, value: i64 },

    /// Invalid numeric argument (non-positive frequency, NaN, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A stream had no sample by the first control tick.
    #[error("alignment error: stream `{0}` has no sample at or before the first tick")]
    Alignment(&'static str),

    /// Scenario invariant violation.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// A trim boundary record is not the idle action.
    #[error("trim boundary at t={t:.1}s is not idle")]
    Boundary { t: f64 },

    /// A merge junction touches a non-idle record.
    #[error("merge junction {index} is not idle ({side} side)")]
    Junction { index: usize, side: &'static str },

    /// Requested time span lies outside the demonstration or off the control grid.
    #[error("time out of range: {0}")]
    Range(String),

    /// Dataset or demo too small for the requested operation.
    #[error("size error: {0}")]
    Size(String),

    /// Tensor, window, or checkpoint shapes disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Segments with differing metadata cannot be merged.
    #[error("incompatible segments: {0}")]
    Incompatible(String),
}

pub type Result<T> = core::result::Result<T, Error>;
