use thiserror::Error;

/// Errors raised by input validation across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}"
    )]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },
    #[error("buffer holds {actual} values, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("probability vector at inference {inference}, pixel {pixel} is not a distribution (sum {sum})")]
    NotADistribution {
        inference: usize,
        pixel: usize,
        sum: f64,
    },
    #[error("need at least {min} classes, got {actual}")]
    TooFewClasses { min: usize, actual: usize },
    #[error("need at least one inference")]
    NoInferences,
    #[error("label {label} exceeds class count {classes}")]
    LabelOutOfRange { label: u8, classes: usize },
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("frame {frame} out of range (trajectory has {len} frames)")]
    FrameOutOfRange { frame: usize, len: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
