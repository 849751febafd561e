use thiserror::Error;

/// Errors surfaced by the reduction engines and the analytical models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("value does not fit in {width} declared bits")]
    WidthOverflow { width: u32 },

    #[error("bit slice [{offset}, {offset}+{width}) exceeds the {operand_width}-bit operand")]
    SliceOutOfRange {
        offset: u32,
        width: u32,
        operand_width: u32,
    },

    #[error("no feasible table geometry: {capacity_bits} bits cannot hold a 1-bit-input, {n}-bit-output table")]
    InfeasibleGeometry { n: u32, capacity_bits: u64 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("no calibrated cost entry for n = {n}; supply a cost table or run calibration")]
    CalibrationRequired { n: u32 },

    #[error("calibration failed for n = {n}: {reason}")]
    CalibrationFailed { n: u32, reason: String },

    #[error("area efficiency is undefined for zero area")]
    UndefinedMetric,

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
