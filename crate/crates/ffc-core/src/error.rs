use thiserror::Error;

/// Errors produced by any layer of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feature index (channel {channel}, u {u}, v {v}) out of bounds for {channels}x{height}x{width}")]
    IndexOutOfBounds {
        channel: usize,
        u: usize,
        v: usize,
        channels: usize,
        height: usize,
        width: usize,
    },

    #[error("inverse transform left imaginary residual {residual:.3e} (limit {limit:.1e}); spectrum is not conjugate-symmetric")]
    SymmetryViolation { residual: f64, limit: f64 },

    #[error("divergence in {context} at step {step}: value {value}")]
    Divergence {
        context: String,
        step: usize,
        value: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("malformed {format} data: {message}")]
    Format {
        format: &'static str,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn format(format: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            format,
            message: message.into(),
        }
    }
}
