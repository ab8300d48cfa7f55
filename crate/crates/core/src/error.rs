//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by simulator construction, stepping and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation.
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    /// Two containers that must agree in length did not.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    /// An action violated one or more feasibility constraints.
    #[error("infeasible action: {0:?}")]
    InfeasibleAction(Vec<String>),

    /// Edge service was requested beyond the station's per-slot cycle budget.
    #[error("edge service {requested_bits} bits exceeds per-slot capacity {cap_bits} bits at station {station}")]
    EdgeServiceOverCap {
        station: usize,
        requested_bits: f64,
        cap_bits: f64,
    },

    /// A physically meaningless input (negative power, zero distance, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter, gradient or state stopped being finite.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Checkpoint bytes did not parse or did not match the expected layout.
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
