//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum SlpError {
    /// Invalid configuration (bad dimensions, unsupported modulation order,
    /// incompatible scheme/detector pairing, malformed bit strings).
    #[error("configuration error: {0}")]
    Config(String),

    /// A symbol that is not a member of the active constellation.
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    /// Numerical failure (non-finite input, singular system, non-PSD matrix).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An iterative method ran out of iterations before reaching tolerance.
    #[error("convergence failure after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    /// The constraint system handed to a solver has no solution.
    /// `row` points at the most violated constraint row when known.
    #[error("infeasible problem{}", match .row { Some(r) => format!(" (violated row {r})"), None => String::new() })]
    Infeasible { row: Option<usize> },

    /// A search-space guard tripped (e.g. exhaustive detection over too many
    /// candidates).
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Channel realisation unusable for the requested operation.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SlpError>;
