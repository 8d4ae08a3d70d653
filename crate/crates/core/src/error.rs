use thiserror::Error;

/// Errors surfaced by the lottery, utility, calibration, and checker APIs.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum VnmError {
    /// A precondition on an argument's value was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A lottery fed to a restricted oracle has support outside the scope.
    /// This signals a membership violation, not a preference statement.
    #[error("scope error: outcome {outcome} lies outside the oracle scope")]
    Scope { outcome: String },

    /// A constructed value failed its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// Bisection could not locate an indifference point.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// The requested construction does not apply to this function or point.
    #[error("inapplicable: {0}")]
    Inapplicable(String),

    /// A target escaped the representable coordinate range.
    #[error("overflow: {msg}")]
    Overflow {
        msg: String,
        /// Largest level for which the construction still succeeds, if any.
        largest_feasible: Option<u32>,
    },

    /// A finite search budget was exhausted before the goal was met.
    #[error("budget exhausted: {0}")]
    Budget(String),

    /// Affine fitting is impossible (reference function constant on the grid).
    #[error("no affine fit: {0}")]
    NoFit(String),

    /// Malformed input text (JSON configs, grid specs, rationals).
    #[error("parse error: {0}")]
    Parse(String),

    /// A run configuration is structurally invalid.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, VnmError>;
