use thiserror::Error;

/// Errors produced by the model builders and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DnpError {
    #[error("degenerate site: position has zero length")]
    DegenerateSite,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid Zeeman transition: 2m = {two_m} with direction {direction} for 2I = {two_i}")]
    InvalidTransition {
        two_i: u32,
        two_m: i32,
        direction: i32,
    },

    #[error("lattice shell [{r_min}, {r_max}] Å contains {site_count} carbon sites")]
    EmptyShell {
        r_min: f64,
        r_max: f64,
        site_count: usize,
    },

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error(
        "steady state is not unique: two smallest singular values {smallest:e} and {second:e}"
    )]
    DegenerateSteadyState { smallest: f64, second: f64 },

    #[error("singular resolvent: {0}")]
    SingularResolvent(String),

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("frozen nuclear spin: all transition rates vanish")]
    FrozenSpin,

    #[error("stationary distribution is not unique ({classes} closed classes)")]
    NonUniqueStationary { classes: usize },

    #[error("no optical initialization: pump rate must be positive")]
    NoOpticalInitialization,

    #[error("mean-field iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("step size underflow at t = {t} μs")]
    StepUnderflow { t: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, DnpError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> DnpError {
    DnpError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
