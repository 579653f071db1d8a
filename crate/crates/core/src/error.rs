use thiserror::Error;

use crate::pointgen::PointSet;
use crate::solver::SolveResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The random-parking saturation rule did not trigger within the
    /// candidate budget. The partial configuration is still hardcore.
    #[error("candidate budget of {budget} exceeded before saturation (partial result with {} points)", .partial.len())]
    BudgetExceeded { budget: u64, partial: Box<PointSet> },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        partial: Box<SolveResult>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("dense oracle limited to {max} degrees of freedom, got {dofs}")]
    DofBudget { dofs: usize, max: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("realization with seed {seed:#018x} failed: {source}")]
    Realization {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Geometry(_) => "geometry",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::Precondition(_) => "precondition",
            Error::UndefinedStatistic(_) => "undefined_statistic",
            Error::Singular(_) => "singular",
            Error::DofBudget { .. } => "dof_budget",
            Error::Resource(_) => "resource",
            Error::Realization { .. } => "realization",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
