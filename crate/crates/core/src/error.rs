use thiserror::Error;

/// Errors raised by the models, solvers and data ingestion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The degradation curve does not make `Φ(y)/y` strongly convex.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// Hyperbolic terms of the finite-horizon solution cannot be represented.
    #[error("numerical overflow evaluating closed form (theta * horizon = {theta_horizon:e})")]
    NumericalOverflow { theta_horizon: f64 },

    /// A sinusoidal policy violates a hard storage constraint.
    #[error("infeasible operation: {constraint} constraint violated ({detail})")]
    InfeasibleOperation {
        constraint: &'static str,
        detail: String,
    },

    /// Lifespan and rate bounds on the cycle depth do not intersect.
    #[error(
        "infeasible planning: lifespan lower bound y_lb = {y_lb} exceeds rate upper bound y_ub = {y_ub}"
    )]
    InfeasiblePlanning { y_lb: f64, y_ub: f64 },

    /// Zero or negative pivot in the oracle's linear system.
    #[error("singular system at row {row}")]
    SingularSystem { row: usize },

    /// Trajectories handed to a comparison live on incompatible time grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("non-uniform sample spacing at row {row}: {detail}")]
    NonUniformSpacing { row: usize, detail: String },

    #[error("negative demand {value} at row {row}")]
    NegativeDemand { row: usize, value: f64 },

    #[error("degenerate harmonic fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
