//! Optimal charge/discharge schedules and capacity sizing for grid storage
//! under sinusoidal demand, quadratic generation cost and cycle-depth
//! degradation.
//!
//! All models are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix them to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degradation;
pub mod error;
pub mod ingest;
pub mod model;
pub mod operational;
pub mod oracle;
pub mod planning;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use ingest::{fit_first_harmonic, parse_csv, HarmonicFit};
pub use operational::ClosedForm;
pub use planning::{Binding, Penalty};
pub use scalar::Scalar;

pub type DemandProfile = model::DemandProfile<f64>;
pub type GenerationCostParams = model::GenerationCostParams<f64>;
pub type DegradationCurve = model::DegradationCurve<f64>;
pub type StorageTech = model::StorageTech<f64>;
pub type StorageSpec = model::StorageSpec<f64>;
pub type Trajectory = model::Trajectory<f64>;
pub type CycleSet = degradation::CycleSet<f64>;
pub type SinusoidalPolicy = operational::SinusoidalPolicy<f64>;
pub type FiniteHorizonSolution = operational::FiniteHorizonSolution<f64>;
pub type CostBreakdown = operational::CostBreakdown<f64>;
pub type PlanningBounds = planning::PlanningBounds<f64>;
pub type PlanningSolution = planning::PlanningSolution<f64>;
pub type GridReport = planning::GridReport<f64>;
pub type DiscreteProblem = oracle::DiscreteProblem<f64>;
pub type QpSolution = oracle::QpSolution<f64>;
pub type ErrorReport = oracle::ErrorReport<f64>;
pub type SweepRow = sweep::SweepRow<f64>;

pub use ingest::DemandSeries;
pub use sweep::SweepRecord;
