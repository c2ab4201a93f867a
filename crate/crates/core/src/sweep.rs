//! Planning solutions across a range of demand frequencies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DemandProfile, GenerationCostParams, StorageTech};
use crate::planning::{log_grid, solve, PlanningSolution};
use crate::scalar::Scalar;

/// Column order of [`SweepRecord`] in CSV output.
pub const SWEEP_COLUMNS: [&str; 11] = [
    "omega0_rad_per_hr",
    "j_g",
    "j_s",
    "j_total",
    "baseline",
    "savings_fraction",
    "returning_rate",
    "c_star_mwh",
    "y_star",
    "gamma_star",
    "binding",
];

/// Planning outcome at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub omega0: T,
    pub outcome: Result<PlanningSolution<T>>,
}

/// Flat row for CSV output. Infeasible frequencies leave the numeric
/// fields empty and carry `infeasible` in `binding`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub omega0_rad_per_hr: f64,
    pub j_g: Option<f64>,
    pub j_s: Option<f64>,
    pub j_total: Option<f64>,
    pub baseline: Option<f64>,
    pub savings_fraction: Option<f64>,
    pub returning_rate: Option<f64>,
    pub c_star_mwh: Option<f64>,
    pub y_star: Option<f64>,
    /// `inf` when storage is not used.
    pub gamma_star: Option<f64>,
    pub binding: String,
}

impl<T: Scalar> SweepRow<T> {
    pub fn is_feasible(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn record(&self) -> SweepRecord {
        let omega0_rad_per_hr = self.omega0.as_f64();
        match &self.outcome {
            Ok(s) => SweepRecord {
                omega0_rad_per_hr,
                j_g: Some(s.costs.j_g.as_f64()),
                j_s: Some(s.costs.j_s.as_f64()),
                j_total: Some(s.costs.j_total.as_f64()),
                baseline: Some(s.costs.baseline.as_f64()),
                savings_fraction: Some(s.costs.savings_fraction.as_f64()),
                returning_rate: s.returning_rate.map(Scalar::as_f64),
                c_star_mwh: Some(s.c_star.as_f64()),
                y_star: Some(s.y_star.as_f64()),
                gamma_star: Some(s.gamma_star.finite().map_or(f64::INFINITY, Scalar::as_f64)),
                binding: s.binding.to_string(),
            },
            Err(_) => SweepRecord {
                omega0_rad_per_hr,
                j_g: None,
                j_s: None,
                j_total: None,
                baseline: None,
                savings_fraction: None,
                returning_rate: None,
                c_star_mwh: None,
                y_star: None,
                gamma_star: None,
                binding: "infeasible".into(),
            },
        }
    }
}

/// Solves the planning problem at `points` log-spaced frequencies in
/// `[omega_lo, omega_hi]`. Rows come back in increasing frequency order;
/// a failure at one frequency is recorded in its row.
pub fn frequency_sweep<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    omega_lo: T,
    omega_hi: T,
    points: usize,
) -> Result<Vec<SweepRow<T>>> {
    if !(omega_lo > T::zero()) || !(omega_hi > omega_lo) || !omega_hi.is_finite() {
        return Err(Error::domain(format!(
            "sweep range must satisfy 0 < omega_lo < omega_hi (got [{omega_lo}, {omega_hi}])"
        )));
    }
    if points < 2 {
        return Err(Error::domain(format!(
            "sweep needs at least 2 points (got {points})"
        )));
    }
    Ok(log_grid(omega_lo, omega_hi, points)
        .into_par_iter()
        .map(|omega0| SweepRow {
            omega0,
            outcome: demand.with_omega0(omega0).and_then(|d| solve(&d, g, tech)),
        })
        .collect())
}
