use std::io::Write;

use serde::{Deserialize, Serialize};
use storage_arb::model::HOURS_PER_YEAR;
use storage_arb::{DemandProfile, HarmonicFit, PlanningSolution};

use crate::config::RunConfig;

/// Parameters the plan was computed from, echoed so the output is
/// self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub tmax_years: f64,
    pub d0: f64,
    pub d1: f64,
    pub omega0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub inputs: PlanInputs,
    pub storage_used: bool,
    /// `null` when storage is not used (infinite penalty).
    pub gamma_star: Option<f64>,
    pub y_star: f64,
    pub y_stationary: f64,
    pub y_lb: f64,
    pub y_ub: f64,
    pub c_star_mwh: f64,
    pub binding: String,
    pub u1_mw: Option<f64>,
    pub e1_mwh: Option<f64>,
    pub j_g: f64,
    pub j_s: f64,
    pub j_total: f64,
    pub baseline: f64,
    pub savings: f64,
    pub savings_fraction: f64,
    pub lifespan_years: Option<f64>,
    pub returning_rate: Option<f64>,
}

impl PlanReport {
    pub fn new(config: &RunConfig, demand: &DemandProfile, s: &PlanningSolution) -> Self {
        let inputs = PlanInputs {
            a: config.a,
            b: config.b,
            epsilon: config.epsilon,
            rho: config.rho,
            k1: config.k1,
            k2: config.k2,
            k3: config.k3,
            tmax_years: config.tmax_years,
            d0: demand.d0,
            d1: demand.d1,
            omega0: demand.omega0,
        };
        Self {
            inputs,
            storage_used: s.storage_used,
            gamma_star: s.gamma_star.finite(),
            y_star: s.y_star,
            y_stationary: s.y_stationary,
            y_lb: s.bounds.y_lb,
            y_ub: s.bounds.y_ub,
            c_star_mwh: s.c_star,
            binding: s.binding.to_string(),
            u1_mw: s.policy.map(|p| p.u1),
            e1_mwh: s.policy.map(|p| p.e1),
            j_g: s.costs.j_g,
            j_s: s.costs.j_s,
            j_total: s.costs.j_total,
            baseline: s.costs.baseline,
            savings: s.costs.savings,
            savings_fraction: s.costs.savings_fraction,
            lifespan_years: s.storage_used.then_some(s.lifespan_hours / HOURS_PER_YEAR),
            returning_rate: s.returning_rate,
        }
    }

    pub fn write_table(&self, out: &mut impl Write) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
        writeln!(out, "{:<20} {}", "storage used", self.storage_used)?;
        writeln!(out, "{:<20} {}", "binding", self.binding)?;
        writeln!(out, "{:<20} {}", "gamma*", opt(self.gamma_star))?;
        writeln!(out, "{:<20} {:.6}", "y*", self.y_star)?;
        writeln!(
            out,
            "{:<20} [{:.6}, {:.6}]",
            "depth bounds", self.y_lb, self.y_ub
        )?;
        writeln!(out, "{:<20} {:.3}", "C* (MWh)", self.c_star_mwh)?;
        writeln!(out, "{:<20} {:.3}", "J_g (USD/h)", self.j_g)?;
        writeln!(out, "{:<20} {:.3}", "J_s (USD/h)", self.j_s)?;
        writeln!(out, "{:<20} {:.3}", "baseline (USD/h)", self.baseline)?;
        writeln!(
            out,
            "{:<20} {:.4}%",
            "savings",
            100.0 * self.savings_fraction
        )?;
        writeln!(
            out,
            "{:<20} {}",
            "lifespan (years)",
            opt(self.lifespan_years)
        )?;
        writeln!(out, "{:<20} {}", "returning rate", opt(self.returning_rate))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub d0: f64,
    pub d1: f64,
    pub omega0: f64,
    pub residual_rms: f64,
    pub phase: f64,
}

impl From<&HarmonicFit> for FitReport {
    fn from(f: &HarmonicFit) -> Self {
        Self {
            d0: f.profile.d0,
            d1: f.profile.d1,
            omega0: f.profile.omega0,
            residual_rms: f.residual_rms,
            phase: f.phase,
        }
    }
}

impl FitReport {
    pub fn write_table(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{:<20} {:.3}", "d0 (MW)", self.d0)?;
        writeln!(out, "{:<20} {:.3}", "d1 (MW)", self.d1)?;
        writeln!(out, "{:<20} {:.6}", "omega0 (rad/h)", self.omega0)?;
        writeln!(out, "{:<20} {:.3}", "residual rms (MW)", self.residual_rms)
    }
}
