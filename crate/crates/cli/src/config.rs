use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use storage_arb::{
    fit_first_harmonic, parse_csv, DegradationCurve, DemandProfile, GenerationCostParams,
    StorageTech,
};

/// Every setting a config file may carry. Unset keys fall through to the
/// next layer (flags over file over built-in defaults).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub tmax_years: Option<f64>,
    pub d0: Option<f64>,
    pub d1: Option<f64>,
    pub omega0: Option<f64>,
    pub demand_csv: Option<PathBuf>,
    pub period_hours: Option<f64>,
    pub omega_lo: Option<f64>,
    pub omega_hi: Option<f64>,
    pub points: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

macro_rules! layer {
    ($top:expr, $bottom:expr, $($field:ident),+) => {
        Overrides { $($field: $top.$field.or($bottom.$field)),+ }
    };
}

impl Overrides {
    fn over(self, lower: Overrides) -> Overrides {
        layer!(
            self,
            lower,
            a,
            b,
            epsilon,
            rho,
            k1,
            k2,
            k3,
            tmax_years,
            d0,
            d1,
            omega0,
            demand_csv,
            period_hours,
            omega_lo,
            omega_hi,
            points,
            output_dir
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Model parameters shared by `plan`, `sweep` and `verify`.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Generation cost quadratic coefficient (USD/MW²h).
    #[arg(long)]
    pub a: Option<f64>,
    /// Generation cost linear coefficient (USD/MWh).
    #[arg(long)]
    pub b: Option<f64>,
    /// Capacity-to-power ratio (hours).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Storage build cost (USD/MWh).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k3: Option<f64>,
    /// Lifespan cap (years).
    #[arg(long)]
    pub tmax_years: Option<f64>,
    /// Mean demand (MW).
    #[arg(long)]
    pub d0: Option<f64>,
    /// Demand amplitude (MW).
    #[arg(long)]
    pub d1: Option<f64>,
    /// Demand angular frequency (rad/hour).
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Fit d0 and d1 from a `timestamp,demand_mw` CSV instead.
    #[arg(long)]
    pub demand_csv: Option<PathBuf>,
    /// Period used when fitting `--demand-csv` (hours).
    #[arg(long)]
    pub period_hours: Option<f64>,
}

impl ParamArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            a: self.a,
            b: self.b,
            epsilon: self.epsilon,
            rho: self.rho,
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            tmax_years: self.tmax_years,
            d0: self.d0,
            d1: self.d1,
            omega0: self.omega0,
            demand_csv: self.demand_csv.clone(),
            period_hours: self.period_hours,
            ..Overrides::default()
        }
    }

    /// Resolves flags, then `--config`, then defaults.
    pub fn resolve(&self, extra: Overrides) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        RunConfig::default().apply(extra.over(self.overrides()).over(file))
    }
}

/// Fully resolved run settings. Defaults are the ISO New England case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
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
    pub demand_csv: Option<PathBuf>,
    pub period_hours: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub points: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: 0.02,
            b: 16.24,
            epsilon: 2.0,
            rho: 209000.0,
            k1: 1.4e5,
            k2: -0.5,
            k3: -1.23e5,
            tmax_years: 76.0,
            d0: 18091.0,
            d1: 4671.0,
            omega0: 0.26,
            demand_csv: None,
            period_hours: 24.0,
            omega_lo: 0.26,
            omega_hi: 37.66,
            points: 50,
            output_dir: None,
        }
    }
}

impl RunConfig {
    fn apply(self, o: Overrides) -> Result<Self> {
        let c = Self {
            a: o.a.unwrap_or(self.a),
            b: o.b.unwrap_or(self.b),
            epsilon: o.epsilon.unwrap_or(self.epsilon),
            rho: o.rho.unwrap_or(self.rho),
            k1: o.k1.unwrap_or(self.k1),
            k2: o.k2.unwrap_or(self.k2),
            k3: o.k3.unwrap_or(self.k3),
            tmax_years: o.tmax_years.unwrap_or(self.tmax_years),
            d0: o.d0.unwrap_or(self.d0),
            d1: o.d1.unwrap_or(self.d1),
            omega0: o.omega0.unwrap_or(self.omega0),
            demand_csv: o.demand_csv.or(self.demand_csv),
            period_hours: o.period_hours.unwrap_or(self.period_hours),
            omega_lo: o.omega_lo.unwrap_or(self.omega_lo),
            omega_hi: o.omega_hi.unwrap_or(self.omega_hi),
            points: o.points.unwrap_or(self.points),
            output_dir: o.output_dir.or(self.output_dir),
        };
        if !(c.omega_lo > 0.0 && c.omega_lo < c.omega_hi && c.omega_hi.is_finite()) {
            bail!(
                "sweep range must satisfy 0 < omega_lo < omega_hi (got [{}, {}])",
                c.omega_lo,
                c.omega_hi
            );
        }
        if c.points < 2 {
            bail!("sweep needs at least 2 points (got {})", c.points);
        }
        Ok(c)
    }

    /// Demand profile, fitted from `demand_csv` when one is given.
    pub fn demand(&self) -> Result<DemandProfile> {
        match &self.demand_csv {
            Some(path) => {
                let fit = fit_csv(path, self.period_hours)?;
                Ok(fit.profile)
            }
            None => Ok(DemandProfile::new(self.d0, self.d1, self.omega0)?),
        }
    }

    pub fn generation(&self) -> Result<GenerationCostParams> {
        Ok(GenerationCostParams::new(self.a, self.b)?)
    }

    /// Curve checked against the convexity assumption.
    pub fn curve(&self) -> Result<DegradationCurve> {
        Ok(DegradationCurve::new(self.k1, self.k2, self.k3)?)
    }

    pub fn tech_with(&self, curve: DegradationCurve) -> Result<StorageTech> {
        Ok(StorageTech::with_lifespan_years(
            self.epsilon,
            self.rho,
            self.tmax_years,
            curve,
        )?)
    }

    pub fn tech(&self) -> Result<StorageTech> {
        self.tech_with(self.curve()?)
    }
}

pub fn fit_csv(path: &Path, period_hours: f64) -> Result<storage_arb::HarmonicFit> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let series = parse_csv(file).with_context(|| format!("reading {}", path.display()))?;
    Ok(fit_first_harmonic(&series, period_hours)?)
}
