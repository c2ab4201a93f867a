//! Demand time series from CSV and their first-harmonic fit.

use std::io::Read;

use chrono::{DateTime, NaiveDateTime};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DemandProfile;

pub const MIN_SAMPLES: usize = 24;
/// Relative tolerance on the sample spacing.
pub const SPACING_TOLERANCE: f64 = 1e-6;

const NAIVE_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

/// Uniformly sampled demand, sorted by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    /// Sample times (hours).
    pub timestamps: Vec<f64>,
    /// Demand (MW).
    pub demand_mw: Vec<f64>,
}

impl DemandSeries {
    /// Sorts and validates `(time, demand)` pairs. Rows are reported 1-based
    /// in input order.
    pub fn new(timestamps: Vec<f64>, demand_mw: Vec<f64>) -> Result<Self> {
        if timestamps.len() != demand_mw.len() {
            return Err(Error::domain("timestamps and demand differ in length"));
        }
        let rows: Vec<usize> = (1..=timestamps.len()).collect();
        Self::from_rows(timestamps, demand_mw, rows)
    }

    fn from_rows(timestamps: Vec<f64>, demand_mw: Vec<f64>, rows: Vec<usize>) -> Result<Self> {
        for ((&t, &d), &row) in timestamps.iter().zip(&demand_mw).zip(&rows) {
            if !t.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: "timestamp".into(),
                    message: format!("non-finite time {t}"),
                });
            }
            if !d.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: "demand_mw".into(),
                    message: format!("non-finite demand {d}"),
                });
            }
            if d < 0.0 {
                return Err(Error::NegativeDemand { row, value: d });
            }
        }
        if timestamps.len() < MIN_SAMPLES {
            return Err(Error::domain(format!(
                "need at least {MIN_SAMPLES} samples (got {})",
                timestamps.len()
            )));
        }

        let mut order: Vec<usize> = (0..timestamps.len()).collect();
        order.sort_by(|&i, &j| timestamps[i].total_cmp(&timestamps[j]));
        let sorted_t: Vec<f64> = order.iter().map(|&i| timestamps[i]).collect();
        let sorted_d: Vec<f64> = order.iter().map(|&i| demand_mw[i]).collect();

        let n = sorted_t.len();
        let dt = (sorted_t[n - 1] - sorted_t[0]) / (n - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::NonUniformSpacing {
                row: rows[order[1]],
                detail: "all timestamps coincide".into(),
            });
        }
        for k in 1..n {
            let step = sorted_t[k] - sorted_t[k - 1];
            if (step - dt).abs() > SPACING_TOLERANCE * dt {
                return Err(Error::NonUniformSpacing {
                    row: rows[order[k]],
                    detail: format!("step {step} h differs from mean spacing {dt} h"),
                });
            }
        }
        Ok(Self {
            timestamps: sorted_t,
            demand_mw: sorted_d,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Mean sample spacing (hours).
    pub fn dt(&self) -> f64 {
        let n = self.len();
        (self.timestamps[n - 1] - self.timestamps[0]) / (n - 1) as f64
    }

    /// Time covered counting each sample as one step (hours).
    pub fn span(&self) -> f64 {
        self.dt() * self.len() as f64
    }
}

/// Hours since the Unix epoch for ISO-8601 input, or the number itself.
fn parse_timestamp(raw: &str) -> Option<f64> {
    if let Ok(hours) = raw.parse::<f64>() {
        return Some(hours);
    }
    let seconds = |secs: i64, nanos: u32| (secs as f64 + nanos as f64 * 1e-9) / 3600.0;
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(seconds(t.timestamp(), t.timestamp_subsec_nanos()));
    }
    NAIVE_FORMATS.iter().find_map(|fmt| {
        NaiveDateTime::parse_from_str(raw, fmt).ok().map(|t| {
            seconds(
                t.and_utc().timestamp(),
                t.and_utc().timestamp_subsec_nanos(),
            )
        })
    })
}

/// Reads a `timestamp,demand_mw` CSV. Timestamps are fractional hours or
/// ISO-8601 date-times (naive ones are taken as UTC).
pub fn parse_csv<R: Read>(source: R) -> Result<DemandSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers().map_err(|e| Error::Parse {
        row: 1,
        column: "header".into(),
        message: e.to_string(),
    })?;
    if header.len() != 2 || &header[0] != "timestamp" || &header[1] != "demand_mw" {
        return Err(Error::Parse {
            row: 1,
            column: "header".into(),
            message: format!(
                "expected `timestamp,demand_mw`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let (mut times, mut demand, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let fallback_row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(fallback_row, |p| p.line() as usize),
            column: "record".into(),
            message: e.to_string(),
        })?;
        let row = record
            .position()
            .map_or(fallback_row, |p| p.line() as usize);
        let raw_t = &record[0];
        let t = parse_timestamp(raw_t).ok_or_else(|| Error::Parse {
            row,
            column: "timestamp".into(),
            message: format!("cannot parse `{raw_t}` as hours or ISO-8601"),
        })?;
        let raw_d = &record[1];
        let d: f64 = raw_d.parse().map_err(|_| Error::Parse {
            row,
            column: "demand_mw".into(),
            message: format!("cannot parse `{raw_d}` as a number"),
        })?;
        times.push(t);
        demand.push(d);
        rows.push(row);
    }
    DemandSeries::from_rows(times, demand, rows)
}

/// Result of fitting `d0 + A sin(ω0 τ) + B cos(ω0 τ)`, with `τ` measured
/// from the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub profile: DemandProfile<f64>,
    /// Root-mean-square residual (MW).
    pub residual_rms: f64,
    /// Phase `φ` of `d1 sin(ω0 τ + φ)` at the first sample (rad).
    pub phase: f64,
}

/// Least-squares fit of the mean and first harmonic with period `period`
/// (hours).
pub fn fit_first_harmonic(series: &DemandSeries, period: f64) -> Result<HarmonicFit> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::domain(format!(
            "period must be positive (got {period})"
        )));
    }
    if series.len() < 3 || series.span() < period * (1.0 - SPACING_TOLERANCE) {
        return Err(Error::DegenerateFit(format!(
            "series spans {} h, shorter than the period {period} h",
            if series.is_empty() {
                0.0
            } else {
                series.span()
            }
        )));
    }
    let omega0 = std::f64::consts::TAU / period;
    let start = series.timestamps[0];
    let n = series.len();
    let design = DMatrix::from_fn(n, 3, |i, j| {
        let phase = omega0 * (series.timestamps[i] - start);
        match j {
            0 => 1.0,
            1 => phase.sin(),
            _ => phase.cos(),
        }
    });
    let target = DVector::from_column_slice(&series.demand_mw);
    let svd = design.clone().svd(true, true);
    let (s_max, s_min) = (svd.singular_values.max(), svd.singular_values.min());
    if !(s_min > 1e-10 * s_max) {
        return Err(Error::DegenerateFit(format!(
            "design matrix is rank deficient (singular values {s_min:e} / {s_max:e})"
        )));
    }
    let coef = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let residual = &design * &coef - &target;
    let residual_rms = (residual.norm_squared() / n as f64).sqrt();

    let (d0, a, b) = (coef[0], coef[1], coef[2]);
    let profile = DemandProfile::new(d0, a.hypot(b), omega0)?;
    Ok(HarmonicFit {
        profile,
        residual_rms,
        phase: b.atan2(a),
    })
}
