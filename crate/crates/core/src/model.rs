//! Domain types and the instantaneous cost and dynamics primitives.
//!
//! Units are fixed crate-wide: hours, MW, MWh, USD and rad/hour.

use serde::{Deserialize, Serialize};

use crate::degradation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hours in one (non-leap) year.
pub const HOURS_PER_YEAR: f64 = 8760.0;

fn require<T: Scalar>(ok: bool, what: &str, value: T) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} (got {value})")))
    }
}

/// Sinusoidal demand `d(t) = d0 + d1 sin(omega0 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile<T> {
    /// Baseline power (MW).
    pub d0: T,
    /// Fluctuation amplitude (MW).
    pub d1: T,
    /// Angular frequency (rad/hour).
    pub omega0: T,
}

impl<T: Scalar> DemandProfile<T> {
    pub fn new(d0: T, d1: T, omega0: T) -> Result<Self> {
        require(
            d0.is_finite() && d0 >= T::zero(),
            "d0 must be finite and >= 0",
            d0,
        )?;
        require(d1 >= T::zero(), "d1 must be >= 0", d1)?;
        require(d1 <= d0, "d1 must not exceed d0", d1)?;
        require(
            omega0.is_finite() && omega0 > T::zero(),
            "omega0 must be finite and > 0",
            omega0,
        )?;
        Ok(Self { d0, d1, omega0 })
    }

    /// Same profile at another frequency.
    pub fn with_omega0(&self, omega0: T) -> Result<Self> {
        Self::new(self.d0, self.d1, omega0)
    }

    /// Fluctuating part `d_s(t) = d1 sin(omega0 t)`.
    pub fn fluctuation(&self, t: T) -> T {
        self.d1 * (self.omega0 * t).sin()
    }

    pub fn at(&self, t: T) -> T {
        self.d0 + self.fluctuation(t)
    }

    /// Length of one demand cycle (hours).
    pub fn period(&self) -> T {
        T::TAU() / self.omega0
    }
}

/// Quadratic generation cost `L_g(p) = (a/2) p² + b p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationCostParams<T> {
    /// Quadratic coefficient (USD/(MW²·hour)).
    pub a: T,
    /// Linear coefficient (USD/MWh).
    pub b: T,
}

impl<T: Scalar> GenerationCostParams<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        require(
            a.is_finite() && a > T::zero(),
            "a must be finite and > 0",
            a,
        )?;
        require(
            b.is_finite() && b > T::zero(),
            "b must be finite and > 0",
            b,
        )?;
        Ok(Self { a, b })
    }

    /// Marginal cost at the baseline demand, `a d0 + b` (USD/MWh).
    pub fn beta(&self, d0: T) -> T {
        self.a * d0 + self.b
    }
}

/// Cycle-depth stress function `Φ(y) = (k1 y^k2 + k3)⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationCurve<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
}

impl<T: Scalar> DegradationCurve<T> {
    /// Builds a curve and verifies that `Φ` is positive and increasing on
    /// `(0, 1]` with `Φ(y)/y` strongly convex.
    pub fn new(k1: T, k2: T, k3: T) -> Result<Self> {
        let curve = Self::unchecked(k1, k2, k3)?;
        if !degradation::check_assumption1(&curve, degradation::ASSUMPTION_GRID) {
            return Err(Error::AssumptionViolated(format!(
                "Φ(y) = ({k1}·y^{k2} + {k3})⁻¹ must be positive and increasing on (0,1] \
                 with (Φ(y)/y)'' > 0"
            )));
        }
        Ok(curve)
    }

    /// Builds a curve without the shape checks; only finiteness is enforced.
    pub fn unchecked(k1: T, k2: T, k3: T) -> Result<Self> {
        if !(k1.is_finite() && k2.is_finite() && k3.is_finite()) {
            return Err(Error::domain("curve constants must be finite"));
        }
        Ok(Self { k1, k2, k3 })
    }

    /// `k1 y^k2 + k3`, with no domain checks.
    pub(crate) fn denominator(&self, y: T) -> T {
        self.k1 * y.powf(self.k2) + self.k3
    }

    /// `y / Φ(y) = k1 y^(k2+1) + k3 y`.
    pub(crate) fn depth_per_loss(&self, y: T) -> T {
        self.k1 * y.powf(self.k2 + T::one()) + self.k3 * y
    }

    /// Derivative of [`Self::depth_per_loss`].
    pub(crate) fn depth_per_loss_slope(&self, y: T) -> T {
        self.k1 * (self.k2 + T::one()) * y.powf(self.k2) + self.k3
    }
}

/// Storage technology: capacity-to-power ratio, build cost, lifespan cap and
/// degradation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageTech<T> {
    /// Capacity-to-power ratio `C / r` (hours).
    pub epsilon: T,
    /// One-time unit build cost (USD/MWh).
    pub rho: T,
    /// Maximum lifespan (hours).
    pub t_ls_max: T,
    pub curve: DegradationCurve<T>,
}

impl<T: Scalar> StorageTech<T> {
    pub fn new(epsilon: T, rho: T, t_ls_max: T, curve: DegradationCurve<T>) -> Result<Self> {
        require(
            epsilon.is_finite() && epsilon > T::zero(),
            "epsilon must be > 0",
            epsilon,
        )?;
        require(rho.is_finite() && rho > T::zero(), "rho must be > 0", rho)?;
        require(t_ls_max > T::zero(), "t_ls_max must be > 0", t_ls_max)?;
        Ok(Self {
            epsilon,
            rho,
            t_ls_max,
            curve,
        })
    }

    /// Same as [`Self::new`] with the lifespan cap given in years.
    pub fn with_lifespan_years(
        epsilon: T,
        rho: T,
        years: T,
        curve: DegradationCurve<T>,
    ) -> Result<Self> {
        Self::new(epsilon, rho, years * T::lit(HOURS_PER_YEAR), curve)
    }

    /// Maximum charge/discharge rate `r = C / epsilon` (MW).
    pub fn max_rate(&self, capacity: T) -> T {
        capacity / self.epsilon
    }
}

/// Installed capacity and reference energy level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec<T> {
    /// Capacity `C` (MWh).
    pub capacity: T,
    /// Reference energy `e0` (MWh).
    pub reference_energy: T,
}

impl<T: Scalar> StorageSpec<T> {
    pub fn new(capacity: T, reference_energy: T) -> Result<Self> {
        require(
            capacity.is_finite() && capacity >= T::zero(),
            "capacity must be >= 0",
            capacity,
        )?;
        require(
            reference_energy >= T::zero() && reference_energy <= capacity,
            "reference energy must lie in [0, capacity]",
            reference_energy,
        )?;
        Ok(Self {
            capacity,
            reference_energy,
        })
    }

    /// Capacity with the reference level at mid-charge.
    pub fn centered(capacity: T) -> Result<Self> {
        Self::new(capacity, capacity / T::lit(2.0))
    }
}

/// Uniformly sampled time function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub t_start: T,
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(t_start: T, dt: T, values: Vec<T>) -> Result<Self> {
        require(dt.is_finite() && dt > T::zero(), "dt must be > 0", dt)?;
        if values.len() < 2 {
            return Err(Error::domain(format!(
                "trajectory needs at least 2 samples (got {})",
                values.len()
            )));
        }
        Ok(Self {
            t_start,
            dt,
            values,
        })
    }

    /// Samples `f` at `t_start + k dt` for `k in 0..n`.
    pub fn sample(t_start: T, dt: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let values = (0..n).map(|k| f(t_start + dt * T::from_count(k))).collect();
        Self::new(t_start, dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> T {
        self.t_start + self.dt * T::from_count(k)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    pub fn end_time(&self) -> T {
        self.time(self.len() - 1)
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            t_start: self.t_start,
            dt: self.dt,
            values,
        }
    }
}

/// Generation cost rate `(a/2) p² + b p` (USD/hour).
pub fn generation_cost_rate<T: Scalar>(p: T, g: &GenerationCostParams<T>) -> T {
    g.a / T::lit(2.0) * p * p + g.b * p
}

/// Power drawn from generation: demand plus storage charging rate.
pub fn net_supply<T: Scalar>(d: T, u: T) -> T {
    d + u
}

/// Forward-Euler integral of `ė = u`; returns `u.len() + 1` samples on the
/// same grid starting at `e_init`.
pub fn integrate_storage<T: Scalar>(e_init: T, u: &Trajectory<T>) -> Trajectory<T> {
    let mut values = Vec::with_capacity(u.len() + 1);
    let mut e = e_init;
    values.push(e);
    for &rate in &u.values {
        e = e + rate * u.dt;
        values.push(e);
    }
    Trajectory {
        t_start: u.t_start,
        dt: u.dt,
        values,
    }
}
