//! Optimal storage operation under sinusoidal demand.
//!
//! The auxiliary problem replaces the cycle-based degradation cost with a
//! quadratic penalty `(γ/2)(e - e0)²`. Its infinite-horizon optimum is a pure
//! sinusoid phase-locked to demand; on a finite horizon with free endpoints
//! the same sinusoid is corrupted by two exponential boundary layers. Both
//! are available here in closed form, together with the long-run average
//! generation and degradation costs the sinusoidal policy incurs.

use serde::{Deserialize, Serialize};

use crate::degradation::{phi, rainflow, storage_cost};
use crate::error::{Error, Result};
use crate::model::{
    generation_cost_rate, net_supply, DemandProfile, GenerationCostParams, StorageTech, Trajectory,
};
use crate::scalar::Scalar;

/// Relative slack accepted on the depth and rate constraints.
const CONSTRAINT_SLACK: f64 = 1e-12;

/// Anything that yields a control `u(t)` and energy deviation `e(t) - e0`.
pub trait ClosedForm<T> {
    fn control(&self, t: T) -> T;
    fn energy_deviation(&self, t: T) -> T;
}

/// Infinite-horizon optimum `u(t) = -u1 sin(ω0 t)`, `e(t) = e0 + e1 cos(ω0 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidalPolicy<T> {
    /// Charge-rate amplitude (MW).
    pub u1: T,
    /// Energy swing amplitude (MWh).
    pub e1: T,
    /// Reference energy (MWh).
    pub e0: T,
    pub omega0: T,
    /// Penalty weight (USD/(MWh²·hour)).
    pub gamma: T,
    /// `sqrt(gamma / a)` (1/hour).
    pub theta: T,
}

impl<T: Scalar> SinusoidalPolicy<T> {
    /// Depth of discharge of every cycle, `2 e1` (MWh).
    pub fn depth_of_discharge(&self) -> T {
        T::lit(2.0) * self.e1
    }

    pub fn energy(&self, t: T) -> T {
        self.e0 + self.energy_deviation(t)
    }

    /// Cycles per hour, `ω0 / 2π`.
    pub fn cycle_rate(&self) -> T {
        self.omega0 / T::TAU()
    }

    /// Same amplitudes around another reference level.
    pub fn with_reference(mut self, e0: T) -> Self {
        self.e0 = e0;
        self
    }
}

impl<T: Scalar> ClosedForm<T> for SinusoidalPolicy<T> {
    fn control(&self, t: T) -> T {
        -self.u1 * (self.omega0 * t).sin()
    }

    fn energy_deviation(&self, t: T) -> T {
        self.e1 * (self.omega0 * t).cos()
    }
}

/// Optimal policy for the auxiliary problem on the whole real line.
pub fn infinite_policy<T: Scalar>(
    demand: &DemandProfile<T>,
    a: T,
    gamma: T,
    e0: T,
) -> Result<SinusoidalPolicy<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::domain(format!("a must be positive (got {a})")));
    }
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(Error::domain(format!(
            "gamma must be finite and >= 0 (got {gamma})"
        )));
    }
    let theta_sq = gamma / a;
    let w = demand.omega0;
    let den = theta_sq + w * w;
    Ok(SinusoidalPolicy {
        u1: demand.d1 * w * w / den,
        e1: demand.d1 * w / den,
        e0,
        omega0: w,
        gamma,
        theta: theta_sq.sqrt(),
    })
}

/// Closed-form optimum of the auxiliary problem on `[t0, tf]` with free
/// endpoint energies.
///
/// With `τ = t - t0`, `σ = tf - t`, `T = tf - t0` the solution reads
///
/// ```text
/// u(t)   = -K sinh(θσ)/sinh(θT) - L sinh(θτ)/sinh(θT) - u1 sin(ω0 t)
/// e_s(t) = (K cosh(θσ) - L cosh(θτ)) / (θ sinh(θT)) + e1 cos(ω0 t)
/// ```
///
/// where `K = β/a + c sin(ω0 t0)`, `L = β/a + c sin(ω0 tf)` and
/// `c = d1 θ²/(θ² + ω0²)`. Hyperbolic ratios are evaluated in exponentially
/// scaled form so arbitrarily long horizons stay finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteHorizonSolution<T> {
    pub t0: T,
    pub tf: T,
    pub gamma: T,
    pub theta: T,
    /// `a d0 + b` (USD/MWh).
    pub beta: T,
    pub a: T,
    pub d1: T,
    pub omega0: T,
    pub e0: T,
    /// Boundary-layer weight anchored at `t0`.
    pub start_coeff: T,
    /// Boundary-layer weight anchored at `tf`.
    pub end_coeff: T,
    /// Amplitudes of the periodic part.
    pub u1: T,
    pub e1: T,
}

impl<T: Scalar> FiniteHorizonSolution<T> {
    pub fn horizon(&self) -> T {
        self.tf - self.t0
    }

    /// `sinh(θx)/sinh(θT)`.
    fn sinh_ratio(&self, x: T) -> T {
        let th = self.theta;
        let big_t = self.horizon();
        let scale = (th * (x - big_t)).exp();
        scale * (-(T::lit(-2.0) * th * x).exp_m1()) / (-(T::lit(-2.0) * th * big_t).exp_m1())
    }

    /// `cosh(θx)/sinh(θT)`.
    fn cosh_ratio(&self, x: T) -> T {
        let th = self.theta;
        let big_t = self.horizon();
        let scale = (th * (x - big_t)).exp();
        scale * (T::one() + (T::lit(-2.0) * th * x).exp()) / (-(T::lit(-2.0) * th * big_t).exp_m1())
    }

    pub fn energy(&self, t: T) -> T {
        self.e0 + self.energy_deviation(t)
    }

    /// Analytic time derivative of the control.
    pub fn control_rate(&self, t: T) -> T {
        let (sigma, tau) = (self.tf - t, t - self.t0);
        self.theta
            * (self.start_coeff * self.cosh_ratio(sigma) - self.end_coeff * self.cosh_ratio(tau))
            - self.u1 * self.omega0 * (self.omega0 * t).cos()
    }

    /// Control value forced by the free-endpoint condition,
    /// `-β/a - d_s(t)`.
    pub fn transversality_target(&self, t: T) -> T {
        -self.beta / self.a - self.d1 * (self.omega0 * t).sin()
    }
}

impl<T: Scalar> ClosedForm<T> for FiniteHorizonSolution<T> {
    fn control(&self, t: T) -> T {
        let (sigma, tau) = (self.tf - t, t - self.t0);
        -self.start_coeff * self.sinh_ratio(sigma)
            - self.end_coeff * self.sinh_ratio(tau)
            - self.u1 * (self.omega0 * t).sin()
    }

    fn energy_deviation(&self, t: T) -> T {
        let (sigma, tau) = (self.tf - t, t - self.t0);
        (self.start_coeff * self.cosh_ratio(sigma) - self.end_coeff * self.cosh_ratio(tau))
            / self.theta
            + self.e1 * (self.omega0 * t).cos()
    }
}

pub fn finite_solution<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    gamma: T,
    e0: T,
    t0: T,
    tf: T,
) -> Result<FiniteHorizonSolution<T>> {
    if !(tf > t0) {
        return Err(Error::domain(format!(
            "horizon must satisfy tf > t0 (got [{t0}, {tf}])"
        )));
    }
    if !(gamma > T::zero()) {
        return Err(Error::domain(format!("gamma must be > 0 (got {gamma})")));
    }
    let policy = infinite_policy(demand, g.a, gamma, e0)?;
    let theta = policy.theta;
    let theta_horizon = theta * (tf - t0);
    let denom = -(T::lit(-2.0) * theta_horizon).exp_m1();
    if !theta_horizon.is_finite() || !(denom > T::zero()) || !denom.is_finite() {
        return Err(Error::NumericalOverflow {
            theta_horizon: theta_horizon.as_f64(),
        });
    }
    let w = demand.omega0;
    let beta = g.beta(demand.d0);
    let c = demand.d1 * theta * theta / (theta * theta + w * w);
    let beta_over_a = beta / g.a;
    Ok(FiniteHorizonSolution {
        t0,
        tf,
        gamma,
        theta,
        beta,
        a: g.a,
        d1: demand.d1,
        omega0: w,
        e0,
        start_coeff: beta_over_a + c * (w * t0).sin(),
        end_coeff: beta_over_a + c * (w * tf).sin(),
        u1: policy.u1,
        e1: policy.e1,
    })
}

/// Long-run average generation cost with charge amplitude `u1` (USD/hour).
pub fn avg_generation_cost<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    u1: T,
) -> T {
    let residual = demand.d1 - u1;
    g.a / T::lit(4.0) * residual * residual
        + g.a / T::lit(2.0) * demand.d0 * demand.d0
        + g.b * demand.d0
}

/// Average cost with no storage, `J(0)`.
pub fn baseline_cost<T: Scalar>(demand: &DemandProfile<T>, g: &GenerationCostParams<T>) -> T {
    avg_generation_cost(demand, g, T::zero())
}

/// Normalized depth `2 e1 / C`, snapped to 1 when it exceeds it by rounding only.
fn normalized_depth<T: Scalar>(policy: &SinusoidalPolicy<T>, capacity: T) -> Result<T> {
    if !(capacity > T::zero()) {
        return Err(Error::domain(format!(
            "capacity must be positive (got {capacity})"
        )));
    }
    let y = policy.depth_of_discharge() / capacity;
    if y > T::one() + T::lit(CONSTRAINT_SLACK) {
        return Err(Error::domain(format!(
            "depth of discharge {} exceeds capacity {capacity}",
            policy.depth_of_discharge()
        )));
    }
    Ok(y.min(T::one()))
}

/// Long-run average degradation cost `Φ(2e1/C) C ρ ω0/2π` (USD/hour).
pub fn avg_storage_cost<T: Scalar>(
    policy: &SinusoidalPolicy<T>,
    capacity: T,
    tech: &StorageTech<T>,
) -> Result<T> {
    if policy.e1 == T::zero() {
        return Ok(T::zero());
    }
    let y = normalized_depth(policy, capacity)?;
    Ok(phi(&tech.curve, y)? * capacity * tech.rho * policy.cycle_rate())
}

/// Hours until identical cycles exhaust the battery, `2π / (ω0 Φ(2e1/C))`.
/// Infinite when the policy never cycles.
pub fn lifespan<T: Scalar>(
    policy: &SinusoidalPolicy<T>,
    capacity: T,
    tech: &StorageTech<T>,
) -> Result<T> {
    if policy.e1 == T::zero() {
        return Ok(T::infinity());
    }
    let y = normalized_depth(policy, capacity)?;
    Ok(T::TAU() / (policy.omega0 * phi(&tech.curve, y)?))
}

/// Average cost split into generation and degradation parts, with savings
/// against the no-storage baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown<T> {
    pub j_g: T,
    pub j_s: T,
    pub j_total: T,
    pub baseline: T,
    pub savings: T,
    pub savings_fraction: T,
}

impl<T: Scalar> CostBreakdown<T> {
    pub fn new(j_g: T, j_s: T, baseline: T) -> Self {
        let j_total = j_g + j_s;
        let savings = baseline - j_total;
        Self {
            j_g,
            j_s,
            j_total,
            baseline,
            savings,
            savings_fraction: savings / baseline,
        }
    }

    pub fn no_storage(demand: &DemandProfile<T>, g: &GenerationCostParams<T>) -> Self {
        let baseline = baseline_cost(demand, g);
        Self::new(baseline, T::zero(), baseline)
    }
}

/// Cost of running the penalty-`gamma` policy on a battery of `capacity`.
///
/// A zero capacity is the no-storage case. Otherwise the policy is centred
/// at `C/2` and must respect the depth (`2 e1 ≤ C`) and rate
/// (`u1 ≤ C/ε`) limits.
pub fn total_cost<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    gamma: T,
    capacity: T,
) -> Result<CostBreakdown<T>> {
    if capacity == T::zero() {
        return Ok(CostBreakdown::no_storage(demand, g));
    }
    if !(capacity > T::zero()) || !capacity.is_finite() {
        return Err(Error::domain(format!(
            "capacity must be >= 0 (got {capacity})"
        )));
    }
    let policy = infinite_policy(demand, g.a, gamma, capacity / T::lit(2.0))?;
    let slack = T::one() + T::lit(CONSTRAINT_SLACK);
    if policy.depth_of_discharge() > capacity * slack {
        return Err(Error::InfeasibleOperation {
            constraint: "depth",
            detail: format!(
                "2·e1 = {} exceeds capacity {capacity}",
                policy.depth_of_discharge()
            ),
        });
    }
    if policy.u1 > tech.max_rate(capacity) * slack {
        return Err(Error::InfeasibleOperation {
            constraint: "rate",
            detail: format!(
                "u1 = {} exceeds C/epsilon = {}",
                policy.u1,
                tech.max_rate(capacity)
            ),
        });
    }
    let j_g = avg_generation_cost(demand, g, policy.u1);
    let j_s = avg_storage_cost(&policy, capacity, tech)?;
    Ok(CostBreakdown::new(j_g, j_s, baseline_cost(demand, g)))
}

/// Average costs of sampled trajectories: generation by the rectangle rule
/// over the `u` samples, degradation by rainflow counting `e`.
///
/// `u` sample `k` applies at `u.time(k)`; the averaging window is
/// `u.len() · dt`.
pub fn sampled_cost<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    u: &Trajectory<T>,
    e: &Trajectory<T>,
    capacity: T,
) -> Result<CostBreakdown<T>> {
    let duration = u.dt * T::from_count(u.len());
    let generation: T = u
        .times()
        .zip(&u.values)
        .map(|(t, &rate)| generation_cost_rate(net_supply(demand.at(t), rate), g))
        .sum();
    let j_g = generation / T::from_count(u.len());
    let cycles = rainflow(e, capacity)?;
    let j_s = storage_cost(&cycles, capacity, tech.rho, &tech.curve)? / duration;
    Ok(CostBreakdown::new(j_g, j_s, baseline_cost(demand, g)))
}
