//! Optimal cycle depth, penalty and capacity for the reformulated planning
//! problem, with a brute-force grid check.
//!
//! Writing the degradation cost in terms of the normalized depth
//! `y = 2 e1 / C` turns the average cost into
//!
//! ```text
//! J(γ, y) = (a/4)(d1 - u1(γ))² + (a/2) d0² + b d0 + u1(γ) · (ρ/π) · Φ(y)/y
//! ```
//!
//! subject to `y_lb ≤ y ≤ min(y_ub, 1)`. The depth term separates: the best
//! depth is the minimizer of `Φ(y)/y` projected onto the feasible interval,
//! and the best penalty balances the marginal generation and degradation
//! costs at that depth.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degradation::{phi, phi_inverse, stationary_depth};
use crate::error::{Error, Result};
use crate::model::{DemandProfile, GenerationCostParams, StorageTech};
use crate::operational::{
    avg_generation_cost, avg_storage_cost, infinite_policy, lifespan, total_cost, CostBreakdown,
    SinusoidalPolicy,
};
use crate::scalar::Scalar;

/// Relative slack on the lifespan cap when checking a solution.
pub const LIFESPAN_SLACK: f64 = 1e-9;

/// Feasible interval for the normalized cycle depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningBounds<T> {
    /// Depth below which the battery would outlive the lifespan cap.
    pub y_lb: T,
    /// Depth above which the rate limit `u1 ≤ C/ε` is violated, `2/(ε ω0)`.
    pub y_ub: T,
    /// `min(y_ub, 1)`.
    pub y_max: T,
}

/// Penalty weight on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty<T> {
    Finite(T),
    /// Storage is never worth using.
    Infinite,
}

impl<T: Scalar> Penalty<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Penalty::Finite(g) => Some(g),
            Penalty::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Penalty::Infinite)
    }
}

/// Which constraint pins the optimal depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Interior,
    LifespanBound,
    RateBound,
    DepthBoundOne,
    NoStorage,
}

impl Binding {
    pub fn as_str(&self) -> &'static str {
        match self {
            Binding::Interior => "interior",
            Binding::LifespanBound => "lifespan_bound",
            Binding::RateBound => "rate_bound",
            Binding::DepthBoundOne => "depth_bound_one",
            Binding::NoStorage => "no_storage",
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimal plan: penalty, depth, capacity and the resulting costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningSolution<T> {
    pub storage_used: bool,
    pub gamma_star: Penalty<T>,
    /// Projected optimal depth (kept even when storage is not used).
    pub y_star: T,
    /// Unconstrained minimizer of `Φ(y)/y`.
    pub y_stationary: T,
    /// Optimal capacity (MWh); zero without storage.
    pub c_star: T,
    pub policy: Option<SinusoidalPolicy<T>>,
    pub costs: CostBreakdown<T>,
    pub binding: Binding,
    pub bounds: PlanningBounds<T>,
    /// Battery life under the optimal policy (hours); infinite without storage.
    pub lifespan_hours: T,
    /// Lifetime savings over build cost, `B_f · T_ls / (ρ C*)`.
    pub returning_rate: Option<T>,
}

/// Depth interval allowed by the lifespan cap and the rate limit.
pub fn bounds<T: Scalar>(tech: &StorageTech<T>, omega0: T) -> Result<PlanningBounds<T>> {
    if !(omega0 > T::zero()) || !omega0.is_finite() {
        return Err(Error::domain(format!(
            "omega0 must be positive (got {omega0})"
        )));
    }
    let y_ub = T::lit(2.0) / (tech.epsilon * omega0);
    // Life fraction each cycle must consume for the battery to wear out
    // within t_ls_max.
    let loss = T::TAU() / (tech.t_ls_max * omega0);
    let full = phi(&tech.curve, T::one())?;
    if loss > full * (T::one() + T::epsilon() * T::lit(4.0)) {
        return Err(Error::InfeasiblePlanning {
            y_lb: f64::INFINITY,
            y_ub: y_ub.as_f64(),
        });
    }
    let y_lb = phi_inverse(&tech.curve, loss).unwrap_or_else(|_| T::min_positive_value());
    if y_lb > y_ub {
        return Err(Error::InfeasiblePlanning {
            y_lb: y_lb.as_f64(),
            y_ub: y_ub.as_f64(),
        });
    }
    Ok(PlanningBounds {
        y_lb,
        y_ub,
        y_max: y_ub.min(T::one()),
    })
}

fn check_depth<T: Scalar>(y: T) -> Result<()> {
    if y > T::zero() && y <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("depth must lie in (0, 1] (got {y})")))
    }
}

/// Penalty balancing marginal costs at depth `y_star`:
/// `2 ω0² a ρ / (d1 π a y*/Φ(y*) - 2ρ)`, infinite when the denominator is
/// not positive.
pub fn gamma_stationary<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    y_star: T,
) -> Result<Penalty<T>> {
    check_depth(y_star)?;
    let depth_per_loss = y_star / phi(&tech.curve, y_star)?;
    let two = T::lit(2.0);
    let den = demand.d1 * T::PI() * g.a * depth_per_loss - two * tech.rho;
    if den <= T::zero() {
        return Ok(Penalty::Infinite);
    }
    let w = demand.omega0;
    Ok(Penalty::Finite(two * w * w * g.a * tech.rho / den))
}

/// True when the marginal degradation cost `(ρ/π) Φ(y*)/y*` exceeds the
/// marginal generation saving `(a/2) d1` of the first unit of storage.
pub fn no_storage_condition<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    y_star: T,
) -> Result<bool> {
    check_depth(y_star)?;
    let marginal_storage = tech.rho / T::PI() * phi(&tech.curve, y_star)? / y_star;
    Ok(marginal_storage > g.a / T::lit(2.0) * demand.d1)
}

/// Projects the stationary depth onto the feasible interval.
pub fn project_depth<T: Scalar>(y_stationary: T, b: &PlanningBounds<T>) -> (T, Binding) {
    if y_stationary < b.y_lb {
        (b.y_lb, Binding::LifespanBound)
    } else if y_stationary > b.y_max {
        if b.y_max == T::one() {
            (T::one(), Binding::DepthBoundOne)
        } else {
            (b.y_max, Binding::RateBound)
        }
    } else {
        (y_stationary, Binding::Interior)
    }
}

fn no_storage<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    y_star: T,
    y_stationary: T,
    b: PlanningBounds<T>,
) -> PlanningSolution<T> {
    PlanningSolution {
        storage_used: false,
        gamma_star: Penalty::Infinite,
        y_star,
        y_stationary,
        c_star: T::zero(),
        policy: None,
        costs: CostBreakdown::no_storage(demand, g),
        binding: Binding::NoStorage,
        bounds: b,
        lifespan_hours: T::infinity(),
        returning_rate: None,
    }
}

/// Optimal penalty, depth and capacity.
pub fn solve<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
) -> Result<PlanningSolution<T>> {
    let y_stationary = stationary_depth(&tech.curve)?;
    let b = bounds(tech, demand.omega0)?;
    let (y_star, binding) = project_depth(y_stationary, &b);

    let gamma = match gamma_stationary(demand, g, tech, y_star)? {
        Penalty::Finite(gamma) => gamma,
        Penalty::Infinite => return Ok(no_storage(demand, g, y_star, y_stationary, b)),
    };
    let policy = infinite_policy(demand, g.a, gamma, T::zero())?;
    let c_star = policy.depth_of_discharge() / y_star;
    let policy = policy.with_reference(c_star / T::lit(2.0));
    let costs = total_cost(demand, g, tech, gamma, c_star)?;
    // The projected stationary point is only worth building if it beats
    // the no-storage baseline.
    if !(costs.j_total < costs.baseline) {
        return Ok(no_storage(demand, g, y_star, y_stationary, b));
    }
    let life = lifespan(&policy, c_star, tech)?;
    let returning_rate = costs.savings * life / (tech.rho * c_star);
    Ok(PlanningSolution {
        storage_used: true,
        gamma_star: Penalty::Finite(gamma),
        y_star,
        y_stationary,
        c_star,
        policy: Some(policy),
        costs,
        binding,
        bounds: b,
        lifespan_hours: life,
        returning_rate: Some(returning_rate),
    })
}

/// Outcome of the exhaustive search over `(y, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridReport<T> {
    /// Best depth on the grid; `None` when the no-storage point wins.
    pub best_y: Option<T>,
    pub best_gamma: Option<T>,
    pub best_capacity: T,
    pub best_objective: T,
    /// `J` of the closed-form plan.
    pub closed_objective: T,
    /// `|J_grid - J_closed| / J_closed`.
    pub gap: T,
    /// Spacing of the depth grid.
    pub y_cell: T,
    /// `|best_y - y*|` in units of `y_cell` (zero when both are no-storage).
    pub y_offset_cells: T,
    pub closed: PlanningSolution<T>,
}

/// Log-spaced `n` points from `lo` to `hi` inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (l + (h - l) * T::from_count(i) / T::from_count(n - 1)).exp(),
        })
        .collect()
}

/// Linearly spaced `n` points from `lo` to `hi` inclusive.
pub fn linear_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| match i {
            i if i == n - 1 => hi,
            i => lo + (hi - lo) * T::from_count(i) / T::from_count(n - 1),
        })
        .collect()
}

/// Penalty grid: `u1/d1` from about `1e-3` to `1 - 1e-9`.
pub fn gamma_grid<T: Scalar>(a: T, omega0: T, n: usize) -> Vec<T> {
    let scale = a * omega0 * omega0;
    log_grid(T::lit(1e-9) * scale, T::lit(1e3) * scale, n)
}

/// Average cost of a `(γ, y)` plan computed from the per-policy cost
/// formulas; `None` if any storage constraint is violated.
fn plan_cost<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    gamma: T,
    y: T,
) -> Option<(T, T)> {
    let policy = infinite_policy(demand, g.a, gamma, T::zero()).ok()?;
    if policy.e1 <= T::zero() {
        return None;
    }
    let capacity = policy.depth_of_discharge() / y;
    let slack = T::one() + T::lit(LIFESPAN_SLACK);
    if policy.depth_of_discharge() > capacity * slack || policy.u1 > tech.max_rate(capacity) * slack
    {
        return None;
    }
    if lifespan(&policy, capacity, tech).ok()? > tech.t_ls_max * slack {
        return None;
    }
    let j = avg_generation_cost(demand, g, policy.u1)
        + avg_storage_cost(&policy, capacity, tech).ok()?;
    Some((j, capacity))
}

fn cmp_candidates<T: Scalar>(x: &(T, usize, usize), y: &(T, usize, usize)) -> Ordering {
    x.0.partial_cmp(&y.0)
        .unwrap_or(Ordering::Equal)
        .then(x.1.cmp(&y.1))
        .then(x.2.cmp(&y.2))
}

/// Exhaustive search over an `n_y × n_gamma` grid, compared with [`solve`].
///
/// Depths are linear on `[y_lb, min(y_ub, 1)]`, penalties log-spaced on
/// `[1e-9, 1e3]·a·ω0²`; the no-storage point `C = 0` is always a candidate.
/// Grid rows are evaluated in parallel and reduced by value, then by index.
pub fn grid_verify<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    n_y: usize,
    n_gamma: usize,
) -> Result<GridReport<T>> {
    if n_y < 2 || n_gamma < 2 {
        return Err(Error::domain(
            "grid_verify needs at least 2 points per axis",
        ));
    }
    let closed = solve(demand, g, tech)?;
    let b = closed.bounds;
    let ys = linear_grid(b.y_lb, b.y_max, n_y);
    let gammas = gamma_grid(g.a, demand.omega0, n_gamma);

    let best = ys
        .par_iter()
        .enumerate()
        .filter_map(|(i, &y)| {
            gammas
                .iter()
                .enumerate()
                .filter_map(|(j, &gamma)| {
                    plan_cost(demand, g, tech, gamma, y).map(|(c, _)| (c, i, j))
                })
                .min_by(cmp_candidates)
        })
        .min_by(cmp_candidates);

    let baseline = closed.costs.baseline;
    let (best_y, best_gamma, best_capacity, best_objective) = match best {
        Some((j, i, k)) if j < baseline => {
            let (_, cap) =
                plan_cost(demand, g, tech, gammas[k], ys[i]).expect("grid point feasible");
            (Some(ys[i]), Some(gammas[k]), cap, j)
        }
        _ => (None, None, T::zero(), baseline),
    };

    let closed_objective = closed.costs.j_total;
    let y_cell = (b.y_max - b.y_lb) / T::from_count(n_y - 1);
    let y_offset_cells = match (best_y, closed.storage_used) {
        (Some(y), true) if y_cell > T::zero() => (y - closed.y_star).abs() / y_cell,
        (Some(_), true) | (None, false) => T::zero(),
        _ => T::infinity(),
    };
    Ok(GridReport {
        best_y,
        best_gamma,
        best_capacity,
        best_objective,
        closed_objective,
        gap: (best_objective - closed_objective).abs() / closed_objective,
        y_cell,
        y_offset_cells,
        closed,
    })
}

/// Number of local minima of `J` along the depth grid at fixed `γ*` and
/// along the penalty grid at fixed `y*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnimodalityReport {
    pub minima_along_y: usize,
    pub minima_along_gamma: usize,
}

fn count_local_minima<T: Scalar>(values: &[T]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] < values[i - 1];
            let right = i == n - 1 || values[i] < values[i + 1];
            left && right
        })
        .count()
}

/// Audits that `J` is unimodal along both grid axes through the optimum.
pub fn unimodality_audit<T: Scalar>(
    demand: &DemandProfile<T>,
    g: &GenerationCostParams<T>,
    tech: &StorageTech<T>,
    solution: &PlanningSolution<T>,
    n: usize,
) -> Result<UnimodalityReport> {
    let gamma = solution
        .gamma_star
        .finite()
        .ok_or_else(|| Error::domain("unimodality audit needs a finite optimal penalty"))?;
    let b = solution.bounds;
    let along_y: Vec<T> = linear_grid(b.y_lb, b.y_max, n)
        .into_iter()
        .filter_map(|y| plan_cost(demand, g, tech, gamma, y).map(|(j, _)| j))
        .collect();
    let along_gamma: Vec<T> = gamma_grid(g.a, demand.omega0, n)
        .into_iter()
        .filter_map(|gm| plan_cost(demand, g, tech, gm, solution.y_star).map(|(j, _)| j))
        .collect();
    Ok(UnimodalityReport {
        minima_along_y: count_local_minima(&along_y),
        minima_along_gamma: count_local_minima(&along_gamma),
    })
}
