//! Cycle-depth stress function, its inverse and stationary point, the
//! convexity check on `Φ(y)/y`, and rainflow cycle extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DegradationCurve, Trajectory};
use crate::scalar::Scalar;

/// Grid size used when a curve is validated at construction.
pub const ASSUMPTION_GRID: usize = 200;

/// Smallest depth considered by the stationary-point search.
pub const DEPTH_FLOOR: f64 = 1e-12;

const MAX_BISECTIONS: usize = 4000;

/// One rainflow cycle: normalized depth and multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle<T> {
    /// Depth as a fraction of capacity, in `(0, 1]`.
    pub depth: T,
    /// 1.0 for a full cycle, 0.5 for a residual half cycle.
    pub weight: T,
}

/// Cycles extracted from an energy trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleSet<T> {
    pub cycles: Vec<Cycle<T>>,
}

impl<T: Scalar> CycleSet<T> {
    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    /// Equivalent number of full cycles.
    pub fn total_weight(&self) -> T {
        self.cycles.iter().map(|c| c.weight).sum()
    }

    /// `Σ weight · depth`.
    pub fn weighted_depth(&self) -> T {
        self.cycles.iter().map(|c| c.weight * c.depth).sum()
    }

    pub fn full_cycles(&self) -> impl Iterator<Item = &Cycle<T>> {
        self.cycles.iter().filter(|c| c.weight == T::one())
    }
}

/// Life fraction lost by one cycle of normalized depth `y`.
pub fn phi<T: Scalar>(curve: &DegradationCurve<T>, y: T) -> Result<T> {
    if !(y > T::zero() && y <= T::one()) {
        return Err(Error::domain(format!(
            "cycle depth must lie in (0, 1] (got {y})"
        )));
    }
    let den = curve.denominator(y);
    if !(den > T::zero()) || !den.is_finite() {
        return Err(Error::domain(format!(
            "Φ denominator k1·y^k2 + k3 = {den} is not positive at y = {y}"
        )));
    }
    Ok(den.recip())
}

/// Inverse of [`phi`] on `(0, 1]`.
///
/// Bisection on the monotone curve, geometric while the bracket spans more
/// than a factor of two so that vanishing losses resolve to tiny depths with
/// full relative precision.
pub fn phi_inverse<T: Scalar>(curve: &DegradationCurve<T>, loss: T) -> Result<T> {
    let full = phi(curve, T::one())?;
    if !(loss > T::zero()) || !loss.is_finite() {
        return Err(Error::domain(format!("loss must be positive (got {loss})")));
    }
    if loss > full * (T::one() + T::epsilon() * T::lit(4.0)) {
        return Err(Error::domain(format!(
            "loss {loss} exceeds Φ(1) = {full}; no depth in (0, 1] produces it"
        )));
    }
    if loss >= full {
        return Ok(T::one());
    }

    // Walk down until Φ drops below the target.
    let below = |y: T| match phi(curve, y) {
        Ok(v) => v < loss,
        // non-positive denominator: Φ undefined, treat as below the range
        Err(_) => true,
    };
    let mut hi = T::one();
    let mut lo = T::lit(0.5);
    while !below(lo) {
        hi = lo;
        lo = lo / T::lit(2.0);
        if lo < T::min_positive_value() {
            return Err(Error::domain(format!(
                "loss {loss} lies below the range of Φ on (0, 1]"
            )));
        }
    }

    let two = T::lit(2.0);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= two * T::epsilon() * hi {
            break;
        }
        let mid = if hi > two * lo {
            (lo * hi).sqrt()
        } else {
            lo + (hi - lo) / two
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick the bracket end whose Φ is closer to the target.
    let err = |y: T| {
        phi(curve, y)
            .map(|v| (v - loss).abs())
            .unwrap_or(T::infinity())
    };
    Ok(if err(lo) < err(hi) { lo } else { hi })
}

/// `d/dy [Φ(y)/y]` evaluated analytically: `-(y/Φ)' / (y/Φ)²`.
pub fn cost_per_depth_slope<T: Scalar>(curve: &DegradationCurve<T>, y: T) -> T {
    let g = curve.depth_per_loss(y);
    -curve.depth_per_loss_slope(y) / (g * g)
}

/// Depth minimizing `Φ(y)/y` on `(0, 1]`.
///
/// Fails with [`Error::AssumptionViolated`] when `Φ(y)/y` is not strongly
/// convex on the check grid.
pub fn stationary_depth<T: Scalar>(curve: &DegradationCurve<T>) -> Result<T> {
    if !check_assumption1(curve, ASSUMPTION_GRID) {
        return Err(Error::AssumptionViolated(format!(
            "(Φ(y)/y)'' is not positive on (0, 1] for k = ({}, {}, {})",
            curve.k1, curve.k2, curve.k3
        )));
    }
    Ok(locate_stationary_depth(curve))
}

/// Root of `(Φ(y)/y)' = 0` without the convexity precondition.
///
/// Without an interior sign change the minimizing boundary is returned: `1`
/// when `Φ(y)/y` decreases throughout, [`DEPTH_FLOOR`] when it increases.
pub fn locate_stationary_depth<T: Scalar>(curve: &DegradationCurve<T>) -> T {
    let slope = |y: T| cost_per_depth_slope(curve, y);
    let floor = T::lit(DEPTH_FLOOR).max(T::min_positive_value());
    let mut lo = floor;
    let mut hi = T::one();
    if slope(hi) <= T::zero() {
        return hi;
    }
    if slope(lo) >= T::zero() {
        return lo;
    }
    let two = T::lit(2.0);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= two * T::epsilon() * hi {
            break;
        }
        let mid = if hi > two * lo {
            (lo * hi).sqrt()
        } else {
            lo + (hi - lo) / two
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if slope(lo).abs() < slope(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Numerical audit that `Φ` is positive and increasing and that `Φ(y)/y`
/// has a positive second derivative on a log grid over `[1e-3, 1]`.
///
/// Central differences with `h = 1e-4` in double precision; a second
/// difference only counts as positive when it clears the rounding floor.
pub fn check_assumption1<T: Scalar>(curve: &DegradationCurve<T>, n_grid: usize) -> bool {
    let n = n_grid.max(10);
    let (k1, k2, k3) = (curve.k1.as_f64(), curve.k2.as_f64(), curve.k3.as_f64());
    let den = |y: f64| k1 * y.powf(k2) + k3;
    let ratio = |y: f64| 1.0 / (den(y) * y);
    let h = 1e-4;
    let (lo, hi) = (1e-3f64, 1.0f64);

    let mut previous_phi = 0.0;
    for i in 0..n {
        let y = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let y = if i == n - 1 { hi } else { y };
        for probe in [y - h, y, y + h] {
            let d = den(probe);
            if !(d > 0.0 && d.is_finite()) {
                return false;
            }
        }
        let phi_y = 1.0 / den(y);
        if i > 0 && phi_y <= previous_phi {
            return false;
        }
        previous_phi = phi_y;

        let (fm, f0, fp) = (ratio(y - h), ratio(y), ratio(y + h));
        let second = (fp - 2.0 * f0 + fm) / (h * h);
        let noise = 16.0 * f64::EPSILON * (fm.abs() + 2.0 * f0.abs() + fp.abs()) / (h * h);
        if !(second > noise) {
            return false;
        }
    }
    true
}

/// Values at strict turning points; plateaus collapse to one sample.
fn turning_points<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut dedup: Vec<T> = Vec::with_capacity(values.len());
    for &v in values {
        if dedup.last() != Some(&v) {
            dedup.push(v);
        }
    }
    if dedup.len() < 3 {
        return dedup;
    }
    let mut points = vec![dedup[0]];
    for w in dedup.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        if (b - a) * (c - b) < T::zero() {
            points.push(b);
        }
    }
    points.push(dedup[dedup.len() - 1]);
    points
}

/// Four-point rainflow count on the turning points of `e`; depths are
/// normalized by `capacity` and unclosed residual ranges count as half
/// cycles.
pub fn rainflow<T: Scalar>(e: &Trajectory<T>, capacity: T) -> Result<CycleSet<T>> {
    if !(capacity > T::zero()) || !capacity.is_finite() {
        return Err(Error::domain(format!(
            "capacity must be positive (got {capacity})"
        )));
    }
    let slack = capacity * T::epsilon() * T::lit(4.0);
    if let Some((k, &v)) = e
        .values
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v >= -slack && v <= capacity + slack))
    {
        return Err(Error::domain(format!(
            "energy sample {k} = {v} lies outside [0, {capacity}]"
        )));
    }

    let mut cycles = Vec::new();
    let mut stack: Vec<T> = Vec::new();
    let push = |cycles: &mut Vec<Cycle<T>>, range: T, weight: T| {
        if range > T::zero() {
            cycles.push(Cycle {
                depth: (range / capacity).min(T::one()),
                weight,
            });
        }
    };

    for point in turning_points(&e.values) {
        stack.push(point);
        while stack.len() >= 4 {
            let n = stack.len();
            let (a, b, c, d) = (stack[n - 4], stack[n - 3], stack[n - 2], stack[n - 1]);
            let inner = (b - c).abs();
            if inner <= (a - b).abs() && inner <= (c - d).abs() {
                push(&mut cycles, inner, T::one());
                stack.drain(n - 3..n - 1);
            } else {
                break;
            }
        }
    }
    let half = T::lit(0.5);
    for w in stack.windows(2) {
        push(&mut cycles, (w[1] - w[0]).abs(), half);
    }
    Ok(CycleSet { cycles })
}

/// Degradation cost `Σ weight · Φ(depth) · C · ρ` (USD).
pub fn storage_cost<T: Scalar>(
    cycles: &CycleSet<T>,
    capacity: T,
    rho: T,
    curve: &DegradationCurve<T>,
) -> Result<T> {
    if !(capacity > T::zero()) {
        return Err(Error::domain(format!(
            "capacity must be positive (got {capacity})"
        )));
    }
    let mut lost = T::zero();
    for c in &cycles.cycles {
        lost = lost + c.weight * phi(curve, c.depth)?;
    }
    Ok(lost * capacity * rho)
}
