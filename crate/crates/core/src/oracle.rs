//! Discretized auxiliary problem solved exactly, for checking the closed
//! forms.
//!
//! The unknowns are the stored energies `e_0..e_n` on a uniform grid; the
//! charge rates are their forward differences `u_k = (e_{k+1} - e_k)/dt`,
//! so the energy balance holds by construction. Generation cost is charged
//! at the step midpoints and the quadratic penalty with trapezoidal weights,
//! which makes the transcription second-order accurate. Stationarity in the
//! `e_j` gives a symmetric positive-definite tridiagonal system; leaving
//! `e_0` and `e_n` free reproduces the transversality conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    generation_cost_rate, net_supply, DemandProfile, GenerationCostParams, Trajectory,
};
use crate::operational::{ClosedForm, FiniteHorizonSolution, SinusoidalPolicy};
use crate::scalar::Scalar;

/// Fewest steps per demand period for a meaningful comparison.
pub const MIN_STEPS_PER_PERIOD: usize = 16;
/// Largest `dt · θ` for which the boundary layers are resolved.
pub const MAX_DT_THETA: f64 = 0.1;

/// Auxiliary problem on `[t0, tf]` split into `n_steps` equal steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteProblem<T> {
    pub t0: T,
    pub tf: T,
    pub n_steps: usize,
    pub dt: T,
    /// Demand at the step midpoints `t0 + (k + 1/2) dt` (MW).
    pub demand: Vec<T>,
    pub a: T,
    pub b: T,
    pub gamma: T,
    pub e0: T,
}

impl<T: Scalar> DiscreteProblem<T> {
    /// Problem with explicit per-step demand samples.
    pub fn from_samples(
        t0: T,
        tf: T,
        demand: Vec<T>,
        g: &GenerationCostParams<T>,
        gamma: T,
        e0: T,
    ) -> Result<Self> {
        let n_steps = demand.len();
        if n_steps < 2 {
            return Err(Error::domain(format!(
                "need at least 2 steps (got {n_steps})"
            )));
        }
        if !(tf > t0) || !(tf - t0).is_finite() {
            return Err(Error::domain(format!(
                "horizon must satisfy tf > t0 (got [{t0}, {tf}])"
            )));
        }
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::domain(format!(
                "gamma must be finite and > 0 (got {gamma})"
            )));
        }
        if demand.iter().any(|d| !d.is_finite()) || !e0.is_finite() {
            return Err(Error::domain("demand samples and e0 must be finite"));
        }
        Ok(Self {
            t0,
            tf,
            n_steps,
            dt: (tf - t0) / T::from_count(n_steps),
            demand,
            a: g.a,
            b: g.b,
            gamma,
            e0,
        })
    }

    /// Problem with a sinusoidal demand sampled at the step midpoints.
    pub fn from_profile(
        demand: &DemandProfile<T>,
        g: &GenerationCostParams<T>,
        gamma: T,
        e0: T,
        t0: T,
        tf: T,
        n_steps: usize,
    ) -> Result<Self> {
        let dt = (tf - t0) / T::from_count(n_steps.max(1));
        let half = dt / T::lit(2.0);
        let samples = (0..n_steps)
            .map(|k| demand.at(t0 + dt * T::from_count(k) + half))
            .collect();
        Self::from_samples(t0, tf, samples, g, gamma, e0)
    }

    pub fn theta(&self) -> T {
        (self.gamma / self.a).sqrt()
    }

    /// Midpoint time of step `k`.
    pub fn midpoint(&self, k: usize) -> T {
        self.t0 + self.dt * (T::from_count(k) + T::lit(0.5))
    }

    /// Smallest step count meeting both resolution requirements for demand
    /// of frequency `omega0`.
    pub fn required_steps(&self, omega0: T) -> usize {
        let horizon = (self.tf - self.t0).as_f64();
        let per_period =
            horizon * omega0.as_f64() / std::f64::consts::TAU * MIN_STEPS_PER_PERIOD as f64;
        let per_layer = horizon * self.theta().as_f64() / MAX_DT_THETA;
        per_period.max(per_layer).ceil() as usize
    }

    /// Describes how to refine the grid if it is too coarse for demand of
    /// frequency `omega0`.
    pub fn refinement_hint(&self, omega0: T) -> Option<String> {
        let steps_per_period = T::TAU() / (omega0 * self.dt);
        let dt_theta = self.dt * self.theta();
        let coarse_period = steps_per_period < T::from_count(MIN_STEPS_PER_PERIOD);
        let coarse_layer = dt_theta > T::lit(MAX_DT_THETA);
        if !coarse_period && !coarse_layer {
            return None;
        }
        Some(format!(
            "grid too coarse (dt = {}, dt*theta = {:.3e}, {:.1} steps per period); use n_steps >= {}",
            self.dt,
            dt_theta.as_f64(),
            steps_per_period.as_f64(),
            self.required_steps(omega0)
        ))
    }

    /// Trapezoidal weight of node `j`.
    fn weight(&self, j: usize) -> T {
        if j == 0 || j == self.n_steps {
            self.dt / T::lit(2.0)
        } else {
            self.dt
        }
    }
}

/// Exact minimizer of a [`DiscreteProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution<T> {
    /// Charge rates at the step midpoints.
    pub u: Trajectory<T>,
    /// Stored energy at the grid nodes `t0 + j dt`, `j = 0..=n_steps`.
    pub e: Trajectory<T>,
    /// Total cost over the horizon (USD).
    pub objective: T,
}

/// Energies reached from `e_init` under `u`, by forward accumulation.
fn accumulate<T: Scalar>(e_init: T, u: &[T], dt: T) -> Vec<T> {
    let mut e = Vec::with_capacity(u.len() + 1);
    let mut level = e_init;
    e.push(level);
    for &rate in u {
        level = level + rate * dt;
        e.push(level);
    }
    e
}

/// Discrete cost of the control `u` started from `e_init`.
pub fn objective<T: Scalar>(p: &DiscreteProblem<T>, e_init: T, u: &[T]) -> Result<T> {
    if u.len() != p.n_steps {
        return Err(Error::GridMismatch(format!(
            "control has {} samples, problem has {} steps",
            u.len(),
            p.n_steps
        )));
    }
    let g = GenerationCostParams { a: p.a, b: p.b };
    let generation: T = p
        .demand
        .iter()
        .zip(u)
        .map(|(&d, &rate)| generation_cost_rate(net_supply(d, rate), &g))
        .sum();
    let half_gamma = p.gamma / T::lit(2.0);
    let penalty: T = accumulate(e_init, u, p.dt)
        .into_iter()
        .enumerate()
        .map(|(j, e)| p.weight(j) * half_gamma * (e - p.e0) * (e - p.e0))
        .sum();
    Ok(generation * p.dt + penalty)
}

/// Solves the stationarity system by tridiagonal elimination.
pub fn solve_qp<T: Scalar>(p: &DiscreteProblem<T>) -> Result<QpSolution<T>> {
    let n = p.n_steps;
    let c = p.a / p.dt;
    let two = T::lit(2.0);

    // Unknowns are deviations x_j = e_j - e0.
    let mut diag = Vec::with_capacity(n + 1);
    let mut rhs = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let coupling = if j == 0 || j == n { c } else { two * c };
        diag.push(coupling + p.gamma * p.weight(j));
        let r = match j {
            0 => p.a * p.demand[0] + p.b,
            j if j == n => -(p.a * p.demand[n - 1] + p.b),
            j => p.a * (p.demand[j] - p.demand[j - 1]),
        };
        rhs.push(r);
    }

    for j in 0..=n {
        if j > 0 {
            let factor = c / diag[j - 1];
            diag[j] = diag[j] - factor * c;
            rhs[j] = rhs[j] + factor * rhs[j - 1];
        }
        if !(diag[j] > T::zero()) || !diag[j].is_finite() {
            return Err(Error::SingularSystem { row: j });
        }
    }
    let mut x = vec![T::zero(); n + 1];
    x[n] = rhs[n] / diag[n];
    for j in (0..n).rev() {
        x[j] = (rhs[j] + c * x[j + 1]) / diag[j];
    }

    let rates: Vec<T> = x.windows(2).map(|w| (w[1] - w[0]) / p.dt).collect();
    let e_init = p.e0 + x[0];
    let objective = objective(p, e_init, &rates)?;
    let energies = accumulate(e_init, &rates, p.dt);
    Ok(QpSolution {
        u: Trajectory::new(p.midpoint(0), p.dt, rates)?,
        e: Trajectory::new(p.t0, p.dt, energies)?,
        objective,
    })
}

/// Samples a closed form on the problem's grid: `u` at the midpoints, `e`
/// accumulated from the closed-form energy at `t0`.
pub fn sample_closed_form<T: Scalar>(
    p: &DiscreteProblem<T>,
    analytic: &Analytic<T>,
) -> Result<QpSolution<T>> {
    let rates: Vec<T> = (0..p.n_steps)
        .map(|k| analytic.control(p.midpoint(k)))
        .collect();
    let e_init = analytic.energy(p.t0);
    let objective = objective(p, e_init, &rates)?;
    let energies = accumulate(e_init, &rates, p.dt);
    Ok(QpSolution {
        u: Trajectory::new(p.midpoint(0), p.dt, rates)?,
        e: Trajectory::new(p.t0, p.dt, energies)?,
        objective,
    })
}

/// Largest cost decrease found by randomly perturbing `u_star`.
///
/// Odd trials move a single random sample, even trials move every sample;
/// each moved sample shifts by up to `magnitude` times its own size (or the
/// largest `|u|` if it is zero). The starting energy is kept. A positive
/// result above rounding means `u_star` is not optimal.
pub fn perturbation_audit<T: Scalar>(
    p: &DiscreteProblem<T>,
    u_star: &Trajectory<T>,
    e_init: T,
    n_trials: usize,
    magnitude: T,
    seed: u64,
) -> Result<T> {
    let base = objective(p, e_init, &u_star.values)?;
    let scale = u_star.values.iter().fold(T::zero(), |m, u| m.max(u.abs()));
    let size = |u: T| if u == T::zero() { scale } else { u.abs() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::lit(f64::NEG_INFINITY);
    let mut trial = u_star.values.clone();
    for i in 0..n_trials {
        trial.copy_from_slice(&u_star.values);
        if i % 2 == 1 {
            let k = rng.gen_range(0..trial.len());
            let sign = if rng.gen::<bool>() {
                T::one()
            } else {
                -T::one()
            };
            trial[k] = trial[k] + sign * magnitude * size(trial[k]);
        } else {
            for u in trial.iter_mut() {
                let r = T::lit(rng.gen_range(-1.0..=1.0));
                *u = *u + r * magnitude * size(*u);
            }
        }
        worst = worst.max(base - objective(p, e_init, &trial)?);
    }
    Ok(if n_trials == 0 { T::zero() } else { worst })
}

/// Closed form to compare the oracle against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analytic<T> {
    Finite(FiniteHorizonSolution<T>),
    Policy(SinusoidalPolicy<T>),
}

impl<T: Scalar> Analytic<T> {
    pub fn control(&self, t: T) -> T {
        match self {
            Analytic::Finite(s) => s.control(t),
            Analytic::Policy(s) => s.control(t),
        }
    }

    pub fn energy_deviation(&self, t: T) -> T {
        match self {
            Analytic::Finite(s) => s.energy_deviation(t),
            Analytic::Policy(s) => s.energy_deviation(t),
        }
    }

    pub fn energy(&self, t: T) -> T {
        self.reference() + self.energy_deviation(t)
    }

    fn reference(&self) -> T {
        match self {
            Analytic::Finite(s) => s.e0,
            Analytic::Policy(s) => s.e0,
        }
    }
}

/// Relative errors of a numeric solution against a closed form.
///
/// Sup errors are normalized by the largest closed-form magnitude over the
/// compared samples, L2 errors by the closed-form L2 norm. Energies are
/// compared as deviations from the closed form's reference level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport<T> {
    pub u_sup: T,
    pub u_l2: T,
    pub e_sup: T,
    pub e_l2: T,
    /// Fraction of the horizon compared.
    pub window: T,
    pub samples: usize,
}

impl<T: Scalar> ErrorReport<T> {
    pub fn max_sup(&self) -> T {
        self.u_sup.max(self.e_sup)
    }
}

#[derive(Default)]
struct Accumulator {
    sup_diff: f64,
    sup_ref: f64,
    sq_diff: f64,
    sq_ref: f64,
    n: usize,
}

impl Accumulator {
    fn add(&mut self, numeric: f64, reference: f64) {
        let d = (numeric - reference).abs();
        self.sup_diff = self.sup_diff.max(d);
        self.sup_ref = self.sup_ref.max(reference.abs());
        self.sq_diff += d * d;
        self.sq_ref += reference * reference;
        self.n += 1;
    }

    fn ratio(diff: f64, reference: f64) -> f64 {
        if reference > 0.0 {
            diff / reference
        } else {
            diff
        }
    }

    fn sup(&self) -> f64 {
        Self::ratio(self.sup_diff, self.sup_ref)
    }

    fn l2(&self) -> f64 {
        Self::ratio(self.sq_diff.sqrt(), self.sq_ref.sqrt())
    }
}

/// Compares `(u, e)` with a closed form over the central `window` fraction
/// of the horizon for a [`SinusoidalPolicy`], or the full horizon for a
/// [`FiniteHorizonSolution`].
pub fn compare<T: Scalar>(
    analytic: &Analytic<T>,
    u: &Trajectory<T>,
    e: &Trajectory<T>,
    window: T,
) -> Result<ErrorReport<T>> {
    if e.len() != u.len() + 1 {
        return Err(Error::GridMismatch(format!(
            "energy has {} samples, expected {} for {} rates",
            e.len(),
            u.len() + 1,
            u.len()
        )));
    }
    if (u.dt - e.dt).abs() > T::lit(1e-12) * e.dt {
        return Err(Error::GridMismatch(format!(
            "dt differs: u {} vs e {}",
            u.dt, e.dt
        )));
    }
    let window = match analytic {
        Analytic::Finite(_) => T::one(),
        Analytic::Policy(_) => window,
    };
    if !(window > T::zero() && window <= T::one()) {
        return Err(Error::domain(format!(
            "window must lie in (0, 1] (got {window})"
        )));
    }
    let (start, end) = (e.t_start, e.end_time());
    let mid = (start + end) / T::lit(2.0);
    let half_width =
        window * (end - start) / T::lit(2.0) * (T::one() + T::epsilon() * T::lit(16.0));
    let inside = |t: T| (t - mid).abs() <= half_width;

    let mut acc_u = Accumulator::default();
    for (t, &value) in u.times().zip(&u.values).filter(|(t, _)| inside(*t)) {
        acc_u.add(value.as_f64(), analytic.control(t).as_f64());
    }
    let reference = analytic.reference();
    let mut acc_e = Accumulator::default();
    for (t, &value) in e.times().zip(&e.values).filter(|(t, _)| inside(*t)) {
        acc_e.add(
            (value - reference).as_f64(),
            analytic.energy_deviation(t).as_f64(),
        );
    }
    if acc_u.n == 0 {
        return Err(Error::GridMismatch("window contains no samples".into()));
    }
    Ok(ErrorReport {
        u_sup: T::lit(acc_u.sup()),
        u_l2: T::lit(acc_u.l2()),
        e_sup: T::lit(acc_e.sup()),
        e_l2: T::lit(acc_e.l2()),
        window,
        samples: acc_u.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operational::{finite_solution, infinite_policy};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn demand() -> DemandProfile<f64> {
        DemandProfile::new(18091.0, 4671.0, 0.26).unwrap()
    }

    fn gen() -> GenerationCostParams<f64> {
        GenerationCostParams::new(0.02, 16.24).unwrap()
    }

    fn periods(n: f64) -> f64 {
        n * std::f64::consts::TAU / 0.26
    }

    fn problem(gamma: f64, horizon: f64, dt: f64) -> DiscreteProblem<f64> {
        let n = (horizon / dt).round() as usize;
        DiscreteProblem::from_profile(&demand(), &gen(), gamma, 1000.0, 0.0, horizon, n).unwrap()
    }

    fn finite_error(gamma: f64, horizon: f64, dt: f64) -> f64 {
        let p = problem(gamma, horizon, dt);
        let s = solve_qp(&p).unwrap();
        let f = finite_solution(&demand(), &gen(), gamma, 1000.0, 0.0, horizon).unwrap();
        compare(&Analytic::Finite(f), &s.u, &s.e, 1.0)
            .unwrap()
            .max_sup()
    }

    #[test]
    fn constant_demand_leaves_interior_idle() {
        let flat = DemandProfile::new(18091.0, 0.0, 0.26).unwrap();
        let p =
            DiscreteProblem::from_profile(&flat, &gen(), 1e-2, 500.0, 0.0, 200.0, 4000).unwrap();
        let s = solve_qp(&p).unwrap();
        let k = s.u.len() / 2;
        assert!(s.u.values[k].abs() < 1e-6 * 18091.0);
        assert!((s.e.values[k] - 500.0).abs() < 1e-3);
        // but the free endpoints still draw a boundary layer
        assert!(s.u.values[0].abs() > 1000.0);
    }

    #[test]
    fn endpoint_rates_meet_transversality() {
        let d = demand();
        let beta_over_a = gen().beta(d.d0) / 0.02;
        for dt in [0.02, 0.01] {
            let p = problem(8.6e-5, periods(2.0), dt);
            let s = solve_qp(&p).unwrap();
            let first = s.u.values[0];
            let last = *s.u.values.last().unwrap();
            let start_target = -beta_over_a - d.fluctuation(0.0);
            let end_target = -beta_over_a - d.fluctuation(p.tf);
            let slack = 2.0 * dt * (4671.0 * 0.26 + 1.0);
            assert!(
                (first - start_target).abs() < slack,
                "{first} vs {start_target}"
            );
            assert!((last - end_target).abs() < slack, "{last} vs {end_target}");
        }
    }

    #[test]
    fn energy_balance_is_exact() {
        let p = problem(1e-3, periods(1.0), 0.05);
        let s = solve_qp(&p).unwrap();
        for k in 0..s.u.len() {
            let r = s.e.values[k + 1] - s.e.values[k] - s.u.values[k] * p.dt;
            assert!(r.abs() <= 4.0 * f64::EPSILON * s.e.values[k + 1].abs().max(1.0));
        }
        assert_relative_eq!(
            s.objective,
            objective(&p, s.e.values[0], &s.u.values).unwrap()
        );
    }

    #[test]
    fn second_order_convergence() {
        for gamma in [8.6e-5, 1e-3, 1e-1] {
            let horizon = periods(2.0);
            let errs: Vec<f64> = [0.02, 0.01, 0.005]
                .iter()
                .map(|&dt| finite_error(gamma, horizon, dt))
                .collect();
            assert!(errs[1] < 1e-2, "gamma={gamma} errs={errs:?}");
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!((3.5..=4.5).contains(&ratio), "gamma={gamma} errs={errs:?}");
            }
        }
    }

    #[test]
    fn interior_matches_sinusoid_when_layers_decay() {
        let gamma = 1e-1;
        let p = problem(gamma, periods(10.0), 0.01);
        let s = solve_qp(&p).unwrap();
        let policy = infinite_policy(&demand(), 0.02, gamma, 1000.0).unwrap();
        let r = compare(&Analytic::Policy(policy), &s.u, &s.e, 0.5).unwrap();
        assert!(r.u_sup < 1e-3 && r.e_sup < 1e-3, "{r:?}");
        assert!(r.samples > s.u.len() / 2 - 2 && r.samples < s.u.len() / 2 + 2);
    }

    #[test]
    fn oracle_beats_sampled_closed_form() {
        for gamma in [1e-5, 8.6e-5, 1e-2] {
            let p = problem(gamma, periods(3.0), 0.02);
            let s = solve_qp(&p).unwrap();
            let f = finite_solution(&demand(), &gen(), gamma, 1000.0, 0.0, p.tf).unwrap();
            let sampled = sample_closed_form(&p, &Analytic::Finite(f)).unwrap();
            assert!(s.objective <= sampled.objective * (1.0 + 1e-12));
            let policy = infinite_policy(&demand(), 0.02, gamma, 1000.0).unwrap();
            let sampled = sample_closed_form(&p, &Analytic::Policy(policy)).unwrap();
            assert!(s.objective <= sampled.objective * (1.0 + 1e-12));
        }
    }

    #[test]
    fn perturbations_never_improve_optimum() {
        let p = problem(8.6e-5, periods(2.0), 0.05);
        let s = solve_qp(&p).unwrap();
        let e_init = s.e.values[0];
        let worst = perturbation_audit(&p, &s.u, e_init, 1000, 1e-3, 7).unwrap();
        assert!(worst <= 1e-9 * s.objective, "{worst}");
        assert_eq!(
            perturbation_audit(&p, &s.u, e_init, 100, 0.0, 7).unwrap(),
            0.0
        );
    }

    #[test]
    fn perturbation_audit_detects_suboptimal_control() {
        let p = problem(8.6e-5, periods(1.0), 0.25);
        let s = solve_qp(&p).unwrap();
        let mut shifted = s.u.clone();
        let k = shifted.len() / 3;
        shifted.values[k] *= 1.01;
        let worst = perturbation_audit(&p, &shifted, s.e.values[0], 1000, 1e-3, 11).unwrap();
        assert!(worst > 1e-9 * s.objective, "{worst}");
    }

    #[test]
    fn reversed_demand_reflects_solution() {
        let p = problem(1e-3, periods(1.5), 0.05);
        let s = solve_qp(&p).unwrap();
        let mut reversed = p.clone();
        reversed.demand.reverse();
        let r = solve_qp(&reversed).unwrap();
        assert_relative_eq!(r.objective, s.objective, max_relative = 1e-12);
        let scale = 4671.0;
        for (x, y) in r.u.values.iter().zip(s.u.values.iter().rev()) {
            assert!((x - y).abs() < 1e-8 * scale);
        }
        for (x, y) in r.e.values.iter().zip(s.e.values.iter().rev()) {
            assert!(((x - p.e0) + (y - p.e0)).abs() < 1e-6 * scale);
        }
    }

    #[test]
    fn compare_identical_is_zero() {
        let p = problem(1e-3, periods(1.0), 0.1);
        let f = finite_solution(&demand(), &gen(), 1e-3, 1000.0, 0.0, p.tf).unwrap();
        let analytic = Analytic::Finite(f);
        let u = Trajectory::sample(p.midpoint(0), p.dt, p.n_steps, |t| f.control(t)).unwrap();
        let e = Trajectory::sample(0.0, p.dt, p.n_steps + 1, |t| f.energy(t)).unwrap();
        let r = compare(&analytic, &u, &e, 0.5).unwrap();
        assert_eq!((r.u_sup, r.u_l2, r.e_sup, r.e_l2), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.window, 1.0);
    }

    #[test]
    fn compare_rejects_mismatched_grids() {
        let p = problem(1e-3, periods(1.0), 0.1);
        let s = solve_qp(&p).unwrap();
        let policy = Analytic::Policy(infinite_policy(&demand(), 0.02, 1e-3, 1000.0).unwrap());
        let short = Trajectory::new(0.0, p.dt, s.e.values[1..].to_vec()).unwrap();
        assert!(matches!(
            compare(&policy, &s.u, &short, 0.5),
            Err(Error::GridMismatch(_))
        ));
        let coarse = Trajectory::new(0.0, 2.0 * p.dt, s.e.values.clone()).unwrap();
        assert!(matches!(
            compare(&policy, &s.u, &coarse, 0.5),
            Err(Error::GridMismatch(_))
        ));
        assert!(matches!(
            objective(&p, 0.0, &s.u.values[1..]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn refinement_hint_flags_coarse_grids() {
        let fine = problem(8.6e-5, periods(1.0), 0.01);
        assert!(fine.refinement_hint(0.26).is_none());
        let coarse = problem(10.0, periods(1.0), 0.5);
        let hint = coarse.refinement_hint(0.26).unwrap();
        assert!(hint.contains("n_steps >="), "{hint}");
        let n = coarse.required_steps(0.26);
        let refined =
            DiscreteProblem::from_profile(&demand(), &gen(), 10.0, 1000.0, 0.0, coarse.tf, n)
                .unwrap();
        assert!(refined.refinement_hint(0.26).is_none());
    }

    #[test]
    fn rejects_bad_problems() {
        let g = gen();
        assert!(DiscreteProblem::from_samples(0.0, 1.0, vec![1.0], &g, 1.0, 0.0).is_err());
        assert!(DiscreteProblem::from_samples(1.0, 1.0, vec![1.0; 4], &g, 1.0, 0.0).is_err());
        assert!(DiscreteProblem::from_samples(0.0, 1.0, vec![1.0; 4], &g, 0.0, 0.0).is_err());
        let mut p = DiscreteProblem::from_samples(0.0, 1.0, vec![1.0; 4], &g, 1.0, 0.0).unwrap();
        p.gamma = -1e6;
        assert!(matches!(solve_qp(&p), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn single_precision_solve() {
        let d = DemandProfile::new(18091.0f32, 4671.0, 0.26).unwrap();
        let g = GenerationCostParams::new(0.02f32, 16.24).unwrap();
        let p = DiscreteProblem::from_profile(&d, &g, 1e-1, 0.0, 0.0, 48.0, 960).unwrap();
        let s = solve_qp(&p).unwrap();
        let f = finite_solution(&d, &g, 1e-1, 0.0, 0.0, 48.0).unwrap();
        let r = compare(&Analytic::Finite(f), &s.u, &s.e, 1.0).unwrap();
        assert!(r.u_sup < 1e-2, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn optimum_is_stationary(
            demand in proptest::collection::vec(1000.0f64..30000.0, 8..64),
            gamma in 1e-4f64..1.0,
        ) {
            let n = demand.len() as f64;
            let p = DiscreteProblem::from_samples(0.0, n * 0.25, demand, &gen(), gamma, 50.0).unwrap();
            let s = solve_qp(&p).unwrap();
            let worst = perturbation_audit(&p, &s.u, s.e.values[0], 64, 1e-3, 3).unwrap();
            prop_assert!(worst <= 1e-9 * s.objective.abs().max(1.0));
        }
    }
}
