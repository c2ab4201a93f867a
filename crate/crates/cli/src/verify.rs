use std::io::Write;

use serde::{Deserialize, Serialize};
use storage_arb::degradation::{
    check_assumption1, cost_per_depth_slope, phi, phi_inverse, rainflow, ASSUMPTION_GRID,
};
use storage_arb::operational::{finite_solution, infinite_policy};
use storage_arb::oracle::{compare, perturbation_audit, sample_closed_form, solve_qp, Analytic};
use storage_arb::planning::{grid_verify, solve, unimodality_audit, LIFESPAN_SLACK};
use storage_arb::{
    DegradationCurve, DemandProfile, DiscreteProblem, GenerationCostParams, PlanningSolution,
    StorageTech, Trajectory,
};

use crate::config::RunConfig;

const ORACLE_PERIODS: f64 = 10.0;
const GRID_POINTS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub note: Option<String>,
}

impl Check {
    fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured: Some(measured),
            threshold: Some(threshold),
            note: None,
        }
    }

    fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            passed: (lo..=hi).contains(&measured),
            note: Some(format!("expected within [{lo}, {hi}]")),
            ..Self::at_most(name, measured, hi)
        }
    }

    fn flag(name: &str, passed: bool, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            measured: None,
            threshold: None,
            note: Some(note.into()),
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self::flag(name, false, err.to_string())
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub dt: f64,
    pub all_passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn write_table(&self, out: &mut impl Write) -> std::io::Result<()> {
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let measured = c
                .measured
                .map_or(String::new(), |m| format!(" measured={m:.3e}"));
            let threshold = c
                .threshold
                .map_or(String::new(), |t| format!(" threshold={t:.3e}"));
            let note = c
                .note
                .as_deref()
                .map_or(String::new(), |n| format!(" ({n})"));
            writeln!(out, "[{status}] {}{measured}{threshold}{note}", c.name)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        writeln!(out, "{passed}/{} checks passed", self.checks.len())
    }
}

struct Instance {
    demand: DemandProfile,
    g: GenerationCostParams,
    tech: StorageTech,
}

pub fn run(config: &RunConfig, seed: u64, dt: f64) -> anyhow::Result<VerifyReport> {
    if !(dt > 0.0) || !dt.is_finite() {
        anyhow::bail!("dt must be positive (got {dt})");
    }
    // The curve is left unchecked here so that a convexity failure shows up
    // as a failed check rather than an input error.
    let curve = DegradationCurve::unchecked(config.k1, config.k2, config.k3)?;
    let inst = Instance {
        demand: config.demand()?,
        g: config.generation()?,
        tech: config.tech_with(curve)?,
    };

    let mut checks = Vec::new();
    degradation_checks(&inst.tech.curve, &mut checks);
    let plan = solve(&inst.demand, &inst.g, &inst.tech);
    match &plan {
        Ok(s) => planning_checks(&inst, s, &mut checks),
        Err(e) => checks.push(Check::failed("planning_solve", e)),
    }
    let plan = plan.ok();
    if let Some(s) = plan.as_ref().filter(|s| s.storage_used) {
        rainflow_check(s, &mut checks);
    }
    oracle_checks(&inst, plan.as_ref(), seed, dt, &mut checks);

    Ok(VerifyReport {
        seed,
        dt,
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn degradation_checks(curve: &DegradationCurve, checks: &mut Vec<Check>) {
    let convex = check_assumption1(curve, ASSUMPTION_GRID);
    checks.push(Check::flag(
        "assumption1_convexity",
        convex,
        if convex {
            "Phi(y)/y strictly convex and Phi increasing on (0, 1]".to_string()
        } else {
            storage_arb::Error::AssumptionViolated(format!(
                "curve k1={}, k2={}, k3={} fails the convexity check",
                curve.k1, curve.k2, curve.k3
            ))
            .to_string()
        },
    ));
    let mut worst = 0.0f64;
    for i in 1..=100 {
        let y = i as f64 / 100.0;
        match phi(curve, y).and_then(|l| phi_inverse(curve, l)) {
            Ok(back) => worst = worst.max((back - y).abs() / y),
            Err(e) => {
                checks.push(Check::failed("phi_round_trip", e));
                return;
            }
        }
    }
    checks.push(Check::at_most("phi_round_trip", worst, 1e-9));
}

fn planning_checks(inst: &Instance, s: &PlanningSolution, checks: &mut Vec<Check>) {
    let slope = cost_per_depth_slope(&inst.tech.curve, s.y_stationary).abs();
    let interior = s.y_stationary > 1e-9 && s.y_stationary < 1.0;
    let scale = cost_per_depth_slope(&inst.tech.curve, 0.5)
        .abs()
        .max(1e-300);
    checks.push(
        Check::at_most(
            "stationary_depth_slope",
            if interior { slope / scale } else { 0.0 },
            1e-6,
        )
        .with_note(format!("y_s = {:.9}", s.y_stationary)),
    );
    if s.storage_used {
        checks.push(
            Check::at_most(
                "lifespan_within_cap",
                s.lifespan_hours / inst.tech.t_ls_max - 1.0,
                LIFESPAN_SLACK,
            )
            .with_note(format!("binding = {}", s.binding)),
        );
    }
    match grid_verify(&inst.demand, &inst.g, &inst.tech, GRID_POINTS, GRID_POINTS) {
        Ok(r) => {
            checks.push(Check::at_most("grid_objective_gap", r.gap, 1e-3));
            checks.push(Check::at_most(
                "grid_depth_offset_cells",
                r.y_offset_cells,
                1.0,
            ));
        }
        Err(e) => checks.push(Check::failed("grid_verify", e)),
    }
    if s.storage_used {
        match unimodality_audit(&inst.demand, &inst.g, &inst.tech, s, GRID_POINTS) {
            Ok(r) => checks.push(Check::flag(
                "objective_unimodal",
                r.minima_along_y == 1 && r.minima_along_gamma == 1,
                format!(
                    "{} minima along y, {} along gamma",
                    r.minima_along_y, r.minima_along_gamma
                ),
            )),
            Err(e) => checks.push(Check::failed("objective_unimodal", e)),
        }
    }
}

fn rainflow_check(s: &PlanningSolution, checks: &mut Vec<Check>) {
    let policy = match s.policy {
        Some(p) => p,
        None => return,
    };
    let per_period = 1000;
    let periods = 10;
    let dt = std::f64::consts::TAU / policy.omega0 / per_period as f64;
    let result = Trajectory::sample(0.0, dt, periods * per_period + 1, |t| policy.energy(t))
        .and_then(|e| rainflow(&e, s.c_star));
    match result {
        Ok(cycles) => {
            let count_err = (cycles.total_weight() - periods as f64).abs();
            let depth_err = cycles
                .cycles
                .iter()
                .map(|c| (c.depth - s.y_star).abs())
                .fold(0.0, f64::max);
            checks.push(Check::at_most("rainflow_cycle_count", count_err, 1e-9));
            checks.push(Check::at_most("rainflow_cycle_depth", depth_err, 1e-6));
        }
        Err(e) => checks.push(Check::failed("rainflow", e)),
    }
}

/// Horizon over which the boundary layers shrink below `1e-4` of the
/// periodic part across the central half.
fn long_horizon(inst: &Instance, gamma: f64) -> f64 {
    let d = &inst.demand;
    let theta = (gamma / inst.g.a).sqrt();
    let w = d.omega0;
    let u1 = d.d1 * w * w / (theta * theta + w * w);
    let e1 = u1 / w;
    let layer = inst.g.beta(d.d0) / inst.g.a + d.d1;
    let ratio = (layer / u1).max(layer / (theta * e1));
    let decay = (ratio * 1e4).ln() / theta;
    let period = d.period();
    let periods = (4.0 * decay / period).ceil().max(ORACLE_PERIODS);
    periods * period
}

fn oracle_checks(
    inst: &Instance,
    plan: Option<&PlanningSolution>,
    seed: u64,
    dt: f64,
    checks: &mut Vec<Check>,
) {
    let d = &inst.demand;
    let (gamma, e0, source) = match plan.and_then(|s| s.gamma_star.finite().map(|g| (g, s.c_star)))
    {
        Some((g, c)) => (g, c / 2.0, "optimal penalty"),
        None => (
            inst.g.a * d.omega0 * d.omega0,
            0.0,
            "reference penalty a*omega0^2",
        ),
    };
    let horizon = ORACLE_PERIODS * d.period();
    let steps = ((horizon / dt).round() as usize).max(2);
    let problem = match DiscreteProblem::from_profile(d, &inst.g, gamma, e0, 0.0, horizon, steps) {
        Ok(p) => p,
        Err(e) => return checks.push(Check::failed("oracle_setup", e)),
    };
    if let Some(hint) = problem.refinement_hint(d.omega0) {
        return checks.push(Check::failed("oracle_resolution", hint));
    }
    checks.push(
        Check::at_most("oracle_resolution", problem.dt * problem.theta(), 0.1)
            .with_note(format!("gamma = {gamma:.6e} ({source})")),
    );
    if let Err(e) = oracle_against_closed_forms(inst, &problem, seed, checks) {
        checks.push(Check::failed("oracle", e));
    }
}

fn oracle_against_closed_forms(
    inst: &Instance,
    p: &DiscreteProblem,
    seed: u64,
    checks: &mut Vec<Check>,
) -> storage_arb::Result<()> {
    let d = &inst.demand;
    let sol = solve_qp(p)?;
    let finite = Analytic::Finite(finite_solution(d, &inst.g, p.gamma, p.e0, p.t0, p.tf)?);

    let balance = (0..sol.u.len())
        .map(|k| {
            let r = sol.e.values[k + 1] - sol.e.values[k] - sol.u.values[k] * p.dt;
            r.abs() / sol.e.values[k + 1].abs().max(1.0)
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("oracle_energy_balance", balance, 1e-12));

    let coarse = compare(&finite, &sol.u, &sol.e, 1.0)?.max_sup();
    checks.push(Check::at_most("finite_horizon_sup_error", coarse, 1e-2));

    let fine_problem =
        DiscreteProblem::from_profile(d, &inst.g, p.gamma, p.e0, p.t0, p.tf, 2 * p.n_steps)?;
    let fine_sol = solve_qp(&fine_problem)?;
    let fine = compare(&finite, &fine_sol.u, &fine_sol.e, 1.0)?.max_sup();
    if fine < 1e-9 {
        checks.push(Check::flag(
            "finite_horizon_convergence_ratio",
            true,
            format!("error {fine:.2e} at the floating-point floor"),
        ));
    } else {
        checks.push(Check::within(
            "finite_horizon_convergence_ratio",
            coarse / fine,
            3.5,
            4.5,
        ));
    }

    let beta_over_a = inst.g.beta(d.d0) / inst.g.a;
    let theta = p.theta();
    let bound = 2.0 * p.dt * (theta * (beta_over_a + d.d1) + d.d1 * d.omega0);
    let start = (sol.u.values[0] + beta_over_a + d.fluctuation(p.t0)).abs();
    let end = (sol.u.values[sol.u.len() - 1] + beta_over_a + d.fluctuation(p.tf)).abs();
    checks.push(Check::at_most("transversality_start", start, bound));
    checks.push(Check::at_most("transversality_end", end, bound));

    let worst = perturbation_audit(p, &sol.u, sol.e.values[0], 1000, 1e-3, seed)?;
    checks.push(Check::at_most(
        "perturbation_audit",
        worst / sol.objective.abs(),
        1e-9,
    ));

    let sampled = sample_closed_form(p, &finite)?;
    checks.push(Check::at_most(
        "discrete_optimum_below_closed_form",
        (sol.objective - sampled.objective) / sampled.objective.abs(),
        1e-12,
    ));

    let horizon = long_horizon(inst, p.gamma);
    let steps = (horizon / p.dt).round() as usize;
    let long = DiscreteProblem::from_profile(d, &inst.g, p.gamma, p.e0, 0.0, horizon, steps)?;
    let long_sol = solve_qp(&long)?;
    let policy = Analytic::Policy(infinite_policy(d, inst.g.a, p.gamma, p.e0)?);
    let r = compare(&policy, &long_sol.u, &long_sol.e, 0.5)?;
    checks.push(
        Check::at_most("periodic_interior_sup_error", r.max_sup(), 1e-3)
            .with_note(format!("{:.1} h horizon, central 50% window", horizon)),
    );
    Ok(())
}
