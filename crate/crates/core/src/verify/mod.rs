//! Scenario harness: pass/fail suites for the properties the model is
//! expected to have, the regularization ladder and manufactured solutions.
//!
//! A [`Scenario`] is a parameter set, an initial-condition recipe and a list
//! of checks against the diagnostics series of the run. Checks that need
//! auxiliary runs (the step-size calibration of the Lyapunov test, the
//! Stokes probe, the energy-identity refinement) perform them from the same
//! initial state.

pub mod ladder;
pub mod mms;
pub mod scenario;

use std::fmt::Write as _;

use crate::diagnostics::{
    fit_decay_rate, make_lyapunov_config, record_state, DiagnosticsSeries, LyapunovFeasibility,
    COLUMNS,
};
use crate::error::{invalid, Result};
use crate::fluid::{energy_identity_residual, PoissonSolver};
use crate::stepper::{cfl_dt, record_context, run, run_with, RunHooks, SimParams, State, StepInfo};

pub use ladder::{epsilon_ladder, LadderReport};
pub use mms::{mms_convergence, ConvergenceReport, MmsCase};
pub use scenario::{builtin, builtin_on, suite, InitialRecipe, DEFAULT_SEED, SCENARIOS};

/// Columns computed from the CSV columns.
pub const VIRTUAL_COLUMNS: [&str; 2] = ["bound_rhs", "l2_dev_sum"];

/// A CSV column, `bound_rhs`, or `l2_dev_sum = l2_n_dev + l2_c_dev`.
pub fn series_column(series: &DiagnosticsSeries, name: &str) -> Option<Vec<f64>> {
    if name == "l2_dev_sum" {
        let n = series.column("l2_n_dev")?;
        let c = series.column("l2_c_dev")?;
        return Some(n.iter().zip(&c).map(|(a, b)| a + b).collect());
    }
    series.column(name)
}

fn known_column(name: &str) -> bool {
    COLUMNS.contains(&name) || VIRTUAL_COLUMNS.contains(&name)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skipped => "SKIP",
        }
    }
}

/// Lower bound on a fitted decay rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateFloor {
    Positive,
    /// `rate >= f * kappa_pred`; skipped when the weights are infeasible.
    KappaFraction(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Assertion {
    /// `max_t |mass_n(t) - mass_n(0)| / mass_n(0) <= max_rel`.
    MassDrift { max_rel: f64 },
    /// `mass_c(t) <= max(mass_n(0), mass_c(0)) + slack` at every record.
    SignalMassBound { slack: f64 },
    /// `max_t |column(t)| <= max`.
    MaxAbs { column: String, max: f64 },
    /// `C_S < 2 sqrt(C_N)`; skipped (by design) otherwise.
    LyapunovFeasible,
    /// Forward differences of the functional stay below `bound_rhs` plus a
    /// step-size tolerance at a fraction of the steps after the transient.
    LyapunovMonotone { min_fraction: f64 },
    /// Exponential fit of a column after the transient.
    DecayRate {
        column: String,
        min_r2: f64,
        floor: RateFloor,
    },
    /// Each sup-norm distance to the steady state ends below `fraction` of
    /// its initial value (of its peak when it starts at 0).
    SteadyDistanceDrop { fraction: f64 },
    /// Decay rate of `|u|^2` within `tolerance` (relative) of the rate of a
    /// linear Stokes run from the same data, extrapolated in `dt`.
    StokesRate { tolerance: f64, window: (f64, f64) },
    /// Mean energy-identity residual over `steps` steps, divided by the same
    /// mean at half the step, lies in `range`.
    EnergyResidualHalving { steps: usize, range: (f64, f64) },
}

impl Assertion {
    pub fn label(&self) -> String {
        match self {
            Assertion::MassDrift { .. } => "mass_drift".into(),
            Assertion::SignalMassBound { .. } => "signal_mass_bound".into(),
            Assertion::MaxAbs { column, .. } => format!("max_abs[{column}]"),
            Assertion::LyapunovFeasible => "lyapunov_feasible".into(),
            Assertion::LyapunovMonotone { .. } => "lyapunov_monotone".into(),
            Assertion::DecayRate { column, .. } => format!("decay_rate[{column}]"),
            Assertion::SteadyDistanceDrop { .. } => "steady_distance_drop".into(),
            Assertion::StokesRate { .. } => "stokes_rate".into(),
            Assertion::EnergyResidualHalving { .. } => "energy_residual_halving".into(),
        }
    }

    /// Series columns the assertion reads.
    pub fn columns(&self) -> Vec<&str> {
        match self {
            Assertion::MassDrift { .. } => vec!["mass_n"],
            Assertion::SignalMassBound { .. } => vec!["mass_n", "mass_c"],
            Assertion::MaxAbs { column, .. } => vec![column.as_str()],
            Assertion::LyapunovFeasible => vec![],
            Assertion::LyapunovMonotone { .. } => vec!["lyapunov", "bound_rhs"],
            Assertion::DecayRate { column, .. } => vec![column.as_str(), "lyapunov"],
            Assertion::SteadyDistanceDrop { .. } => vec!["n_inf_dev", "c_inf_dev", "u_inf"],
            Assertion::StokesRate { .. } => vec!["l2_u"],
            Assertion::EnergyResidualHalving { .. } => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub assertion: Assertion,
    /// Informational checks are reported but never fail a suite.
    pub required: bool,
    pub expected: Outcome,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub params: SimParams,
    pub initial: InitialRecipe,
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for c in &self.checks {
            for col in c.assertion.columns() {
                if !known_column(col) {
                    return Err(invalid(format!(
                        "check {} reads unknown column `{col}`",
                        c.assertion.label()
                    )));
                }
            }
            if matches!(c.assertion, Assertion::LyapunovMonotone { .. })
                && self.params.diagnostics_every != 1
            {
                return Err(invalid(
                    "the Lyapunov check needs a record after every step",
                ));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<State> {
        let mut solver = PoissonSolver::new(&self.params.grid);
        self.initial.build(&self.params.grid, &mut solver)
    }

    /// Overall expectation: failure is never expected, so this is `Pass`
    /// unless every check is expected to be skipped.
    pub fn expected(&self) -> Outcome {
        if self.checks.iter().all(|c| c.expected == Outcome::Skipped) {
            Outcome::Skipped
        } else {
            Outcome::Pass
        }
    }
}

/// Result of one check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub label: String,
    pub outcome: Outcome,
    pub required: bool,
    pub expected: Outcome,
    /// Main measured quantity (NaN when there is none).
    pub measured: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerdictReport {
    pub scenario: String,
    pub verdicts: Vec<Verdict>,
    pub steps: usize,
    pub t_final: f64,
    /// Why the run stopped early, if it did.
    pub error: Option<String>,
}

impl VerdictReport {
    /// True iff some required, non-skipped check failed.
    pub fn failed(&self) -> bool {
        self.verdicts
            .iter()
            .any(|v| v.required && v.outcome == Outcome::Fail)
    }

    /// Every check came out as expected.
    pub fn as_expected(&self) -> bool {
        self.verdicts
            .iter()
            .all(|v| !v.required || v.outcome == v.expected)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "scenario {} (steps={}, t={:.6})\n",
            self.scenario, self.steps, self.t_final
        );
        if let Some(e) = &self.error {
            let _ = writeln!(out, "  run aborted: {e}");
        }
        let width = self
            .verdicts
            .iter()
            .map(|v| v.label.len())
            .max()
            .unwrap_or(0);
        for v in &self.verdicts {
            let tag = if v.required { "" } else { " (info)" };
            let _ = writeln!(
                out,
                "  {:<width$}  {}  measured={:<12.6e} {}{tag}",
                v.label,
                v.outcome.as_str(),
                v.measured,
                v.detail
            );
        }
        out
    }

    pub fn key_values(&self) -> String {
        let mut out = String::new();
        let s = &self.scenario;
        let _ = writeln!(out, "{s}.steps={}", self.steps);
        let _ = writeln!(out, "{s}.t_final={}", self.t_final);
        if let Some(e) = &self.error {
            let _ = writeln!(out, "{s}.error={e}");
        }
        for v in &self.verdicts {
            let _ = writeln!(out, "{s}.{}.outcome={}", v.label, v.outcome.as_str());
            let _ = writeln!(out, "{s}.{}.measured={}", v.label, v.measured);
            let _ = writeln!(out, "{s}.{}.required={}", v.label, v.required);
        }
        out
    }
}

struct Eval {
    outcome: Outcome,
    measured: f64,
    detail: String,
}

fn pass_if(ok: bool, measured: f64, detail: String) -> Eval {
    Eval {
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        measured,
        detail,
    }
}

fn skipped(detail: String) -> Eval {
    Eval {
        outcome: Outcome::Skipped,
        measured: f64::NAN,
        detail,
    }
}

fn column(series: &DiagnosticsSeries, name: &str) -> Result<Vec<f64>> {
    series_column(series, name).ok_or_else(|| invalid(format!("no column `{name}`")))
}

/// Runs a scenario and evaluates its checks. Simulation aborts turn every
/// data-dependent check into a failure carrying the cause.
pub fn run_scenario(s: &Scenario) -> Result<VerdictReport> {
    s.validate()?;
    let initial = s.initial_state()?;
    let traj = run(&s.params, initial.clone())?;
    let error = traj.error.as_ref().map(|e| e.to_string());
    let mut verdicts = Vec::with_capacity(s.checks.len());
    for c in &s.checks {
        let eval = match (&error, &c.assertion) {
            (_, Assertion::LyapunovFeasible) => evaluate(c, s, &initial, &traj.series)?,
            (Some(e), _) => pass_if(false, f64::NAN, format!("run aborted: {e}")),
            (None, _) => match evaluate(c, s, &initial, &traj.series) {
                Ok(e) => e,
                Err(e) => pass_if(false, f64::NAN, format!("evaluation failed: {e}")),
            },
        };
        verdicts.push(Verdict {
            label: c.assertion.label(),
            outcome: eval.outcome,
            required: c.required,
            expected: c.expected,
            measured: eval.measured,
            detail: eval.detail,
        });
    }
    Ok(VerdictReport {
        scenario: s.name.clone(),
        verdicts,
        steps: traj.steps,
        t_final: traj.final_state.t,
        error,
    })
}

fn feasibility(s: &Scenario) -> Result<LyapunovFeasibility> {
    let c_n = match s.params.poincare {
        Some(c) => c,
        None => crate::diagnostics::poincare_constant(&s.params.grid)?,
    };
    make_lyapunov_config(s.params.sensitivity.cs(), c_n)
}

fn fit_window_start(series: &DiagnosticsSeries) -> f64 {
    let r = series.records();
    series.transient_end().map_or(r[0].t, |i| r[i].t)
}

fn evaluate(c: &Check, s: &Scenario, initial: &State, series: &DiagnosticsSeries) -> Result<Eval> {
    let recs = series.records();
    Ok(match &c.assertion {
        Assertion::MassDrift { max_rel } => {
            let m = column(series, "mass_n")?;
            let drift = m.iter().map(|x| (x - m[0]).abs()).fold(0.0, f64::max) / m[0].abs();
            pass_if(drift <= *max_rel, drift, format!("limit={max_rel:e}"))
        }
        Assertion::SignalMassBound { slack } => {
            let bound = recs[0].mass_n.max(recs[0].mass_c);
            let excess = recs
                .iter()
                .map(|r| r.mass_c - bound)
                .fold(f64::NEG_INFINITY, f64::max);
            pass_if(
                excess <= *slack,
                excess,
                format!("bound={bound} slack={slack:e}"),
            )
        }
        Assertion::MaxAbs { column: name, max } => {
            let v = column(series, name)?;
            let m = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
            pass_if(m <= *max, m, format!("limit={max:e}"))
        }
        Assertion::LyapunovFeasible => match feasibility(s)? {
            LyapunovFeasibility::Feasible(cfg) => pass_if(
                true,
                cfg.c_s / (2.0 * cfg.c_n.sqrt()),
                format!(
                    "B={} C_N={} a1={} a2={} kappa_pred={}",
                    cfg.b, cfg.c_n, cfg.a1, cfg.a2, cfg.kappa_pred
                ),
            ),
            LyapunovFeasibility::Infeasible { c_s, c_n, .. } => skipped(format!(
                "infeasible by design: C_S={c_s} >= 2 sqrt(C_N)={}",
                2.0 * c_n.sqrt()
            )),
        },
        Assertion::LyapunovMonotone { min_fraction } => {
            if feasibility(s)?.feasible().is_none() {
                return Ok(skipped("infeasible by design: no decay is claimed".into()));
            }
            let tol = calibrate_tolerance(&s.params, initial)?;
            let start = series
                .transient_end()
                .ok_or_else(|| invalid("the functional never fell below half its initial value"))?;
            let mut ok = 0usize;
            let mut total = 0usize;
            let mut worst = f64::NEG_INFINITY;
            for w in recs[start..].windows(2) {
                let q = (w[1].lyapunov - w[0].lyapunov) / (w[1].t - w[0].t);
                let excess = q - w[0].bound_rhs;
                worst = worst.max(excess);
                total += 1;
                if excess <= tol {
                    ok += 1;
                }
            }
            if total == 0 {
                return Ok(pass_if(false, 0.0, "no steps after the transient".into()));
            }
            let frac = ok as f64 / total as f64;
            pass_if(
                frac >= *min_fraction,
                frac,
                format!(
                    "steps={total} tol_disc={tol:e} worst_excess={worst:e} need={min_fraction}"
                ),
            )
        }
        Assertion::DecayRate {
            column: name,
            min_r2,
            floor,
        } => {
            let kappa = match floor {
                RateFloor::Positive => None,
                RateFloor::KappaFraction(f) => match feasibility(s)? {
                    LyapunovFeasibility::Feasible(cfg) => Some((f, cfg.kappa_pred)),
                    LyapunovFeasibility::Infeasible { .. } => {
                        return Ok(skipped("no predicted rate without feasible weights".into()))
                    }
                },
            };
            let v = column(series, name)?;
            let t = series.times();
            let t0 = fit_window_start(series);
            let fit = fit_decay_rate(&t, &v, Some((t0, f64::INFINITY)))?;
            let mut ok = fit.r_squared >= *min_r2 && fit.rate > 0.0;
            let mut detail = format!(
                "r2={:.6} window=[{t0:.4}, end] need_r2={min_r2}",
                fit.r_squared
            );
            if let Some((f, kp)) = kappa {
                ok &= fit.rate >= f * kp;
                let _ = write!(detail, " kappa_pred={kp:.6} ratio={:.3}", fit.rate / kp);
            }
            pass_if(ok, fit.rate, detail)
        }
        Assertion::SteadyDistanceDrop { fraction } => {
            let last = recs.last().expect("nonempty");
            let mut worst: f64 = 0.0;
            let mut detail = String::new();
            for name in ["n_inf_dev", "c_inf_dev", "u_inf"] {
                let v = column(series, name)?;
                let reference = if v[0] > 0.0 {
                    v[0]
                } else {
                    v.iter().cloned().fold(0.0, f64::max)
                };
                let end = *v.last().expect("nonempty");
                let ratio = if reference > 0.0 {
                    end / reference
                } else {
                    0.0
                };
                worst = worst.max(ratio);
                let _ = write!(detail, "{name}={ratio:.3e} ");
            }
            let _ = write!(detail, "t={}", last.t);
            pass_if(worst < *fraction, worst, detail)
        }
        Assertion::StokesRate { tolerance, window } => {
            let t = series.times();
            let e = column(series, "l2_u")?;
            let rate = fit_decay_rate(&t, &e, Some(*window))?.rate;
            let dt0 = base_dt(&s.params, initial)?;
            let r1 = stokes_rate(&s.params, initial, dt0, *window)?;
            let r2 = stokes_rate(&s.params, initial, 0.5 * dt0, *window)?;
            let proxy = 2.0 * r2 - r1;
            let rel = (rate - proxy).abs() / proxy;
            pass_if(
                rel <= *tolerance,
                rate,
                format!("stokes_proxy={proxy:.6} (dt: {r1:.6}, dt/2: {r2:.6}) rel_diff={rel:.4}"),
            )
        }
        Assertion::EnergyResidualHalving { steps, range } => {
            let dt0 = base_dt(&s.params, initial)?;
            let coarse = mean_energy_residual(&s.params, initial, dt0, *steps)?;
            let fine = mean_energy_residual(&s.params, initial, 0.5 * dt0, 2 * steps)?;
            let ratio = coarse / fine;
            pass_if(
                ratio >= range.0 && ratio <= range.1,
                ratio,
                format!(
                    "mean residual {coarse:.4e} -> {fine:.4e}, range=[{}, {}]",
                    range.0, range.1
                ),
            )
        }
    })
}

fn base_dt(params: &SimParams, initial: &State) -> Result<f64> {
    match params.dt_fixed {
        Some(dt) => Ok(dt),
        None => cfl_dt(initial, params),
    }
}

fn fixed_step_params(params: &SimParams, dt: f64, steps: usize) -> SimParams {
    let mut p = params.clone();
    p.dt_fixed = Some(dt);
    p.t_end = steps as f64 * dt;
    p.snapshot_every = 0;
    p
}

/// Discretization tolerance of the functional's slope: the average slope
/// over 50 steps at the base step and over 100 steps at half of it; twice
/// their difference bounds the first-order error at the base step.
pub fn calibrate_tolerance(params: &SimParams, initial: &State) -> Result<f64> {
    let dt0 = base_dt(params, initial)?;
    let ctx = record_context(params, initial)?;
    let l0 = record_state(initial, &ctx, StepInfo::default()).lyapunov;
    let slope = |dt: f64, steps: usize| -> Result<f64> {
        let mut p = fixed_step_params(params, dt, steps);
        p.diagnostics_every = usize::MAX;
        let tr = run(&p, initial.clone())?.into_result()?;
        let last = tr.series.last().expect("final record");
        Ok((last.lyapunov - l0) / last.t)
    };
    let s1 = slope(dt0, 50)?;
    let s2 = slope(0.5 * dt0, 100)?;
    Ok(2.0 * (s1 - s2).abs())
}

fn stokes_rate(params: &SimParams, initial: &State, dt: f64, window: (f64, f64)) -> Result<f64> {
    let steps = (window.1 / dt).round() as usize;
    let mut p = fixed_step_params(params, dt, steps);
    p.fluid = crate::fluid::FluidParams::new(0.0, params.fluid.eps(), params.fluid.phi().clone())?;
    p.diagnostics_every = 1;
    let tr = run(&p, initial.clone())?.into_result()?;
    let e = column(&tr.series, "l2_u")?;
    Ok(fit_decay_rate(&tr.series.times(), &e, Some(window))?.rate)
}

fn mean_energy_residual(params: &SimParams, initial: &State, dt: f64, steps: usize) -> Result<f64> {
    let mut p = fixed_step_params(params, dt, steps);
    p.diagnostics_every = usize::MAX;
    let fluid = params.fluid.clone();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut obs = |prev: &State, next: &State, info: &StepInfo| {
        sum += energy_identity_residual(&prev.u, &next.u, &next.n, &fluid, info.dt);
        count += 1;
    };
    let hooks = RunHooks {
        forcing: None,
        observer: Some(&mut obs),
    };
    run_with(&p, initial.clone(), hooks)?.into_result()?;
    if count == 0 {
        return Err(invalid("no steps taken"));
    }
    Ok(sum / count as f64)
}

/// Runs the named scenarios (in parallel) with the given seed.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<VerdictReport>> {
    use rayon::prelude::*;
    let scenarios = suite(name)?
        .into_iter()
        .map(|n| builtin(n, seed))
        .collect::<Result<Vec<_>>>()?;
    scenarios.par_iter().map(run_scenario).collect()
}
