//! Coupled explicit time integration of `(n, c, u)`.
//!
//! One step updates `n` and `c` with the velocity and signal from the start
//! of the step, then advances the flow with the fresh density. The time step
//! is the CFL bound scaled by a safety factor unless a fixed step is given.

use crate::diagnostics::{
    make_lyapunov_config, poincare_constant, record_state, DiagnosticsSeries, LyapunovFeasibility,
    RecordContext,
};
use crate::error::{invalid, Error, Result};
use crate::fluid::{
    helmholtz_project, max_divergence, ns_substep_with, ConvectionScheme, FluidParams,
    PoissonSolver,
};
use crate::grid::{check_same, GridRef, ScalarField, VectorField};
use crate::sensitivity::{
    chemotactic_flux_with, FaceInterp, RegularizationParams, SensitivitySpec,
};
use crate::transport::{step_c_with, step_n_with};

/// Largest tolerated `max |div u|` after a projection, relative to `max(1, max|u|)`.
pub const DIVERGENCE_LIMIT: f64 = 1e-9;

/// The solution at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub n: ScalarField,
    pub c: ScalarField,
    pub u: VectorField,
    pub p: ScalarField,
}

impl State {
    /// Builds an initial state, projecting `u` onto solenoidal fields with
    /// no-slip walls.
    pub fn initial(
        n: ScalarField,
        c: ScalarField,
        u: VectorField,
        solver: &mut PoissonSolver,
    ) -> Result<Self> {
        check_same(n.grid(), c.grid())?;
        check_same(n.grid(), u.grid())?;
        let u = if u.max_abs() == 0.0 {
            u
        } else {
            helmholtz_project(&u, solver)?.field
        };
        let p = ScalarField::zeros(n.grid());
        let s = Self { t: 0.0, n, c, u, p };
        s.validate()?;
        Ok(s)
    }

    /// Homogeneous steady state `(m, m, 0)`.
    pub fn homogeneous(grid: &GridRef, m: f64) -> Self {
        Self {
            t: 0.0,
            n: ScalarField::constant(grid, m),
            c: ScalarField::constant(grid, m),
            u: VectorField::zeros(grid),
            p: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &GridRef {
        self.n.grid()
    }

    /// Checks finiteness, sign and incompressibility.
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("n", &self.n), ("c", &self.c), ("P", &self.p)] {
            if !f.is_finite() {
                return Err(Error::NonFinite { field: name });
            }
        }
        if !self.u.is_finite() {
            return Err(Error::NonFinite { field: "u" });
        }
        for (name, f) in [("n", &self.n), ("c", &self.c)] {
            let threshold = crate::transport::POSITIVITY_SLACK * f.max().max(0.0);
            if f.min() < -threshold {
                return Err(Error::Positivity {
                    field: name,
                    time: self.t,
                    min: f.min(),
                    threshold,
                });
            }
        }
        let div = max_divergence(&self.u);
        let limit = DIVERGENCE_LIMIT * self.u.max_abs().max(1.0);
        if div > limit {
            return Err(Error::Divergence {
                time: self.t,
                divergence: div,
                limit,
            });
        }
        Ok(())
    }
}

/// Everything that defines a run except the initial data.
#[derive(Clone, Debug)]
pub struct SimParams {
    pub grid: GridRef,
    pub sensitivity: SensitivitySpec,
    pub regularization: RegularizationParams,
    pub fluid: FluidParams,
    /// End time `T`.
    pub t_end: f64,
    /// CFL safety factor in (0, 1].
    pub cfl: f64,
    /// Fixed step; still checked against the stability limit.
    pub dt_fixed: Option<f64>,
    /// Record diagnostics every this many steps (the final state is always
    /// recorded).
    pub diagnostics_every: usize,
    /// Keep a state every this many steps; 0 keeps none.
    pub snapshot_every: usize,
    /// Poincaré constant of the grid; computed at the start of a run when
    /// `None`. Sweeps over one grid set it once.
    pub poincare: Option<f64>,
    pub convection: ConvectionScheme,
}

impl SimParams {
    pub fn new(
        grid: &GridRef,
        sensitivity: SensitivitySpec,
        regularization: RegularizationParams,
        fluid: FluidParams,
        t_end: f64,
    ) -> Result<Self> {
        let p = Self {
            grid: grid.clone(),
            sensitivity,
            regularization,
            fluid,
            t_end,
            cfl: 0.4,
            dt_fixed: None,
            diagnostics_every: 1,
            snapshot_every: 0,
            poincare: None,
            convection: ConvectionScheme::Upwind,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!(
                "end time must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid(format!(
                "CFL factor must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if let Some(dt) = self.dt_fixed {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid(format!("fixed dt must be positive, got {dt}")));
            }
        }
        if self.diagnostics_every == 0 {
            return Err(invalid("diagnostics cadence must be positive"));
        }
        check_same(&self.grid, self.fluid.phi().grid())
    }
}

/// Per-step solver bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub poisson_iters: usize,
    pub max_drift: f64,
}

/// Stability limits of the explicit scheme at a state (before the safety
/// factor).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityLimits {
    pub diffusion: f64,
    pub advection: f64,
    pub drift: f64,
    pub reaction: f64,
}

impl StabilityLimits {
    pub fn min(&self) -> f64 {
        self.diffusion
            .min(self.advection)
            .min(self.drift)
            .min(self.reaction)
    }
}

fn limits_with_drift(state: &State, max_drift: f64) -> StabilityLimits {
    let g = state.grid();
    let h = g.h_min();
    let umax = state.u.max_abs();
    StabilityLimits {
        diffusion: h * h / (2.0 * g.dim() as f64),
        advection: if umax > 0.0 { h / umax } else { f64::INFINITY },
        drift: if max_drift > 0.0 {
            h / max_drift
        } else {
            f64::INFINITY
        },
        reaction: 0.5,
    }
}

pub fn stability_limits(state: &State, params: &SimParams) -> Result<StabilityLimits> {
    state.validate()?;
    let chemo = chemotactic_flux_with(
        &state.n,
        &state.c,
        &params.sensitivity,
        &params.regularization,
        FaceInterp::Upwind,
    );
    Ok(limits_with_drift(state, chemo.max_drift))
}

/// `sigma * min{h^2/(2 dim), h/max|u|, h/max drift, 0.5}`.
pub fn cfl_dt(state: &State, params: &SimParams) -> Result<f64> {
    Ok(params.cfl * stability_limits(state, params)?.min())
}

/// Manufactured source terms added to the three equations at time `t`.
pub trait Forcing: Sync {
    fn n_source(&self, grid: &GridRef, t: f64) -> ScalarField;
    fn c_source(&self, grid: &GridRef, t: f64) -> ScalarField;
    fn u_source(&self, grid: &GridRef, t: f64) -> VectorField;
}

/// One coupled step of length `dt`.
pub fn advance(
    state: &State,
    params: &SimParams,
    dt: f64,
    solver: &mut PoissonSolver,
) -> Result<State> {
    advance_forced(state, params, dt, solver, None).map(|(s, _)| s)
}

pub(crate) fn advance_forced(
    state: &State,
    params: &SimParams,
    dt: f64,
    solver: &mut PoissonSolver,
    forcing: Option<&dyn Forcing>,
) -> Result<(State, StepInfo)> {
    let chemo = chemotactic_flux_with(
        &state.n,
        &state.c,
        &params.sensitivity,
        &params.regularization,
        FaceInterp::Upwind,
    );
    let limit = limits_with_drift(state, chemo.max_drift).min();
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let g = state.grid().clone();
    let t = state.t;
    let src_n = forcing.map(|f| f.n_source(&g, t));
    let src_c = forcing.map(|f| f.c_source(&g, t));
    let src_u = forcing.map(|f| f.u_source(&g, t));
    let n = step_n_with(
        &state.n,
        &state.u,
        &chemo.flux,
        chemo.max_drift,
        dt,
        src_n.as_ref(),
        t,
    )?;
    let c = step_c_with(&state.c, &state.n, &state.u, dt, src_c.as_ref(), t)?;
    let before = solver.total_iterations();
    let flow = ns_substep_with(
        &state.u,
        &n,
        &params.fluid,
        dt,
        solver,
        src_u.as_ref(),
        params.convection,
    )?;
    let next = State {
        t: t + dt,
        n,
        c,
        u: flow.u,
        p: flow.pressure,
    };
    let div = max_divergence(&next.u);
    let div_limit = DIVERGENCE_LIMIT * next.u.max_abs().max(1.0);
    if div > div_limit {
        return Err(Error::Divergence {
            time: next.t,
            divergence: div,
            limit: div_limit,
        });
    }
    Ok((
        next,
        StepInfo {
            dt,
            poisson_iters: solver.total_iterations() - before,
            max_drift: chemo.max_drift,
        },
    ))
}

/// A finished (or aborted) run.
#[derive(Debug)]
pub struct Trajectory {
    pub series: DiagnosticsSeries,
    /// States kept at the snapshot cadence, including the initial one when
    /// the cadence is nonzero.
    pub snapshots: Vec<State>,
    pub final_state: State,
    pub steps: usize,
    pub context: RecordContext,
    /// Why the run stopped early, if it did.
    pub error: Option<Error>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    /// Turns an aborted run into its error.
    pub fn into_result(self) -> Result<Trajectory> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Called after every accepted step with the previous and new state.
pub type StepObserver<'a> = dyn FnMut(&State, &State, &StepInfo) + 'a;

/// Optional hooks into a run.
#[derive(Default)]
pub struct RunHooks<'a> {
    pub forcing: Option<&'a dyn Forcing>,
    pub observer: Option<&'a mut StepObserver<'a>>,
}

/// Builds the functional weights for a run.
pub fn record_context(params: &SimParams, initial: &State) -> Result<RecordContext> {
    let nbar0 = initial.n.mean();
    let alpha = params.sensitivity.alpha();
    let cs = params.sensitivity.cs();
    let c_n = match params.poincare {
        Some(c) => c,
        None => poincare_constant(&params.grid)?,
    };
    let b = match make_lyapunov_config(cs, c_n)? {
        LyapunovFeasibility::Feasible(cfg) => cfg.b,
        // reporting weight only; no decay is claimed
        LyapunovFeasibility::Infeasible { .. } => 1.0 / c_n,
    };
    Ok(RecordContext::new(nbar0, b, c_n, cs, alpha))
}

pub fn run(params: &SimParams, initial: State) -> Result<Trajectory> {
    run_with(params, initial, RunHooks::default())
}

/// Advances to `T`, stopping at the last step that does not overshoot it.
pub fn run_with(params: &SimParams, initial: State, mut hooks: RunHooks<'_>) -> Result<Trajectory> {
    params.validate()?;
    check_same(&params.grid, initial.grid())?;
    initial.validate()?;
    let ctx = record_context(params, &initial)?;
    let mut solver = PoissonSolver::new(&params.grid);
    let mut series = DiagnosticsSeries::default();
    series.push(record_state(&initial, &ctx, StepInfo::default()));
    let mut snapshots = Vec::new();
    if params.snapshot_every > 0 {
        snapshots.push(initial.clone());
    }
    let mut state = initial;
    let mut steps = 0usize;
    let mut error = None;
    let t_stop = params.t_end * (1.0 + 1e-12);
    let mut pending_iters = 0usize;
    let mut last_info = StepInfo::default();
    loop {
        let dt = match params.dt_fixed {
            Some(dt) => dt,
            None => match cfl_dt(&state, params) {
                Ok(dt) => dt,
                Err(e) => {
                    error = Some(e);
                    break;
                }
            },
        };
        if state.t + dt > t_stop {
            break;
        }
        match advance_forced(&state, params, dt, &mut solver, hooks.forcing) {
            Ok((next, info)) => {
                steps += 1;
                pending_iters += info.poisson_iters;
                last_info = info;
                if let Some(obs) = hooks.observer.as_mut() {
                    obs(&state, &next, &info);
                }
                state = next;
                if steps.is_multiple_of(params.diagnostics_every) {
                    let mut info = info;
                    info.poisson_iters = pending_iters;
                    pending_iters = 0;
                    series.push(record_state(&state, &ctx, info));
                }
                if params.snapshot_every > 0 && steps.is_multiple_of(params.snapshot_every) {
                    snapshots.push(state.clone());
                }
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    if !steps.is_multiple_of(params.diagnostics_every) {
        last_info.poisson_iters = pending_iters;
        series.push(record_state(&state, &ctx, last_info));
    }
    Ok(Trajectory {
        series,
        snapshots,
        final_state: state,
        steps,
        context: ctx,
        error,
    })
}
