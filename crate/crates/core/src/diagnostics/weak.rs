//! Residuals of the space-time integral identities satisfied by weak
//! solutions, evaluated on a discrete trajectory.
//!
//! Test functions are `psi(x) eta(t)` with a separable polynomial `psi` and
//! `eta(t) = cos^2(pi t / (2 tau))` on `[0, tau]`, 0 afterwards. The time
//! integral `-int int n phi_t - int n_0 phi(0)` is evaluated by exact
//! summation by parts over the stored steps, and every space integral by
//! face/cell quadrature with centered face states. What remains is the
//! consistency error of the scheme, first order in `h` because of the
//! upwinded fluxes.
//!
//! The velocity identity is tested against the discrete curl of a
//! polynomial stream function, which is exactly solenoidal, so the pressure
//! drops out.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fluid::{
    convection, curl_of_stream, velocity_form, yosida_apply, ConvectionScheme, PoissonSolver,
};
use crate::grid::{face_average, gradient_cc, ScalarField, VectorField};
use crate::sensitivity::{chemotactic_flux_with, FaceInterp};
use crate::stepper::{run_with, RunHooks, SimParams, State, StepInfo, Trajectory};

/// Separable polynomial test function times a smooth time cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    /// Per-axis polynomial coefficients in `s = x / L` (lowest order first).
    pub spatial: Vec<Vec<f64>>,
    /// End of the time support.
    pub tau: f64,
}

impl TestFunction {
    /// `psi = (1 + s_x^2 + s_x^3)(1 + s_y / 2 + 3 s_y^3 / 2)(1 + s_z^2 + s_z^3)`.
    ///
    /// No factor has a derivative that is even or odd about the box center,
    /// so defects of mirror-symmetric solutions do not cancel.
    pub fn separable(dim: usize, tau: f64) -> Result<Self> {
        let mut spatial = vec![vec![1.0, 0.0, 1.0, 1.0], vec![1.0, 0.5, 0.0, 1.5]];
        if dim == 3 {
            spatial.push(vec![1.0, 0.0, 1.0, 1.0]);
        }
        spatial.truncate(dim);
        Self::new(spatial, tau)
    }

    /// Spatially constant test function.
    pub fn constant(dim: usize, tau: f64) -> Result<Self> {
        Self::new(vec![vec![1.0]; dim], tau)
    }

    pub fn new(spatial: Vec<Vec<f64>>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!(
                "test-function support must be positive, got {tau}"
            )));
        }
        if spatial
            .iter()
            .any(|p| p.is_empty() || p.iter().any(|c| !c.is_finite()))
        {
            return Err(invalid(
                "test-function polynomials need finite coefficients",
            ));
        }
        Ok(Self { spatial, tau })
    }

    pub fn eta(&self, t: f64) -> f64 {
        if t >= self.tau {
            0.0
        } else {
            (PI * t / (2.0 * self.tau)).cos().powi(2)
        }
    }

    fn psi(&self, params: &SimParams) -> Result<ScalarField> {
        let g = &params.grid;
        if self.spatial.len() != g.dim() {
            return Err(invalid("test function and grid differ in dimension"));
        }
        Ok(ScalarField::from_fn(g, |x| {
            self.spatial
                .iter()
                .enumerate()
                .map(|(a, p)| {
                    let s = x[a] / g.extents()[a];
                    p.iter().rev().fold(0.0, |acc, c| acc * s + c)
                })
                .product()
        }))
    }
}

/// Absolute residuals of the three identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeakResiduals {
    pub r_n: f64,
    pub r_c: f64,
    pub r_u: f64,
}

/// Streams a run through the residual sums, one step at a time.
pub struct WeakAccumulator {
    params: SimParams,
    test: TestFunction,
    psi: ScalarField,
    grad_psi: VectorField,
    phi_u: VectorField,
    solver: PoissonSolver,
    lhs: [f64; 3],
    rhs: [f64; 3],
    t_last: f64,
}

fn velocity_test(params: &SimParams) -> VectorField {
    let g = &params.grid;
    let (lx, ly) = (g.extents()[0], g.extents()[1]);
    let p = |s: f64| 16.0 * s * s * (1.0 - s) * (1.0 - s);
    // the linear factor breaks the mirror symmetries of the plain bubble
    curl_of_stream(g, move |x, y, _| {
        lx.min(ly) * p(x / lx) * p(y / ly) * (1.0 + 0.5 * x / lx + 0.25 * y / ly)
    })
}

impl WeakAccumulator {
    pub fn new(params: &SimParams, test: &TestFunction) -> Result<Self> {
        let psi = test.psi(params)?;
        Ok(Self {
            grad_psi: gradient_cc(&psi),
            psi,
            phi_u: velocity_test(params),
            solver: PoissonSolver::new(&params.grid),
            params: params.clone(),
            test: test.clone(),
            lhs: [0.0; 3],
            rhs: [0.0; 3],
            t_last: 0.0,
        })
    }

    /// Adds the step `prev -> next`.
    pub fn observe(&mut self, prev: &State, next: &State) -> Result<()> {
        self.t_last = next.t;
        let eta = self.test.eta(prev.t);
        if eta == 0.0 {
            return Ok(());
        }
        let dt = next.t - prev.t;
        let p = &self.params;
        let (psi, gpsi, phi) = (&self.psi, &self.grad_psi, &self.phi_u);

        // n: int n_t psi = -<grad n, grad psi> + <n F S grad c, grad psi> + <n u, grad psi>
        self.lhs[0] += eta * next.n.dot_vol(psi) - eta * prev.n.dot_vol(psi);
        let chemo = chemotactic_flux_with(
            &prev.n,
            &prev.c,
            &p.sensitivity,
            &p.regularization,
            FaceInterp::Centered,
        )
        .flux;
        let mut nflux = gradient_cc(&prev.n).scaled(-1.0);
        nflux.axpy(1.0, &chemo);
        nflux.axpy(1.0, &centered_advective(&prev.n, &prev.u));
        self.rhs[0] += dt * eta * nflux.dot_vol(gpsi);

        // c: int c_t psi = -<grad c, grad psi> - <c, psi> + <n, psi> + <c u, grad psi>
        self.lhs[1] += eta * next.c.dot_vol(psi) - eta * prev.c.dot_vol(psi);
        let mut cflux = gradient_cc(&prev.c).scaled(-1.0);
        cflux.axpy(1.0, &centered_advective(&prev.c, &prev.u));
        let reaction = prev.n.dot_vol(psi) - prev.c.dot_vol(psi);
        self.rhs[1] += dt * eta * (cflux.dot_vol(gpsi) + reaction);

        // u: int u_t . Phi = -int grad u : grad Phi - kappa int (Y u . grad) u . Phi
        //                    + int n grad phi . Phi
        self.lhs[2] += eta * next.u.dot_vol(phi) - eta * prev.u.dot_vol(phi);
        let mut ru = -velocity_form(&prev.u, phi);
        let kappa = p.fluid.kappa();
        if kappa != 0.0 && prev.u.max_abs() > 0.0 {
            let w = yosida_apply(&prev.u, p.fluid.eps(), &mut self.solver)?;
            ru -= kappa * convection(&w, &prev.u, ConvectionScheme::Centered).dot_vol(phi);
        }
        let nf = face_average(&next.n);
        let g = &p.grid;
        let mut buoy = 0.0;
        for a in 0..g.dim() {
            for ((x, y), z) in nf
                .comp(a)
                .iter()
                .zip(p.fluid.grad_phi().comp(a))
                .zip(phi.comp(a))
            {
                buoy += x * y * z;
            }
        }
        ru += buoy * g.volume_element();
        self.rhs[2] += dt * eta * ru;
        Ok(())
    }

    pub fn finish(&self) -> Result<WeakResiduals> {
        // the time weight vanishes to second order at tau; roundoff in t is harmless
        if self.t_last < self.test.tau * (1.0 - 1e-9) {
            return Err(Error::InsufficientData(format!(
                "trajectory ends at t = {} before the test support ends at {}",
                self.t_last, self.test.tau
            )));
        }
        Ok(WeakResiduals {
            r_n: (self.lhs[0] - self.rhs[0]).abs(),
            r_c: (self.lhs[1] - self.rhs[1]).abs(),
            r_u: (self.lhs[2] - self.rhs[2]).abs(),
        })
    }
}

fn centered_advective(f: &ScalarField, u: &VectorField) -> VectorField {
    let mut out = face_average(f);
    for a in 0..u.grid().dim() {
        for (o, w) in out.comp_mut(a).iter_mut().zip(u.comp(a)) {
            *o *= w;
        }
    }
    out
}

/// Runs `params` from `initial`, streaming every step through a
/// [`WeakAccumulator`] without keeping the states. `t_end` must reach
/// `test.tau`.
pub fn streamed_weak_residual(
    params: &SimParams,
    initial: State,
    test: &TestFunction,
) -> Result<WeakResiduals> {
    let mut acc = WeakAccumulator::new(params, test)?;
    let mut failure = None;
    let mut obs = |a: &State, b: &State, _: &StepInfo| {
        if failure.is_none() {
            if let Err(e) = acc.observe(a, b) {
                failure = Some(e);
            }
        }
    };
    let hooks = RunHooks {
        forcing: None,
        observer: Some(&mut obs),
    };
    run_with(params, initial, hooks)?.into_result()?;
    if let Some(e) = failure {
        return Err(e);
    }
    acc.finish()
}

/// Residuals from a trajectory that kept every step as a snapshot.
pub fn weak_residual(
    trajectory: &Trajectory,
    params: &SimParams,
    test: &TestFunction,
) -> Result<WeakResiduals> {
    if params.snapshot_every != 1 || trajectory.snapshots.len() < 2 {
        return Err(Error::InsufficientData(
            "weak residuals need a snapshot after every step".into(),
        ));
    }
    let mut acc = WeakAccumulator::new(params, test)?;
    for w in trajectory.snapshots.windows(2) {
        acc.observe(&w[0], &w[1])?;
    }
    acc.finish()
}
