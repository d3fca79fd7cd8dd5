//! Manufactured solutions: closed-form fields, the source terms that make
//! them exact, and grid-refinement studies of the discrete error.
//!
//! All catalogue cases live on the unit square. The velocity is the curl of
//! a stream function vanishing with its gradient on the walls, so it is
//! solenoidal and satisfies no-slip; the initial discrete velocity is the
//! discrete curl of the same stream function, which is exactly solenoidal.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fluid::{curl_of_stream, ConvectionScheme, FluidParams};
use crate::grid::{make_grid, GridRef, Point, ScalarField, VectorField};
use crate::sensitivity::{smoothstep, smoothstep_deriv, RegularizationParams, SensitivitySpec};
use crate::stepper::{run_with, Forcing, RunHooks, SimParams, State};

/// `base + amp e^{-rate t} prod_a cos(k_a pi x_a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineField {
    pub base: f64,
    pub amp: f64,
    pub k: [f64; 2],
    pub rate: f64,
}

impl CosineField {
    pub const fn constant(base: f64) -> Self {
        Self {
            base,
            amp: 0.0,
            k: [0.0, 0.0],
            rate: 0.0,
        }
    }

    fn parts(&self, x: &Point) -> ([f64; 2], [f64; 2]) {
        let w = [self.k[0] * PI, self.k[1] * PI];
        (
            [(w[0] * x[0]).cos(), (w[1] * x[1]).cos()],
            [(w[0] * x[0]).sin(), (w[1] * x[1]).sin()],
        )
    }

    fn decay(&self, t: f64) -> f64 {
        self.amp * (-self.rate * t).exp()
    }

    pub fn value(&self, x: &Point, t: f64) -> f64 {
        let (c, _) = self.parts(x);
        self.base + self.decay(t) * c[0] * c[1]
    }

    pub fn time_derivative(&self, x: &Point, t: f64) -> f64 {
        -self.rate * (self.value(x, t) - self.base)
    }

    pub fn gradient(&self, x: &Point, t: f64) -> [f64; 2] {
        let (c, s) = self.parts(x);
        let a = self.decay(t);
        [
            -a * self.k[0] * PI * s[0] * c[1],
            -a * self.k[1] * PI * c[0] * s[1],
        ]
    }

    pub fn hessian(&self, x: &Point, t: f64) -> [[f64; 2]; 2] {
        let (c, s) = self.parts(x);
        let a = self.decay(t);
        let w = [self.k[0] * PI, self.k[1] * PI];
        let xy = a * w[0] * w[1] * s[0] * s[1];
        [
            [-a * w[0] * w[0] * c[0] * c[1], xy],
            [xy, -a * w[1] * w[1] * c[0] * c[1]],
        ]
    }
}

/// Velocity `curl(amp e^{-rate t} sin^2(pi x) sin^2(pi y))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamVelocity {
    pub amp: f64,
    pub rate: f64,
}

// sin^2(pi s) and its first three derivatives
fn s0(s: f64) -> f64 {
    (PI * s).sin().powi(2)
}
fn s1(s: f64) -> f64 {
    PI * (2.0 * PI * s).sin()
}
fn s2(s: f64) -> f64 {
    2.0 * PI * PI * (2.0 * PI * s).cos()
}
fn s3(s: f64) -> f64 {
    -4.0 * PI.powi(3) * (2.0 * PI * s).sin()
}

impl StreamVelocity {
    pub fn stream(&self, x: &Point, t: f64) -> f64 {
        self.a(t) * s0(x[0]) * s0(x[1])
    }

    fn a(&self, t: f64) -> f64 {
        self.amp * (-self.rate * t).exp()
    }

    pub fn value(&self, x: &Point, t: f64) -> [f64; 2] {
        let a = self.a(t);
        [a * s0(x[0]) * s1(x[1]), -a * s1(x[0]) * s0(x[1])]
    }

    /// `J[i][j] = d u_i / d x_j`.
    pub fn jacobian(&self, x: &Point, t: f64) -> [[f64; 2]; 2] {
        let a = self.a(t);
        let (x, y) = (x[0], x[1]);
        [
            [a * s1(x) * s1(y), a * s0(x) * s2(y)],
            [-a * s2(x) * s0(y), -a * s1(x) * s1(y)],
        ]
    }

    pub fn laplacian(&self, x: &Point, t: f64) -> [f64; 2] {
        let a = self.a(t);
        let (x, y) = (x[0], x[1]);
        [
            a * (s2(x) * s1(y) + s0(x) * s3(y)),
            -a * (s3(x) * s0(y) + s1(x) * s2(y)),
        ]
    }

    pub fn time_derivative(&self, x: &Point, t: f64) -> [f64; 2] {
        let v = self.value(x, t);
        [-self.rate * v[0], -self.rate * v[1]]
    }
}

/// Catalogue entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmsKind {
    /// Constant fields, no forcing needed.
    Steady,
    /// No chemotaxis, no flow: two coupled heat equations.
    DiffusionOnly,
    /// Rotational chemotaxis, cutoff, saturation and convection all active.
    FullCoupling,
}

/// A manufactured solution and the model it solves.
#[derive(Clone, Debug, PartialEq)]
pub struct MmsCase {
    pub kind: MmsKind,
    pub n: CosineField,
    pub c: CosineField,
    pub u: StreamVelocity,
    pub sensitivity: SensitivitySpec,
    pub eps: f64,
    pub kappa: f64,
    pub t_end: f64,
    /// `dt = dt_factor * h^2`, so the time error scales like `h^2`.
    pub dt_factor: f64,
    /// Accepted range of the observed order, if one is asserted.
    pub expected_order: Option<(f64, f64)>,
}

impl MmsCase {
    pub fn steady() -> Self {
        Self {
            kind: MmsKind::Steady,
            n: CosineField::constant(1.5),
            c: CosineField::constant(1.5),
            u: StreamVelocity {
                amp: 0.0,
                rate: 0.0,
            },
            sensitivity: SensitivitySpec::rotational(1.0, 1.0, PI / 3.0).expect("valid"),
            eps: 0.1,
            kappa: 1.0,
            t_end: 0.02,
            dt_factor: 0.1,
            expected_order: None,
        }
    }

    pub fn diffusion_only() -> Self {
        Self {
            kind: MmsKind::DiffusionOnly,
            n: CosineField {
                base: 1.0,
                amp: 0.5,
                k: [1.0, 1.0],
                rate: 1.0,
            },
            c: CosineField {
                base: 1.0,
                amp: 0.4,
                k: [2.0, 1.0],
                rate: 0.5,
            },
            u: StreamVelocity {
                amp: 0.0,
                rate: 0.0,
            },
            sensitivity: SensitivitySpec::scalar(0.0, 1.0).expect("valid"),
            eps: 0.1,
            kappa: 0.0,
            t_end: 0.1,
            dt_factor: 0.1,
            expected_order: Some((1.8, 2.2)),
        }
    }

    pub fn full_coupling() -> Self {
        Self {
            kind: MmsKind::FullCoupling,
            u: StreamVelocity {
                amp: 0.1,
                rate: 1.0,
            },
            sensitivity: SensitivitySpec::rotational(1.0, 1.0, PI / 3.0).expect("valid"),
            kappa: 1.0,
            expected_order: Some((0.9, f64::INFINITY)),
            ..Self::diffusion_only()
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "steady" => Ok(Self::steady()),
            "diffusion" | "diffusion_only" => Ok(Self::diffusion_only()),
            "full" | "full_coupling" => Ok(Self::full_coupling()),
            _ => Err(invalid(format!(
                "unknown manufactured case `{name}` (steady, diffusion_only, full_coupling)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MmsKind::Steady => "steady",
            MmsKind::DiffusionOnly => "diffusion_only",
            MmsKind::FullCoupling => "full_coupling",
        }
    }

    fn delta(&self) -> f64 {
        // unit square: min(eps L, L / 4)
        self.eps.min(0.25)
    }

    /// Wall cutoff and its gradient.
    pub fn cutoff(&self, x: &Point) -> (f64, [f64; 2]) {
        let delta = self.delta();
        let mut d = f64::INFINITY;
        let mut normal = [0.0; 2];
        for a in 0..2 {
            for (dist, sign) in [(x[a], 1.0), (1.0 - x[a], -1.0)] {
                if dist < d {
                    d = dist;
                    normal = [0.0; 2];
                    normal[a] = sign;
                }
            }
        }
        let s = d / delta;
        let ds = smoothstep_deriv(s) / delta;
        (smoothstep(s), [ds * normal[0], ds * normal[1]])
    }

    /// `G(n) = n F_eps(n) C_S (1+n)^-alpha` and `G'(n)`.
    fn flux_factor(&self, n: f64) -> (f64, f64) {
        let cs = self.sensitivity.cs();
        let alpha = self.sensitivity.alpha();
        let b = 1.0 + self.eps * n;
        let f = b.powi(-3);
        let e = (1.0 + n).powf(-alpha);
        let g = cs * n * f * e;
        let dg = cs * (f * e - 3.0 * self.eps * n * f / b * e - alpha * n * f * e / (1.0 + n));
        (g, dg)
    }

    pub fn exact_n(&self, x: &Point, t: f64) -> f64 {
        self.n.value(x, t)
    }

    pub fn exact_c(&self, x: &Point, t: f64) -> f64 {
        self.c.value(x, t)
    }

    pub fn exact_u(&self, x: &Point, t: f64) -> [f64; 2] {
        self.u.value(x, t)
    }

    /// Source of the `n` equation.
    pub fn forcing_n(&self, x: &Point, t: f64) -> f64 {
        let n = self.n.value(x, t);
        let gn = self.n.gradient(x, t);
        let hn = self.n.hessian(x, t);
        let gc = self.c.gradient(x, t);
        let hc = self.c.hessian(x, t);
        let u = self.u.value(x, t);
        let m = self.sensitivity.direction(2);
        let mgc = [
            m[0][0] * gc[0] + m[0][1] * gc[1],
            m[1][0] * gc[0] + m[1][1] * gc[1],
        ];
        let (g, dg) = self.flux_factor(n);
        let (rho, grho) = self.cutoff(x);
        let mut div_j = 0.0;
        for a in 0..2 {
            div_j += (dg * rho * gn[a] + g * grho[a]) * mgc[a];
            for b in 0..2 {
                div_j += g * rho * m[a][b] * hc[a][b];
            }
        }
        self.n.time_derivative(x, t) - (hn[0][0] + hn[1][1]) + div_j + u[0] * gn[0] + u[1] * gn[1]
    }

    /// Source of the `c` equation.
    pub fn forcing_c(&self, x: &Point, t: f64) -> f64 {
        let c = self.c.value(x, t);
        let gc = self.c.gradient(x, t);
        let hc = self.c.hessian(x, t);
        let u = self.u.value(x, t);
        self.c.time_derivative(x, t) - (hc[0][0] + hc[1][1]) + c - self.n.value(x, t)
            + u[0] * gc[0]
            + u[1] * gc[1]
    }

    /// Source of the momentum equation, with zero pressure and `phi = y`.
    pub fn forcing_u(&self, x: &Point, t: f64) -> [f64; 2] {
        let u = self.u.value(x, t);
        let j = self.u.jacobian(x, t);
        let lap = self.u.laplacian(x, t);
        let ut = self.u.time_derivative(x, t);
        let n = self.n.value(x, t);
        let mut f = [0.0; 2];
        for i in 0..2 {
            let conv = j[i][0] * u[0] + j[i][1] * u[1];
            f[i] = ut[i] - lap[i] + self.kappa * conv;
        }
        f[1] -= n;
        f
    }

    pub fn grid(&self, cells: usize) -> Result<GridRef> {
        make_grid(2, &[1.0, 1.0], &[cells, cells])
    }

    /// Model parameters on an `N x N` grid; the Yosida smoothing is off so
    /// the convecting velocity is the manufactured one.
    pub fn params(&self, cells: usize) -> Result<SimParams> {
        let g = self.grid(cells)?;
        let reg = RegularizationParams::new(self.eps, &g)?;
        let phi = ScalarField::from_fn(&g, |x| x[1]);
        let fluid = FluidParams::new(self.kappa, 0.0, phi)?;
        let mut p = SimParams::new(&g, self.sensitivity.clone(), reg, fluid, self.t_end)?;
        let h = g.h_min();
        p.dt_fixed = Some(self.dt_factor * h * h);
        p.poincare = Some(1.0 / (PI * PI));
        p.diagnostics_every = usize::MAX;
        p.convection = ConvectionScheme::Upwind;
        Ok(p)
    }

    pub fn initial_state(&self, grid: &GridRef) -> State {
        State {
            t: 0.0,
            n: ScalarField::from_fn(grid, |x| self.exact_n(x, 0.0)),
            c: ScalarField::from_fn(grid, |x| self.exact_c(x, 0.0)),
            u: curl_of_stream(grid, |x, y, _| self.u.stream(&[x, y, 0.0], 0.0)),
            p: ScalarField::zeros(grid),
        }
    }

    /// L2 errors of a state against the manufactured solution at its time.
    pub fn errors(&self, state: &State) -> MmsErrors {
        let g = state.grid();
        let t = state.t;
        let vol = g.volume_element();
        let field_err = |f: &ScalarField, exact: &dyn Fn(&Point) -> f64| {
            f.values()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - exact(&g.cell_center(i))).powi(2))
                .sum::<f64>()
                * vol
        };
        let n = field_err(&state.n, &|x| self.exact_n(x, t)).sqrt();
        let c = field_err(&state.c, &|x| self.exact_c(x, t)).sqrt();
        let mut u_sq = 0.0;
        for a in 0..2 {
            for (f, v) in state.u.comp(a).iter().enumerate() {
                u_sq += (v - self.exact_u(&g.face_center(a, f), t)[a]).powi(2);
            }
        }
        let u = (u_sq * vol).sqrt();
        MmsErrors {
            n,
            c,
            u,
            total: n + c + u,
        }
    }
}

impl Forcing for MmsCase {
    fn n_source(&self, grid: &GridRef, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.forcing_n(x, t))
    }

    fn c_source(&self, grid: &GridRef, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.forcing_c(x, t))
    }

    fn u_source(&self, grid: &GridRef, t: f64) -> VectorField {
        VectorField::from_fn(grid, |a, x| self.forcing_u(x, t)[a])
    }
}

/// Discrete L2 errors at the final time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsErrors {
    pub n: f64,
    pub c: f64,
    pub u: f64,
    pub total: f64,
}

/// Errors below this are roundoff and carry no order.
pub const ROUNDOFF_ERROR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub case: &'static str,
    pub resolutions: Vec<usize>,
    pub errors: Vec<MmsErrors>,
    /// Observed order of the total error between successive resolutions;
    /// `None` when both errors are at roundoff level.
    pub orders: Vec<Option<f64>>,
    /// Total error strictly decreasing under refinement.
    pub monotone: bool,
    pub expected_order: Option<(f64, f64)>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        match self.expected_order {
            None => self.errors.iter().all(|e| e.total <= ROUNDOFF_ERROR),
            Some((lo, hi)) => {
                self.monotone
                    && self
                        .orders
                        .iter()
                        .all(|p| p.is_some_and(|p| p >= lo && p <= hi))
            }
        }
    }

    /// `key=value` lines.
    pub fn key_values(&self) -> String {
        let mut out = format!("case={}\n", self.case);
        for (n, e) in self.resolutions.iter().zip(&self.errors) {
            out += &format!(
                "error_{n}={:e}\nerror_n_{n}={:e}\nerror_c_{n}={:e}\nerror_u_{n}={:e}\n",
                e.total, e.n, e.c, e.u
            );
        }
        for (w, p) in self.resolutions.windows(2).zip(&self.orders) {
            match p {
                Some(p) => out += &format!("order_{}_{}={p:.4}\n", w[0], w[1]),
                None => out += &format!("order_{}_{}=undefined\n", w[0], w[1]),
            }
        }
        out += &format!("monotone={}\npassed={}\n", self.monotone, self.passed());
        out
    }
}

/// Runs the case on each `N x N` grid (in parallel) and measures the order.
pub fn mms_convergence(case: &MmsCase, resolutions: &[usize]) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(invalid("a convergence study needs at least 3 resolutions"));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("resolutions must be strictly increasing"));
    }
    let errors = resolutions
        .par_iter()
        .map(|&n| {
            let params = case.params(n)?;
            let init = case.initial_state(&params.grid);
            let hooks = RunHooks {
                forcing: Some(case),
                observer: None,
            };
            let traj = run_with(&params, init, hooks)?.into_result()?;
            Ok(case.errors(&traj.final_state))
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = resolutions
        .windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| {
            if e[0].total <= ROUNDOFF_ERROR && e[1].total <= ROUNDOFF_ERROR {
                None
            } else {
                Some((e[0].total / e[1].total).ln() / (n[1] as f64 / n[0] as f64).ln())
            }
        })
        .collect();
    let monotone = errors.windows(2).all(|e| e[1].total < e[0].total);
    Ok(ConvergenceReport {
        case: case.name(),
        resolutions: resolutions.to_vec(),
        errors,
        orders,
        monotone,
        expected_order: case.expected_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::max_divergence;
    use crate::sensitivity::{cutoff_rho, f_eps};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = 4e-4;

    fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
            / (12.0 * h * h)
    }

    fn shift(x: &Point, a: usize, d: f64) -> Point {
        let mut y = *x;
        y[a] += d;
        y
    }

    fn grad(f: &dyn Fn(&Point) -> f64, x: &Point) -> [f64; 2] {
        [
            d1(|s| f(&shift(x, 0, s - x[0])), x[0], H),
            d1(|s| f(&shift(x, 1, s - x[1])), x[1], H),
        ]
    }

    fn lap(f: &dyn Fn(&Point) -> f64, x: &Point) -> f64 {
        d2(|s| f(&shift(x, 0, s - x[0])), x[0], H) + d2(|s| f(&shift(x, 1, s - x[1])), x[1], H)
    }

    // Forcing rebuilt from point values only, by finite differences.
    fn oracle(case: &MmsCase, x: &Point, t: f64) -> (f64, f64, [f64; 2]) {
        let g = case.grid(8).unwrap();
        let reg = RegularizationParams::new(case.eps, &g).unwrap();
        let nf = |y: &Point| case.exact_n(y, t);
        let cf = |y: &Point| case.exact_c(y, t);
        let u = case.exact_u(x, t);
        let m = case.sensitivity.direction(2);
        let flux = |y: &Point, a: usize| {
            let n = case.exact_n(y, t);
            let gc = grad(&cf, y);
            let s = n
                * f_eps(n, case.eps).unwrap()
                * case.sensitivity.envelope(n)
                * cutoff_rho(y, &g, &reg).unwrap();
            s * (m[a][0] * gc[0] + m[a][1] * gc[1])
        };
        let div_j = d1(|s| flux(&shift(x, 0, s - x[0]), 0), x[0], H)
            + d1(|s| flux(&shift(x, 1, s - x[1]), 1), x[1], H);
        let gn = grad(&nf, x);
        let gc = grad(&cf, x);
        let nt = d1(|s| case.exact_n(x, s), t, H);
        let ct = d1(|s| case.exact_c(x, s), t, H);
        let fn_ = nt - lap(&nf, x) + div_j + u[0] * gn[0] + u[1] * gn[1];
        let fc = ct - lap(&cf, x) + cf(x) - nf(x) + u[0] * gc[0] + u[1] * gc[1];
        let mut fu = [0.0; 2];
        for i in 0..2 {
            let ui = |y: &Point| case.exact_u(y, t)[i];
            let gu = grad(&ui, x);
            let ut = d1(|s| case.exact_u(x, s)[i], t, H);
            fu[i] = ut - lap(&ui, x) + case.kappa * (u[0] * gu[0] + u[1] * gu[1]);
        }
        fu[1] -= nf(x);
        (fn_, fc, fu)
    }

    // away from walls, the cutoff ridges and the inner edge of the layer
    fn admissible(case: &MmsCase, x: &Point) -> bool {
        let mut d = [x[0], 1.0 - x[0], x[1], 1.0 - x[1]];
        d.sort_by(f64::total_cmp);
        let margin = 10.0 * H;
        d[0] > margin && d[1] - d[0] > margin && (d[0] - case.delta()).abs() > margin
    }

    #[test]
    fn forcing_matches_numerical_differentiation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in [
            MmsCase::steady(),
            MmsCase::diffusion_only(),
            MmsCase::full_coupling(),
        ] {
            let mut checked = 0;
            while checked < 200 {
                let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), 0.0];
                if !admissible(&case, &x) {
                    continue;
                }
                let t = rng.gen_range(0.0..case.t_end);
                let (fn_, fc, fu) = oracle(&case, &x, t);
                assert!(
                    (case.forcing_n(&x, t) - fn_).abs() < 1e-6,
                    "{} n at {x:?}: {} vs {fn_}",
                    case.name(),
                    case.forcing_n(&x, t)
                );
                assert!(
                    (case.forcing_c(&x, t) - fc).abs() < 1e-6,
                    "{} c at {x:?}",
                    case.name()
                );
                let a = case.forcing_u(&x, t);
                for i in 0..2 {
                    assert!((a[i] - fu[i]).abs() < 1e-6, "{} u{i} at {x:?}", case.name());
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn velocity_is_solenoidal_and_no_slip() {
        let u = MmsCase::full_coupling().u;
        for &(x, y) in &[(0.2, 0.7), (0.5, 0.5), (0.91, 0.13)] {
            let j = u.jacobian(&[x, y, 0.0], 0.3);
            assert!((j[0][0] + j[1][1]).abs() < 1e-14);
        }
        for s in [0.0, 0.3, 1.0] {
            for p in [[0.0, s, 0.0], [1.0, s, 0.0], [s, 0.0, 0.0], [s, 1.0, 0.0]] {
                let v = u.value(&p, 0.1);
                assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
            }
        }
        let case = MmsCase::full_coupling();
        let g = case.grid(16).unwrap();
        assert!(max_divergence(&case.initial_state(&g).u) < 1e-13);
    }

    #[test]
    fn steady_case_stays_exact() {
        let r = mms_convergence(&MmsCase::steady(), &[8, 12, 16]).unwrap();
        assert!(r.errors.iter().all(|e| e.total <= ROUNDOFF_ERROR), "{r:?}");
        assert!(r.orders.iter().all(Option::is_none));
        assert!(r.passed());
        assert!(r.key_values().contains("order_8_12=undefined"));
    }

    #[test]
    fn diffusion_order_on_coarse_grids() {
        let r = mms_convergence(&MmsCase::diffusion_only(), &[8, 16, 32]).unwrap();
        assert!(r.monotone, "{r:?}");
        for p in r.orders.iter().flatten() {
            assert!((1.7..2.3).contains(p), "{r:?}");
        }
    }

    #[test]
    fn rejects_bad_resolution_lists() {
        let case = MmsCase::steady();
        assert!(mms_convergence(&case, &[8, 16]).is_err());
        assert!(mms_convergence(&case, &[8, 16, 16]).is_err());
        assert!(MmsCase::by_name("nope").is_err());
    }
}
