//! Incompressible flow: discrete Helmholtz projection, the Yosida smoothing
//! of the convecting velocity and the explicit projection step for
//! `u_t + grad P = Lap u - kappa (Y u . grad) u + n grad phi`.
//!
//! Velocity lives on the MAC faces with no-slip walls: boundary-normal faces
//! are 0, and tangential components see a mirrored ghost `-u` beyond each
//! wall so that the wall value is 0 at second order.

mod poisson;

pub(crate) use poisson::{
    from_compact, to_compact, velocity_bcs, AxisBc, SeparableOperator, System,
};
pub use poisson::{CgStats, PoissonSolver, Preconditioner, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};

use crate::error::{invalid, Error, Result};
use crate::grid::{
    check_same, divergence_fc, face_average, gradient_cc, GridRef, ScalarField, VectorField,
};

/// Fluid coefficients fixed for a run.
#[derive(Clone, Debug)]
pub struct FluidParams {
    kappa: f64,
    eps: f64,
    phi: ScalarField,
    grad_phi: VectorField,
}

impl FluidParams {
    /// `kappa` scales convection (0 gives the Stokes limit), `eps >= 0` is
    /// the Yosida parameter, `phi` the potential.
    pub fn new(kappa: f64, eps: f64, phi: ScalarField) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(invalid("kappa must be finite"));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid(format!("Yosida eps must be >= 0, got {eps}")));
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite { field: "phi" });
        }
        let grad_phi = gradient_cc(&phi);
        Ok(Self {
            kappa,
            eps,
            phi,
            grad_phi,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn grad_phi(&self) -> &VectorField {
        &self.grad_phi
    }
}

/// Result of a projection: the solenoidal part and the potential `q` with
/// `w = P w + grad q`.
#[derive(Clone, Debug)]
pub struct Projection {
    pub field: VectorField,
    pub potential: ScalarField,
    pub stats: CgStats,
}

/// `w - grad q` with `Lap_h q = div w` and zero-flux walls.
///
/// Boundary-normal faces of `w` are treated as the wall condition and set to
/// 0 before projecting, so the result always satisfies no-penetration.
pub fn helmholtz_project(w: &VectorField, solver: &mut PoissonSolver) -> Result<Projection> {
    check_same(w.grid(), solver.grid())?;
    if !w.is_finite() {
        return Err(Error::NonFinite { field: "u" });
    }
    let mut w = w.clone();
    w.clear_boundary();
    let rhs = divergence_fc(&w).map(|v| -v);
    let (q, stats) = solver.solve_pressure(&rhs)?;
    let mut field = w;
    field.axpy(-1.0, &gradient_cc(&q));
    Ok(Projection {
        field,
        potential: q,
        stats,
    })
}

/// Componentwise vector Laplacian with no-slip walls.
pub fn vector_laplacian(u: &VectorField) -> VectorField {
    let g = u.grid().clone();
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim() {
        let op = SeparableOperator::new(&g, velocity_bcs(a), 0.0, 1.0);
        let x = to_compact(&g, a, u.comp(a));
        let mut y = vec![0.0; x.len()];
        op.apply_neg_laplacian(&x, &mut y);
        y.iter_mut().for_each(|v| *v = -*v);
        from_compact(&g, a, &y, out.comp_mut(a));
    }
    out
}

/// `Y_eps u`: solve `(I - eps Lap_h) v = u` per component, then project.
/// `eps = 0` returns `u` unchanged.
pub fn yosida_apply(u: &VectorField, eps: f64, solver: &mut PoissonSolver) -> Result<VectorField> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("Yosida eps must be >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(u.clone());
    }
    check_same(u.grid(), solver.grid())?;
    let g = u.grid().clone();
    let mut v = VectorField::zeros(&g);
    for a in 0..g.dim() {
        let rhs = to_compact(&g, a, u.comp(a));
        let (x, _) = solver.solve_helmholtz(a, eps, &rhs)?;
        from_compact(&g, a, &x, v.comp_mut(a));
    }
    Ok(helmholtz_project(&v, solver)?.field)
}

/// Difference scheme for the transported component in `(w . grad) u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvectionScheme {
    Upwind,
    Centered,
}

/// `(w . grad) u` at the interior faces of every component, advective form.
pub fn convection(w: &VectorField, u: &VectorField, scheme: ConvectionScheme) -> VectorField {
    let g = u.grid().clone();
    let dim = g.dim();
    let mut out = VectorField::zeros(&g);
    for a in 0..dim {
        let d = g.face_dims(a);
        let ua = u.comp(a);
        let vel: Vec<Option<Vec<f64>>> = (0..dim)
            .map(|b| (b != a).then(|| transverse_velocity(w, a, b)))
            .collect();
        let o = out.comp_mut(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let c = [i, j, k];
                    if c[a] == 0 || c[a] == d[a] - 1 {
                        continue;
                    }
                    let f = g.face_index(a, i, j, k);
                    let v = ua[f];
                    let mut acc = 0.0;
                    for b in 0..dim {
                        let s = g.face_stride(a, b);
                        let h = g.spacing()[b];
                        let wb = match &vel[b] {
                            None => w.comp(a)[f],
                            Some(t) => t[f],
                        };
                        if wb == 0.0 {
                            continue;
                        }
                        let (lo, hi) = if b == a {
                            let lo = if c[a] == 1 { 0.0 } else { ua[f - s] };
                            let hi = if c[a] == d[a] - 2 { 0.0 } else { ua[f + s] };
                            (lo, hi)
                        } else {
                            let lo = if c[b] == 0 { -v } else { ua[f - s] };
                            let hi = if c[b] == d[b] - 1 { -v } else { ua[f + s] };
                            (lo, hi)
                        };
                        let deriv = match scheme {
                            ConvectionScheme::Centered => (hi - lo) / (2.0 * h),
                            ConvectionScheme::Upwind => {
                                if wb > 0.0 {
                                    (v - lo) / h
                                } else {
                                    (hi - v) / h
                                }
                            }
                        };
                        acc += wb * deriv;
                    }
                    o[f] = acc;
                }
            }
        }
    }
    out
}

/// Component `b` of `w` at the faces of axis `a`: mean of the four
/// surrounding `b`-faces.
fn transverse_velocity(w: &VectorField, a: usize, b: usize) -> Vec<f64> {
    let g = w.grid();
    let d = g.face_dims(a);
    let wb = w.comp(b);
    let bs = g.face_stride(b, b);
    let mut out = vec![0.0; g.face_count(a)];
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                let c = [i, j, k];
                if c[a] == 0 || c[a] == d[a] - 1 {
                    continue;
                }
                let mut lo = c;
                lo[a] -= 1;
                let f_lo = g.face_index(b, lo[0], lo[1], lo[2]);
                let f_hi = g.face_index(b, c[0], c[1], c[2]);
                out[g.face_index(a, i, j, k)] =
                    0.25 * (wb[f_lo] + wb[f_lo + bs] + wb[f_hi] + wb[f_hi + bs]);
            }
        }
    }
    out
}

/// Largest stable step for the explicit velocity update:
/// `min(h^2 / (2 dim), h / max|u|)`.
pub fn fluid_dt_limit(u: &VectorField) -> f64 {
    let g = u.grid();
    let h = g.h_min();
    let diff = h * h / (2.0 * g.dim() as f64);
    let umax = u.max_abs();
    if umax > 0.0 {
        diff.min(h / umax)
    } else {
        diff
    }
}

/// One projection step.
#[derive(Clone, Debug)]
pub struct FluidStep {
    pub u: VectorField,
    /// Pressure, `q / dt` for the projection potential `q`.
    pub pressure: ScalarField,
    pub stats: CgStats,
}

/// Explicit tentative step followed by projection:
/// `u* = u + dt [Lap u - kappa (Y u . grad) u + n grad phi + extra]`,
/// `u_next = P u*`.
pub fn ns_substep(
    u: &VectorField,
    n: &ScalarField,
    params: &FluidParams,
    dt: f64,
    solver: &mut PoissonSolver,
) -> Result<FluidStep> {
    ns_substep_with(u, n, params, dt, solver, None, ConvectionScheme::Upwind)
}

pub(crate) fn ns_substep_with(
    u: &VectorField,
    n: &ScalarField,
    params: &FluidParams,
    dt: f64,
    solver: &mut PoissonSolver,
    extra: Option<&VectorField>,
    scheme: ConvectionScheme,
) -> Result<FluidStep> {
    check_same(u.grid(), n.grid())?;
    check_same(u.grid(), params.phi.grid())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let limit = fluid_dt_limit(u);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let g = u.grid().clone();
    let mut rhs = vector_laplacian(u);
    if params.kappa != 0.0 {
        let w = yosida_apply(u, params.eps, solver)?;
        rhs.axpy(-params.kappa, &convection(&w, u, scheme));
    }
    let nf = face_average(n);
    for a in 0..g.dim() {
        let gp = params.grad_phi.comp(a);
        let nfa = nf.comp(a);
        for (r, (x, y)) in rhs.comp_mut(a).iter_mut().zip(nfa.iter().zip(gp)) {
            *r += x * y;
        }
    }
    if let Some(e) = extra {
        rhs.axpy(1.0, e);
    }
    let mut star = u.clone();
    star.axpy(dt, &rhs);
    let proj = helmholtz_project(&star, solver)?;
    if !proj.field.is_finite() {
        return Err(Error::NonFinite { field: "u" });
    }
    Ok(FluidStep {
        u: proj.field,
        pressure: proj.potential.map(|q| q / dt),
        stats: proj.stats,
    })
}

/// `-<Lap_h u, v>` written as a sum of squared-difference pairs, including
/// the wall terms from the mirrored ghost. `velocity_form(u, u)` is the
/// discrete `int |grad u|^2`.
pub fn velocity_form(u: &VectorField, v: &VectorField) -> f64 {
    let g = u.grid();
    let vol = g.volume_element();
    let mut total = 0.0;
    for a in 0..g.dim() {
        let d = g.face_dims(a);
        let (ua, va) = (u.comp(a), v.comp(a));
        for b in 0..g.dim() {
            let s = g.face_stride(a, b);
            let h = g.spacing()[b];
            let w = 1.0 / (h * h);
            let mut acc = 0.0;
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        let c = [i, j, k];
                        if c[a] == 0 || c[a] == d[a] - 1 {
                            // wall faces only enter as the neighbour of a pair
                            if b == a && c[a] == 0 {
                                let f = g.face_index(a, i, j, k);
                                acc += (ua[f + s] - ua[f]) * (va[f + s] - va[f]);
                            }
                            continue;
                        }
                        let f = g.face_index(a, i, j, k);
                        if b == a {
                            acc += (ua[f + s] - ua[f]) * (va[f + s] - va[f]);
                        } else {
                            if c[b] + 1 < d[b] {
                                acc += (ua[f + s] - ua[f]) * (va[f + s] - va[f]);
                            }
                            if c[b] == 0 || c[b] + 1 == d[b] {
                                acc += 2.0 * ua[f] * va[f];
                            }
                        }
                    }
                }
            }
            total += acc * w;
        }
    }
    total * vol
}

/// `sum (n - mean n) grad phi . u` over faces, with `n` averaged to faces.
pub fn buoyancy_work(u: &VectorField, n: &ScalarField, params: &FluidParams) -> f64 {
    let nbar = n.mean();
    let nf = face_average(&n.map(|v| v - nbar));
    let g = u.grid();
    let mut s = 0.0;
    for a in 0..g.dim() {
        for ((x, y), z) in nf
            .comp(a)
            .iter()
            .zip(params.grad_phi.comp(a))
            .zip(u.comp(a))
        {
            s += x * y * z;
        }
    }
    s * g.volume_element()
}

/// `| (||u_next||^2 - ||u_prev||^2) / (2 dt) - (-D_u + W) |` with the
/// dissipation `D_u` and buoyancy work `W` evaluated at `u_prev`.
pub fn energy_identity_residual(
    u_prev: &VectorField,
    u_next: &VectorField,
    n: &ScalarField,
    params: &FluidParams,
    dt: f64,
) -> f64 {
    let lhs = 0.5 * (u_next.norm_l2_sq() - u_prev.norm_l2_sq()) / dt;
    let rhs = -velocity_form(u_prev, u_prev) + buoyancy_work(u_prev, n, params);
    (lhs - rhs).abs()
}

/// Maximum absolute discrete divergence.
pub fn max_divergence(u: &VectorField) -> f64 {
    divergence_fc(u).max_abs()
}

/// Discrete curl of a stream function sampled at the cell vertices (2D) or
/// of a vector potential on the edges (3D, only the `z` component is used:
/// `A = (0, 0, psi)`), which is exactly solenoidal under `divergence_fc`.
///
/// `psi` is evaluated at `(x, y)` vertex positions and must vanish on the
/// walls for the result to satisfy no-penetration.
pub fn curl_of_stream(grid: &GridRef, psi: impl Fn(f64, f64, f64) -> f64) -> VectorField {
    let g = grid;
    let h = g.spacing();
    let mut u = VectorField::zeros(g);
    // u_x = d psi / dy at x-faces, u_y = -d psi / dx at y-faces
    for a in 0..2 {
        let d = g.face_dims(a);
        let comp = u.comp_mut(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let z = if g.dim() == 3 {
                        (k as f64 + 0.5) * h[2]
                    } else {
                        0.0
                    };
                    let f = g.face_index(a, i, j, k);
                    comp[f] = if a == 0 {
                        let x = i as f64 * h[0];
                        let (y0, y1) = (j as f64 * h[1], (j + 1) as f64 * h[1]);
                        (psi(x, y1, z) - psi(x, y0, z)) / h[1]
                    } else {
                        let y = j as f64 * h[1];
                        let (x0, x1) = (i as f64 * h[0], (i + 1) as f64 * h[0]);
                        -(psi(x1, y, z) - psi(x0, y, z)) / h[0]
                    };
                }
            }
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(g: &GridRef, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = VectorField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
        w.clear_boundary();
        w
    }

    fn bump(s: f64) -> f64 {
        s * s * (1.0 - s) * (1.0 - s)
    }

    fn swirl(g: &GridRef) -> VectorField {
        curl_of_stream(g, |x, y, _| bump(x) * bump(y))
    }

    #[test]
    fn gradients_project_to_zero() {
        let g = make_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let mut solver = PoissonSolver::new(&g);
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).sin() * x[1] * x[1]);
        let w = gradient_cc(&f);
        let p = helmholtz_project(&w, &mut solver).unwrap();
        assert!(p.field.norm_l2_sq().sqrt() <= 1e-8 * w.norm_l2_sq().sqrt());
    }

    #[test]
    fn solenoidal_fields_are_fixed() {
        for g in [
            make_grid(2, &[1.0, 1.0], &[16, 12]).unwrap(),
            make_grid(3, &[1.0, 1.0, 1.0], &[8, 8, 6]).unwrap(),
        ] {
            let mut solver = PoissonSolver::new(&g);
            let u = swirl(&g);
            assert!(max_divergence(&u) < 1e-12);
            assert_eq!(u.boundary_max_abs(), 0.0);
            let p = helmholtz_project(&u, &mut solver).unwrap();
            let diff = p.field.sub(&u).max_abs();
            assert!(diff <= 1e-9, "diff {diff}");
        }
    }

    #[test]
    fn projection_is_orthogonal_and_idempotent() {
        let g = make_grid(2, &[1.0, 2.0], &[16, 24]).unwrap();
        let mut solver = PoissonSolver::new(&g);
        let w = random_field(&g, 11);
        let pw = helmholtz_project(&w, &mut solver).unwrap().field;
        let rest = w.sub(&pw);
        let w2 = w.norm_l2_sq();
        assert!(pw.dot_vol(&rest).abs() <= 1e-9 * w2);
        assert!(max_divergence(&pw) <= 1e-9 * w2.sqrt());
        let ppw = helmholtz_project(&pw, &mut solver).unwrap().field;
        assert!(ppw.sub(&pw).max_abs() <= 1e-10);
    }

    #[test]
    fn jacobi_projection_matches_spectral() {
        let g = make_grid(3, &[1.0, 1.0, 1.0], &[6, 6, 6]).unwrap();
        let mut s1 = PoissonSolver::new(&g);
        let mut s2 = PoissonSolver::with_options(&g, 1e-12, 5000, Preconditioner::Jacobi);
        let w = random_field(&g, 5);
        let a = helmholtz_project(&w, &mut s1).unwrap();
        let b = helmholtz_project(&w, &mut s2).unwrap();
        assert!(a.field.sub(&b.field).max_abs() < 1e-9);
        assert!(b.stats.iterations > a.stats.iterations);
    }

    #[test]
    fn vector_laplacian_form_is_consistent() {
        let g = make_grid(2, &[1.0, 1.5], &[8, 10]).unwrap();
        let u = random_field(&g, 2);
        let v = random_field(&g, 3);
        let lap = vector_laplacian(&u);
        assert_relative_eq!(
            velocity_form(&u, &v),
            -lap.dot_vol(&v),
            max_relative = 1e-12
        );
        assert!(velocity_form(&u, &u) > 0.0);
        assert_eq!(lap.boundary_max_abs(), 0.0);
    }

    #[test]
    fn yosida_identity_at_zero_eps() {
        let g = make_grid(2, &[1.0, 1.0], &[8, 8]).unwrap();
        let mut s = PoissonSolver::new(&g);
        let u = swirl(&g);
        let y = yosida_apply(&u, 0.0, &mut s).unwrap();
        assert_eq!(y.components(), u.components());
    }

    #[test]
    fn yosida_is_nonexpansive_and_monotone() {
        let g = make_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let mut s = PoissonSolver::new(&g);
        let u = helmholtz_project(&random_field(&g, 9), &mut s)
            .unwrap()
            .field;
        let mut prev = u.norm_l2_sq().sqrt();
        for eps in [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let y = yosida_apply(&u, eps, &mut s).unwrap();
            let norm = y.norm_l2_sq().sqrt();
            assert!(norm <= prev + 1e-10, "eps {eps}: {norm} > {prev}");
            assert!(max_divergence(&y) < 1e-9);
            prev = norm;
        }
    }

    #[test]
    fn yosida_on_sine_mode() {
        // u_x = sin(pi x / Lx) sin(pi (j + 1/2) / Ny) type mode: an eigenvector
        // of the componentwise Dirichlet stencil; only its projection shrinks.
        let n = 16;
        let g = make_grid(2, &[1.0, 1.0], &[n, n]).unwrap();
        let h = 1.0 / n as f64;
        let (kx, ky) = (1.0, 2.0);
        let lam =
            4.0 / (h * h) * ((PI * kx * h / 2.0).sin().powi(2) + (PI * ky * h / 2.0).sin().powi(2));
        let v = VectorField::from_fn(&g, |a, x| {
            if a == 0 {
                (PI * kx * x[0]).sin() * (PI * ky * x[1]).sin()
            } else {
                0.0
            }
        });
        let lap = vector_laplacian(&v);
        let mut check = v.scaled(-lam);
        check.axpy(-1.0, &lap);
        assert!(check.max_abs() < 1e-9 * lam, "not an eigenvector");
        let mut s = PoissonSolver::new(&g);
        for eps in [0.01, 0.1] {
            let y = yosida_apply(&v, eps, &mut s).unwrap();
            let expect = helmholtz_project(&v, &mut s)
                .unwrap()
                .field
                .scaled(1.0 / (1.0 + eps * lam));
            let err = y.sub(&expect).norm_l2_sq().sqrt() / expect.norm_l2_sq().sqrt();
            assert!(err <= 1e-6, "eps {eps}: rel err {err}");
        }
    }

    fn params(
        g: &GridRef,
        kappa: f64,
        eps: f64,
        phi: impl Fn(&crate::grid::Point) -> f64,
    ) -> FluidParams {
        FluidParams::new(kappa, eps, ScalarField::from_fn(g, phi)).unwrap()
    }

    #[test]
    fn gradient_forcing_is_annihilated() {
        let g = make_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let mut s = PoissonSolver::new(&g);
        let p = params(&g, 1.0, 0.1, |x| x[1]);
        let u = VectorField::zeros(&g);
        let n = ScalarField::constant(&g, 2.0);
        let step = ns_substep(&u, &n, &p, 1e-4, &mut s).unwrap();
        assert!(step.u.max_abs() < 1e-12);
        // P recovers n grad phi = grad(2 y), mean-free
        let expect = ScalarField::from_fn(&g, |x| 2.0 * (x[1] - 0.5));
        for (a, b) in step.pressure.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn quiescent_stays_quiescent() {
        let g = make_grid(3, &[1.0, 1.0, 1.0], &[6, 6, 6]).unwrap();
        let mut s = PoissonSolver::new(&g);
        let p = params(&g, 1.0, 0.1, |x| x[0] * x[2]);
        let step = ns_substep(
            &VectorField::zeros(&g),
            &ScalarField::zeros(&g),
            &p,
            1e-3,
            &mut s,
        )
        .unwrap();
        assert_eq!(step.u.max_abs(), 0.0);
        assert_eq!(step.pressure.max_abs(), 0.0);
    }

    #[test]
    fn cfl_violation_rejected() {
        let g = make_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let mut s = PoissonSolver::new(&g);
        let p = params(&g, 0.0, 0.0, |_| 0.0);
        let r = ns_substep(
            &VectorField::zeros(&g),
            &ScalarField::zeros(&g),
            &p,
            0.1,
            &mut s,
        );
        assert!(matches!(r, Err(Error::Cfl { .. })));
    }

    #[test]
    fn stokes_limit_ignores_eps() {
        let g = make_grid(2, &[1.0, 1.0], &[12, 12]).unwrap();
        let u = swirl(&g).scaled(5.0);
        let n = ScalarField::from_fn(&g, |x| 1.0 + x[0]);
        let a = {
            let mut s = PoissonSolver::new(&g);
            ns_substep(&u, &n, &params(&g, 0.0, 0.0, |x| x[1]), 1e-4, &mut s).unwrap()
        };
        let b = {
            let mut s = PoissonSolver::new(&g);
            ns_substep(&u, &n, &params(&g, 0.0, 0.3, |x| x[1]), 1e-4, &mut s).unwrap()
        };
        assert_eq!(a.u.components(), b.u.components());
    }

    #[test]
    fn substep_keeps_no_slip_and_divergence() {
        let g = make_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let mut s = PoissonSolver::new(&g);
        let p = params(&g, 1.0, 0.05, |x| x[0] + x[1] * x[1]);
        let mut u = swirl(&g).scaled(20.0);
        let n = ScalarField::from_fn(&g, |x| 1.0 + (3.0 * x[0]).cos());
        for _ in 0..20 {
            u = ns_substep(&u, &n, &p, 5e-4, &mut s).unwrap().u;
            assert_eq!(u.boundary_max_abs(), 0.0);
            assert!(max_divergence(&u) <= 1e-9);
        }
    }

    #[test]
    fn energy_identity_zero_and_refinement() {
        let g = make_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let p = params(&g, 0.0, 0.0, |x| x[1]);
        let n = ScalarField::constant(&g, 1.0);
        let z = VectorField::zeros(&g);
        assert_eq!(energy_identity_residual(&z, &z, &n, &p, 1e-3), 0.0);
        assert_eq!(buoyancy_work(&swirl(&g), &n, &p), 0.0);

        let u0 = swirl(&g).scaled(10.0);
        let resid = |dt: f64| {
            let mut s = PoissonSolver::new(&g);
            let u1 = ns_substep(&u0, &n, &p, dt, &mut s).unwrap().u;
            energy_identity_residual(&u0, &u1, &n, &p, dt)
        };
        let dt = 5e-4;
        let ratio = resid(dt) / resid(dt / 2.0);
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn convection_skew_defect_shrinks_with_h() {
        let defect = |n: usize| {
            let g = make_grid(2, &[1.0, 1.0], &[n, n]).unwrap();
            let u = curl_of_stream(&g, |x, y, _| {
                (PI * x).sin().powi(2) * (PI * y).sin().powi(2)
            });
            let c = convection(&u, &u, ConvectionScheme::Upwind);
            let du = velocity_form(&u, &u).sqrt();
            c.dot_vol(&u).abs() / (u.norm_l2_sq() * du)
        };
        let (a, b) = (defect(16), defect(32));
        assert!(b < 0.7 * a, "{a} -> {b}");
    }

    #[test]
    fn convection_of_uniform_flow() {
        // interior-only check: u_x = 1 everywhere, w = u → (w.grad)u_x vanishes
        // away from the walls in x
        let g = make_grid(2, &[1.0, 1.0], &[8, 8]).unwrap();
        let w = VectorField::from_fn(&g, |a, _| if a == 0 { 1.0 } else { 0.0 });
        let u = w.clone();
        let c = convection(&w, &u, ConvectionScheme::Centered);
        for (idx, v) in c.comp(0).iter().enumerate() {
            let co = g.face_coords(0, idx);
            if co[0] >= 2 && co[0] <= 6 {
                assert_eq!(*v, 0.0);
            }
        }
    }
}
