//! Conservative explicit updates of the cell density `n` and the signal `c`.
//!
//! Everything is written as a flux divergence over faces whose
//! boundary-normal entries are exactly zero, so the discrete mass of `n`
//! telescopes and is conserved to roundoff.

use crate::error::{invalid, Error, Result};
use crate::fluid::velocity_form;
use crate::grid::{check_same, divergence_fc, gradient_cc, ScalarField, VectorField};
use crate::sensitivity::{
    chemotactic_flux_with, FaceInterp, RegularizationParams, SensitivitySpec,
};

/// Relative slack allowed below zero before positivity counts as lost.
pub const POSITIVITY_SLACK: f64 = 1e-12;

/// Upwind advective flux `f u` on faces.
pub fn advective_flux(f: &ScalarField, u: &VectorField) -> VectorField {
    let g = f.grid().clone();
    let mut out = VectorField::zeros(&g);
    let v = f.values();
    for a in 0..g.dim() {
        let d = g.face_dims(a);
        let cs = g.stride(a);
        let ua = u.comp(a);
        let o = out.comp_mut(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let c = [i, j, k];
                    if c[a] == 0 || c[a] == d[a] - 1 {
                        continue;
                    }
                    let fi = g.face_index(a, i, j, k);
                    let w = ua[fi];
                    if w == 0.0 {
                        continue;
                    }
                    let hi = g.cell_index(i, j, k);
                    o[fi] = w * if w > 0.0 { v[hi - cs] } else { v[hi] };
                }
            }
        }
    }
    out
}

/// Explicit stability limits that do not depend on the chemotactic drift.
pub(crate) fn transport_dt_limit(u: &VectorField) -> f64 {
    crate::fluid::fluid_dt_limit(u)
}

fn check_positive(field: &'static str, f: &ScalarField, time: f64) -> Result<()> {
    let threshold = POSITIVITY_SLACK * f.max().max(0.0);
    let min = f.min();
    if min < -threshold {
        return Err(Error::Positivity {
            field,
            time,
            min,
            threshold,
        });
    }
    Ok(())
}

/// One explicit step of
/// `n_t + u . grad n = Lap n - div(n F_eps(n) S_eps grad c)`.
pub fn step_n(
    n: &ScalarField,
    c: &ScalarField,
    u: &VectorField,
    spec: &SensitivitySpec,
    reg: &RegularizationParams,
    dt: f64,
) -> Result<ScalarField> {
    check_same(n.grid(), c.grid())?;
    check_same(n.grid(), u.grid())?;
    check_positive("n", n, 0.0).map_err(|_| invalid("step_n needs n >= 0"))?;
    let chemo = chemotactic_flux_with(n, c, spec, reg, FaceInterp::Upwind);
    step_n_with(n, u, &chemo.flux, chemo.max_drift, dt, None, 0.0)
}

/// Update with a precomputed chemotactic flux; `source` is an optional
/// cell forcing (manufactured solutions).
pub(crate) fn step_n_with(
    n: &ScalarField,
    u: &VectorField,
    chemo: &VectorField,
    max_drift: f64,
    dt: f64,
    source: Option<&ScalarField>,
    time: f64,
) -> Result<ScalarField> {
    let h = n.grid().h_min();
    let mut limit = transport_dt_limit(u);
    if max_drift > 0.0 {
        limit = limit.min(h / max_drift);
    }
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let mut flux = gradient_cc(n);
    flux.axpy(-1.0, chemo);
    flux.axpy(-1.0, &advective_flux(n, u));
    let div = divergence_fc(&flux);
    let mut out = n.values().to_vec();
    for (o, d) in out.iter_mut().zip(div.values()) {
        *o += dt * d;
    }
    if let Some(s) = source {
        for (o, s) in out.iter_mut().zip(s.values()) {
            *o += dt * s;
        }
    }
    let next = ScalarField::from_raw(n.grid(), out);
    if !next.is_finite() {
        return Err(Error::NonFinite { field: "n" });
    }
    if source.is_none() {
        check_positive("n", &next, time + dt)?;
    }
    Ok(next)
}

/// One explicit step of `c_t + u . grad c = Lap c - c + n`.
pub fn step_c(c: &ScalarField, n: &ScalarField, u: &VectorField, dt: f64) -> Result<ScalarField> {
    check_same(n.grid(), c.grid())?;
    check_same(n.grid(), u.grid())?;
    step_c_with(c, n, u, dt, None, 0.0)
}

pub(crate) fn step_c_with(
    c: &ScalarField,
    n: &ScalarField,
    u: &VectorField,
    dt: f64,
    source: Option<&ScalarField>,
    time: f64,
) -> Result<ScalarField> {
    let limit = transport_dt_limit(u).min(1.0);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let mut flux = gradient_cc(c);
    flux.axpy(-1.0, &advective_flux(c, u));
    let div = divergence_fc(&flux);
    let mut out = c.values().to_vec();
    for ((o, d), nv) in out.iter_mut().zip(div.values()).zip(n.values()) {
        *o += dt * (d - *o + nv);
    }
    if let Some(s) = source {
        for (o, s) in out.iter_mut().zip(s.values()) {
            *o += dt * s;
        }
    }
    let next = ScalarField::from_raw(c.grid(), out);
    if !next.is_finite() {
        return Err(Error::NonFinite { field: "c" });
    }
    if source.is_none() {
        check_positive("c", &next, time + dt)?;
    }
    Ok(next)
}

/// Discrete dissipation integrals.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dissipation {
    /// `sum n_f^(2 alpha - 2) |grad n|^2 vol` over faces, `n_f` the mean of
    /// the two adjacent cells.
    pub d_n: f64,
    /// `sum |grad c|^2 vol` over faces; equals `-<c, Lap_h c>`.
    pub d_c: f64,
    /// Discrete `int |grad u|^2` including the no-slip wall terms.
    pub d_u: f64,
}

pub fn dissipation_integrals(
    n: &ScalarField,
    c: &ScalarField,
    u: &VectorField,
    alpha: f64,
) -> Dissipation {
    let g = n.grid();
    let vol = g.volume_element();
    let gn = gradient_cc(n);
    let gc = gradient_cc(c);
    let expo = 2.0 * alpha - 2.0;
    let nv = n.values();
    let mut d_n = 0.0;
    let mut d_c = 0.0;
    for a in 0..g.dim() {
        let d = g.face_dims(a);
        let cs = g.stride(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let co = [i, j, k];
                    if co[a] == 0 || co[a] == d[a] - 1 {
                        continue;
                    }
                    let f = g.face_index(a, i, j, k);
                    let w = if expo == 0.0 {
                        1.0
                    } else {
                        let hi = g.cell_index(i, j, k);
                        (0.5 * (nv[hi] + nv[hi - cs])).max(0.0).powf(expo)
                    };
                    d_n += w * gn.comp(a)[f].powi(2);
                    d_c += gc.comp(a)[f].powi(2);
                }
            }
        }
    }
    Dissipation {
        d_n: d_n * vol,
        d_c: d_c * vol,
        d_u: velocity_form(u, u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::curl_of_stream;
    use crate::grid::{make_grid, GridRef};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn unit(n: usize) -> GridRef {
        make_grid(2, &[1.0, 1.0], &[n, n]).unwrap()
    }

    fn spec() -> SensitivitySpec {
        SensitivitySpec::rotational(0.8, 1.0, 0.7).unwrap()
    }

    fn swirl(g: &GridRef, amp: f64) -> VectorField {
        let p = |s: f64| s * s * (1.0 - s) * (1.0 - s);
        curl_of_stream(g, |x, y, _| amp * p(x) * p(y))
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = unit(8);
        let reg = RegularizationParams::new(0.1, &g).unwrap();
        let n = ScalarField::constant(&g, 1.7);
        let c = ScalarField::constant(&g, 1.7);
        let u = VectorField::zeros(&g);
        let dt = 1e-3;
        assert_eq!(
            step_n(&n, &c, &u, &spec(), &reg, dt).unwrap().values(),
            n.values()
        );
        assert_eq!(step_c(&c, &n, &u, dt).unwrap().values(), c.values());
    }

    #[test]
    fn pure_decay_of_c() {
        let g = unit(8);
        let u = VectorField::zeros(&g);
        let n = ScalarField::zeros(&g);
        let mut c = ScalarField::constant(&g, 2.0);
        let dt = 0.003;
        for _ in 0..10 {
            c = step_c(&c, &n, &u, dt).unwrap();
        }
        let expect = 2.0 * (1.0f64 - dt).powi(10);
        for v in c.values() {
            assert_relative_eq!(*v, expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn mass_is_conserved_with_flow_and_chemotaxis() {
        let g = unit(24);
        let reg = RegularizationParams::new(0.1, &g).unwrap();
        let mut n = ScalarField::from_fn(&g, |x| {
            1.0 + 3.0 * (-((x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2)) / 0.02).exp()
        });
        let mut c = ScalarField::from_fn(&g, |x| 1.0 + x[0] * x[1]);
        let u = swirl(&g, 30.0);
        let m0 = n.sum();
        let dt = 0.2 * g.h_min().powi(2);
        for _ in 0..200 {
            let nn = step_n(&n, &c, &u, &spec(), &reg, dt).unwrap();
            c = step_c(&c, &n, &u, dt).unwrap();
            n = nn;
        }
        assert!((n.sum() - m0).abs() <= 1e-12 * m0);
        assert!(n.min() >= 0.0);
    }

    #[test]
    fn c_quasi_mass_bound() {
        let g = unit(16);
        let u = swirl(&g, 10.0);
        let n = ScalarField::from_fn(&g, |x| 2.0 + x[0]);
        let mut c = ScalarField::from_fn(&g, |x| 0.5 * x[1]);
        let dt = 0.2 * g.h_min().powi(2);
        let bound = n.sum().max(c.sum());
        for _ in 0..100 {
            let next = step_c(&c, &n, &u, dt).unwrap();
            assert!(next.sum() <= (1.0 - dt) * c.sum() + dt * n.sum() + 1e-12);
            assert!(next.sum() <= bound + 1e-10);
            c = next;
        }
    }

    #[test]
    fn cfl_and_sign_errors() {
        let g = unit(16);
        let reg = RegularizationParams::new(0.1, &g).unwrap();
        let n = ScalarField::constant(&g, 1.0);
        let u = VectorField::zeros(&g);
        assert!(matches!(
            step_n(&n, &n, &u, &spec(), &reg, 0.1),
            Err(Error::Cfl { .. })
        ));
        assert!(matches!(step_c(&n, &n, &u, 0.1), Err(Error::Cfl { .. })));
        let neg = ScalarField::constant(&g, -1.0);
        assert!(step_n(&neg, &n, &u, &spec(), &reg, 1e-4).is_err());
    }

    /// Dense Neumann stencil of one axis.
    fn dense_laplacian(n: usize, h: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if i > 0 {
                m[(i, i - 1)] = 1.0;
                m[(i, i)] -= 1.0;
            }
            if i + 1 < n {
                m[(i, i + 1)] = 1.0;
                m[(i, i)] -= 1.0;
            }
        }
        m / (h * h)
    }

    #[test]
    fn heat_kernel_against_dense_oracle() {
        let nx = 32;
        let g = make_grid(2, &[1.0, 1.0], &[nx, 4]).unwrap();
        let reg = RegularizationParams::new(0.1, &g).unwrap();
        let s = SensitivitySpec::scalar(0.0, 1.0).unwrap();
        let h = 1.0 / nx as f64;
        let gauss = |x: f64| (-(x - 0.4).powi(2) / (2.0 * 0.05f64.powi(2))).exp();
        let mut n = ScalarField::from_fn(&g, |x| gauss(x[0]));
        let c = ScalarField::zeros(&g);
        let u = VectorField::zeros(&g);
        let dt = 0.2 * h * h;
        let steps = 100;
        for _ in 0..steps {
            n = step_n(&n, &c, &u, &s, &reg, dt).unwrap();
        }
        let lap = dense_laplacian(nx, h);
        let n0 = nalgebra::DVector::from_fn(nx, |i, _| gauss((i as f64 + 0.5) * h));
        let euler = (DMatrix::identity(nx, nx) + &lap * dt).pow(steps as u32) * &n0;
        let exact = (&lap * (dt * steps as f64)).exp() * &n0;
        // same stencil, same time stepping: agreement to roundoff
        for j in 0..4 {
            for i in 0..nx {
                let v = n.values()[g.cell_index(i, j, 0)];
                assert!((v - euler[i]).abs() <= 1e-8, "euler mismatch at {i}");
            }
        }
        // against the exponential: bounded by the worst per-mode gap
        let eig = lap.clone().symmetric_eigenvalues();
        let m = steps;
        let gap = eig
            .iter()
            .map(|l| ((1.0 + dt * l).powi(m) - (dt * m as f64 * l).exp()).abs())
            .fold(0.0, f64::max);
        let err = (0..nx)
            .map(|i| (n.values()[i] - exact[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(
            err <= gap * n0.norm() * (1.0 + 1e-8) + 1e-12,
            "err {err} gap {gap}"
        );
    }

    #[test]
    fn dissipation_examples() {
        let g = unit(16);
        let u = VectorField::zeros(&g);
        let k = ScalarField::constant(&g, 3.0);
        assert_eq!(
            dissipation_integrals(&k, &k, &u, 1.0),
            Dissipation::default()
        );
        // c = x: unit gradient on every interior x-face, zero on the walls
        let c = ScalarField::from_fn(&g, |x| x[0]);
        let d = dissipation_integrals(&k, &c, &u, 1.0);
        assert_relative_eq!(d.d_c, 1.0 - 1.0 / 16.0, max_relative = 1e-12);
        // alpha = 1: weight identically 1
        let n = ScalarField::from_fn(&g, |x| 1.0 + x[1] * x[1]);
        let d1 = dissipation_integrals(&n, &c, &u, 1.0);
        assert_relative_eq!(d1.d_n, gradient_cc(&n).norm_l2_sq(), max_relative = 1e-14);
        let d2 = dissipation_integrals(&n, &c, &u, 1.5);
        assert!(d2.d_n > d1.d_n);
        let w = swirl(&g, 1.0);
        assert!(dissipation_integrals(&k, &k, &w, 1.0).d_u > 0.0);
    }
}
