//! Tensor-valued chemotactic sensitivity and its regularization.
//!
//! The sensitivity is always of the form
//! `S(x, n, c) = C_S (1 + n)^(-alpha) * profile(n) * M`, where `M` is the
//! identity or a planar rotation and `|profile| <= 1`. With the spectral norm
//! this gives `|S| <= C_S (1 + n)^(-alpha)` by construction. The regularized
//! flux multiplies by `F_eps(n) = (1 + eps n)^-3` and by a wall cutoff
//! `rho_eps(x)` that vanishes on the boundary.

use crate::error::{invalid, Result};
use crate::grid::{
    check_same, gradient_cc, transverse_at_faces, Grid, Point, ScalarField, VectorField,
};

pub type Tensor = [[f64; 3]; 3];

#[derive(Clone, Debug, PartialEq)]
pub enum SensitivityKind {
    /// `C_S (1+n)^-alpha * I`.
    ScalarSaturating,
    /// `C_S (1+n)^-alpha * R(theta)`; in 3D the rotation is about the z axis.
    Rotational { theta: f64 },
    /// `C_S (1+n)^-alpha * f(n) * R(theta)` with `f` linearly interpolated
    /// from `(n, f)` pairs, `|f| <= 1`, held constant past the last node.
    UserTable { theta: f64, table: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivitySpec {
    kind: SensitivityKind,
    cs: f64,
    alpha: f64,
}

impl SensitivitySpec {
    /// `cs = 0` switches chemotaxis off.
    pub fn new(kind: SensitivityKind, cs: f64, alpha: f64) -> Result<Self> {
        if !(cs.is_finite() && cs >= 0.0) {
            return Err(invalid(format!("C_S must be finite and >= 0, got {cs}")));
        }
        if !(alpha.is_finite() && alpha >= 1.0) {
            return Err(invalid(format!(
                "alpha must be >= 1 for global solvability, got {alpha}"
            )));
        }
        match &kind {
            SensitivityKind::ScalarSaturating => {}
            SensitivityKind::Rotational { theta } => {
                if !theta.is_finite() {
                    return Err(invalid("rotation angle must be finite"));
                }
            }
            SensitivityKind::UserTable { theta, table } => {
                if !theta.is_finite() {
                    return Err(invalid("rotation angle must be finite"));
                }
                if table.is_empty() {
                    return Err(invalid("sensitivity table is empty"));
                }
                if table[0].0 != 0.0 {
                    return Err(invalid("sensitivity table must start at n = 0"));
                }
                for w in table.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(invalid("sensitivity table nodes must increase"));
                    }
                }
                if table
                    .iter()
                    .any(|&(n, f)| !n.is_finite() || !(f.abs() <= 1.0))
                {
                    return Err(invalid("sensitivity table factors must lie in [-1, 1]"));
                }
            }
        }
        Ok(Self { kind, cs, alpha })
    }

    pub fn scalar(cs: f64, alpha: f64) -> Result<Self> {
        Self::new(SensitivityKind::ScalarSaturating, cs, alpha)
    }

    pub fn rotational(cs: f64, alpha: f64, theta: f64) -> Result<Self> {
        Self::new(SensitivityKind::Rotational { theta }, cs, alpha)
    }

    pub fn kind(&self) -> &SensitivityKind {
        &self.kind
    }

    pub fn cs(&self) -> f64 {
        self.cs
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        match &self.kind {
            SensitivityKind::ScalarSaturating => 0.0,
            SensitivityKind::Rotational { theta } | SensitivityKind::UserTable { theta, .. } => {
                *theta
            }
        }
    }

    /// `C_S (1+n)^-alpha`.
    pub fn envelope(&self, n: f64) -> f64 {
        self.cs * (1.0 + n).powf(-self.alpha)
    }

    pub(crate) fn profile(&self, n: f64) -> f64 {
        match &self.kind {
            SensitivityKind::UserTable { table, .. } => interpolate(table, n),
            _ => 1.0,
        }
    }

    /// Scalar factor of S: envelope times profile.
    pub(crate) fn magnitude(&self, n: f64) -> f64 {
        self.envelope(n) * self.profile(n)
    }

    /// Direction matrix `M` (identity or rotation), padded to 3x3.
    pub fn direction(&self, dim: usize) -> Tensor {
        let theta = self.theta();
        let (s, c) = theta.sin_cos();
        let mut m = [[0.0; 3]; 3];
        m[0][0] = c;
        m[0][1] = -s;
        m[1][0] = s;
        m[1][1] = c;
        if dim == 3 {
            m[2][2] = 1.0;
        }
        m
    }

    /// Unregularized `S(x, n, c)`.
    pub fn eval(&self, dim: usize, n: f64) -> Tensor {
        scale(self.direction(dim), self.magnitude(n))
    }
}

fn interpolate(table: &[(f64, f64)], n: f64) -> f64 {
    if n <= table[0].0 {
        return table[0].1;
    }
    for w in table.windows(2) {
        let ((n0, f0), (n1, f1)) = (w[0], w[1]);
        if n <= n1 {
            return f0 + (f1 - f0) * (n - n0) / (n1 - n0);
        }
    }
    table[table.len() - 1].1
}

fn scale(mut t: Tensor, s: f64) -> Tensor {
    t.iter_mut().flatten().for_each(|v| *v *= s);
    t
}

/// `F_eps(s) = (1 + eps s)^-3`.
pub fn f_eps(s: f64, eps: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(invalid(format!("F_eps needs s >= 0, got {s}")));
    }
    if !(eps >= 0.0) {
        return Err(invalid(format!("F_eps needs eps >= 0, got {eps}")));
    }
    Ok(f_eps_unchecked(s, eps))
}

#[inline]
pub(crate) fn f_eps_unchecked(s: f64, eps: f64) -> f64 {
    let b = 1.0 + eps * s;
    1.0 / (b * b * b)
}

/// Regularization level and the width of the wall layer of the cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationParams {
    eps: f64,
    delta: f64,
}

impl RegularizationParams {
    /// Layer width `delta = min(eps * min L, min L / 4)`.
    pub fn new(eps: f64, grid: &Grid) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
        }
        let l = grid.min_extent();
        Ok(Self {
            eps,
            delta: (eps * l).min(l / 4.0),
        })
    }

    pub fn with_delta(eps: f64, delta: f64, grid: &Grid) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
        }
        if !(delta > 0.0 && delta <= grid.min_extent() / 4.0) {
            return Err(invalid(format!(
                "cutoff width must lie in (0, min L / 4], got {delta}"
            )));
        }
        Ok(Self { eps, delta })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Quintic smoothstep on [0, 1], C2 at both ends.
#[inline]
pub(crate) fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

#[inline]
pub(crate) fn smoothstep_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (s - 1.0) * (s - 1.0)
    }
}

#[inline]
pub(crate) fn cutoff_unchecked(x: &Point, grid: &Grid, reg: &RegularizationParams) -> f64 {
    smoothstep(grid.wall_distance(x) / reg.delta)
}

/// Wall cutoff: 0 on the boundary, 1 at distance >= delta, smooth between.
pub fn cutoff_rho(x: &Point, grid: &Grid, reg: &RegularizationParams) -> Result<f64> {
    if !grid.contains(x) {
        return Err(invalid(format!("point {x:?} lies outside the box")));
    }
    Ok(cutoff_unchecked(x, grid, reg))
}

/// `S_eps(x, n, c) = rho_eps(x) S(x, n, c)`.
pub fn eval_s_eps(
    spec: &SensitivitySpec,
    reg: &RegularizationParams,
    grid: &Grid,
    x: &Point,
    n: f64,
    c: f64,
) -> Result<Tensor> {
    if !(n >= 0.0 && n.is_finite()) || !(c >= 0.0 && c.is_finite()) {
        return Err(invalid(format!(
            "S_eps needs finite n, c >= 0, got n={n}, c={c}"
        )));
    }
    let rho = cutoff_rho(x, grid, reg)?;
    Ok(scale(spec.eval(grid.dim(), n), rho))
}

/// How the cell density is reconstructed on faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceInterp {
    /// Take the cell the drift comes from.
    Upwind,
    /// Arithmetic mean of the two neighbours.
    Centered,
}

pub(crate) struct FluxResult {
    pub flux: VectorField,
    /// max over faces of `|F_eps S_eps grad c|` in the face-normal direction.
    pub max_drift: f64,
}

/// Face flux `n F_eps(n) S_eps(x, n, c) grad c`, normal component per face.
pub fn chemotactic_flux(
    n: &ScalarField,
    c: &ScalarField,
    spec: &SensitivitySpec,
    reg: &RegularizationParams,
) -> Result<VectorField> {
    check_same(n.grid(), c.grid())?;
    if n.min() < 0.0 {
        return Err(invalid("chemotactic flux needs n >= 0"));
    }
    Ok(chemotactic_flux_with(n, c, spec, reg, FaceInterp::Upwind).flux)
}

pub(crate) fn chemotactic_flux_with(
    n: &ScalarField,
    c: &ScalarField,
    spec: &SensitivitySpec,
    reg: &RegularizationParams,
    interp: FaceInterp,
) -> FluxResult {
    let g = n.grid().clone();
    let dim = g.dim();
    let mut flux = VectorField::zeros(&g);
    let mut max_drift: f64 = 0.0;
    if spec.cs() == 0.0 {
        return FluxResult { flux, max_drift };
    }
    let grad = gradient_cc(c);
    let m = spec.direction(dim);
    let nv = n.values();
    let eps = reg.eps();
    for a in 0..dim {
        // transverse gradient components only matter when M mixes axes
        let trans: Vec<Option<Vec<f64>>> = (0..dim)
            .map(|b| {
                if b != a && m[a][b] != 0.0 {
                    Some(transverse_at_faces(&grad, a, b))
                } else {
                    None
                }
            })
            .collect();
        let d = g.face_dims(a);
        let cs = g.stride(a);
        let ga = grad.comp(a);
        let out = flux.comp_mut(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let coords = [i, j, k];
                    if coords[a] == 0 || coords[a] == d[a] - 1 {
                        continue;
                    }
                    let f = g.face_index(a, i, j, k);
                    let mut dir = m[a][a] * ga[f];
                    for (b, t) in trans.iter().enumerate() {
                        if let Some(t) = t {
                            dir += m[a][b] * t[f];
                        }
                    }
                    if dir == 0.0 {
                        continue;
                    }
                    let rho = cutoff_unchecked(&g.face_center(a, f), &g, reg);
                    if rho == 0.0 {
                        continue;
                    }
                    let hi = g.cell_index(i, j, k);
                    let (n_lo, n_hi) = (nv[hi - cs].max(0.0), nv[hi].max(0.0));
                    let n_mid = 0.5 * (n_lo + n_hi);
                    let nf = match interp {
                        FaceInterp::Centered => n_mid,
                        FaceInterp::Upwind => {
                            let sign = spec.profile(n_mid) * dir;
                            if sign >= 0.0 {
                                n_lo
                            } else {
                                n_hi
                            }
                        }
                    };
                    let drift = f_eps_unchecked(nf, eps) * spec.magnitude(nf) * rho * dir;
                    max_drift = max_drift.max(drift.abs());
                    out[f] = nf * drift;
                }
            }
        }
    }
    FluxResult { flux, max_drift }
}
