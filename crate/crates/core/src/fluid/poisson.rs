//! Preconditioned conjugate gradients for the two linear systems of the flow
//! solve: the zero-flux pressure Poisson problem on cells and the
//! componentwise Helmholtz problem `(I - eps Lap) v = u` on faces.
//!
//! Both operators are sums of 1D second-difference matrices, one per axis,
//! so they are diagonalized exactly by products of sine/cosine bases. That
//! fast-diagonalization solve is the default preconditioner; with it CG
//! converges in one or two iterations. Jacobi is kept for cross-checks and
//! for the eigenvalue iteration, which must not lean on the analytic basis.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridRef, ScalarField};

/// Boundary treatment of one axis of a separable operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum AxisBc {
    /// Cell-centered unknowns, zero flux through the walls.
    Neumann,
    /// Face unknowns normal to this axis; wall faces are fixed at 0.
    DirichletFaces,
    /// Cell-centered unknowns with the mirror ghost `-v` beyond each wall.
    DirichletGhost,
}

impl AxisBc {
    fn unknowns(self, cells: usize) -> usize {
        match self {
            AxisBc::DirichletFaces => cells - 1,
            _ => cells,
        }
    }

    /// Value of the out-of-range neighbour given the boundary unknown `v`.
    #[inline]
    fn beyond(self, v: f64) -> f64 {
        match self {
            AxisBc::Neumann => v,
            AxisBc::DirichletFaces => 0.0,
            AxisBc::DirichletGhost => -v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    Jacobi,
    /// Exact inverse of the separable operator via sine/cosine bases.
    Spectral,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||` (0 for a zero right-hand side).
    pub residual: f64,
}

/// `alpha I + beta (-Lap_h)` on a compact array with per-axis boundary rules.
#[derive(Clone, Debug)]
pub(crate) struct SeparableOperator {
    dim: usize,
    dims: [usize; 3],
    inv_h2: [f64; 3],
    bcs: [AxisBc; 3],
    alpha: f64,
    beta: f64,
}

impl SeparableOperator {
    pub fn new(grid: &Grid, bcs: [AxisBc; 3], alpha: f64, beta: f64) -> Self {
        let dim = grid.dim();
        let cells = grid.cells3();
        let mut dims = [1; 3];
        let mut inv_h2 = [0.0; 3];
        for a in 0..dim {
            dims[a] = bcs[a].unknowns(cells[a]);
            let h = grid.spacing()[a];
            inv_h2[a] = 1.0 / (h * h);
        }
        Self {
            dim,
            dims,
            inv_h2,
            bcs,
            alpha,
            beta,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    fn singular(&self) -> bool {
        self.alpha == 0.0 && (0..self.dim).all(|a| self.bcs[a] == AxisBc::Neumann)
    }

    fn stride(&self, a: usize) -> usize {
        match a {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    /// `y = -Lap_h x` (no alpha/beta scaling).
    pub fn apply_neg_laplacian(&self, x: &[f64], y: &mut [f64]) {
        let d = self.dims;
        y.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..self.dim {
            let s = self.stride(a);
            let w = self.inv_h2[a];
            let bc = self.bcs[a];
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        let idx = i + d[0] * (j + d[1] * k);
                        let pos = [i, j, k][a];
                        let v = x[idx];
                        let lo = if pos == 0 { bc.beyond(v) } else { x[idx - s] };
                        let hi = if pos + 1 == d[a] {
                            bc.beyond(v)
                        } else {
                            x[idx + s]
                        };
                        y[idx] += (2.0 * v - lo - hi) * w;
                    }
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_neg_laplacian(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.alpha * xi + self.beta * *yi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let d = self.dims;
        let mut diag = vec![0.0; self.len()];
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let idx = i + d[0] * (j + d[1] * k);
                    let mut s = 0.0;
                    for a in 0..self.dim {
                        let pos = [i, j, k][a];
                        let ends = (pos == 0) as u8 + (pos + 1 == d[a]) as u8;
                        let coef = match self.bcs[a] {
                            AxisBc::Neumann => 2.0 - ends as f64,
                            AxisBc::DirichletFaces => 2.0,
                            AxisBc::DirichletGhost => 2.0 + ends as f64,
                        };
                        s += coef * self.inv_h2[a];
                    }
                    diag[idx] = self.alpha + self.beta * s;
                }
            }
        }
        diag
    }
}

/// Orthonormal eigenbasis of one axis of the separable operator.
#[derive(Clone, Debug)]
struct AxisBasis {
    n: usize,
    /// `q[i * n + m]` = component `i` of eigenvector `m`.
    q: Vec<f64>,
    eig: Vec<f64>,
}

impl AxisBasis {
    fn new(bc: AxisBc, cells: usize, h: f64) -> Self {
        use std::f64::consts::PI;
        let nc = cells as f64;
        let n = bc.unknowns(cells);
        let mut q = vec![0.0; n * n];
        let mut eig = vec![0.0; n];
        for m in 0..n {
            let k = match bc {
                AxisBc::Neumann => m,
                AxisBc::DirichletFaces | AxisBc::DirichletGhost => m + 1,
            } as f64;
            let s = (PI * k / (2.0 * nc)).sin();
            eig[m] = 4.0 * s * s / (h * h);
            let mut norm = 0.0;
            for i in 0..n {
                let fi = i as f64;
                let v = match bc {
                    AxisBc::Neumann => (PI * k * (fi + 0.5) / nc).cos(),
                    AxisBc::DirichletFaces => (PI * k * (fi + 1.0) / nc).sin(),
                    AxisBc::DirichletGhost => (PI * k * (fi + 0.5) / nc).sin(),
                };
                q[i * n + m] = v;
                norm += v * v;
            }
            let inv = 1.0 / norm.sqrt();
            for i in 0..n {
                q[i * n + m] *= inv;
            }
        }
        Self { n, q, eig }
    }
}

/// Fast-diagonalization solver for a [`SeparableOperator`].
#[derive(Clone, Debug)]
pub(crate) struct SpectralSolver {
    op: SeparableOperator,
    bases: Vec<AxisBasis>,
    /// `1 / (alpha + beta * sum eig)` on the spectral grid; 0 on a null mode.
    inv_symbol: Vec<f64>,
}

impl SpectralSolver {
    pub fn new(grid: &Grid, op: SeparableOperator) -> Self {
        let bases: Vec<AxisBasis> = (0..op.dim)
            .map(|a| AxisBasis::new(op.bcs[a], grid.cells3()[a], grid.spacing()[a]))
            .collect();
        let d = op.dims;
        let mut inv_symbol = vec![0.0; op.len()];
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let idx = i + d[0] * (j + d[1] * k);
                    let mut s = 0.0;
                    for (a, b) in bases.iter().enumerate() {
                        s += b.eig[[i, j, k][a]];
                    }
                    let sym = op.alpha + op.beta * s;
                    inv_symbol[idx] = if op.singular() && idx == 0 {
                        0.0
                    } else {
                        1.0 / sym
                    };
                }
            }
        }
        Self {
            op,
            bases,
            inv_symbol,
        }
    }

    fn transform(&self, data: &mut [f64], forward: bool) {
        let d = self.op.dims;
        let mut line = Vec::new();
        let mut out = Vec::new();
        for (a, b) in self.bases.iter().enumerate() {
            let n = b.n;
            let s = self.op.stride(a);
            line.resize(n, 0.0);
            out.resize(n, 0.0);
            let mut others = d;
            others[a] = 1;
            for k in 0..others[2] {
                for j in 0..others[1] {
                    for i in 0..others[0] {
                        let base = i + d[0] * (j + d[1] * k);
                        for (t, l) in line.iter_mut().enumerate() {
                            *l = data[base + t * s];
                        }
                        if forward {
                            // out_m = sum_i q[i][m] line_i
                            out.iter_mut().for_each(|v| *v = 0.0);
                            for (i2, &li) in line.iter().enumerate() {
                                let row = &b.q[i2 * n..(i2 + 1) * n];
                                for (o, &qv) in out.iter_mut().zip(row) {
                                    *o += qv * li;
                                }
                            }
                        } else {
                            // out_i = sum_m q[i][m] line_m
                            for (i2, o) in out.iter_mut().enumerate() {
                                let row = &b.q[i2 * n..(i2 + 1) * n];
                                *o = row.iter().zip(&line).map(|(q, l)| q * l).sum();
                            }
                        }
                        for (t, &o) in out.iter().enumerate() {
                            data[base + t * s] = o;
                        }
                    }
                }
            }
        }
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        out.copy_from_slice(rhs);
        self.transform(out, true);
        for (v, s) in out.iter_mut().zip(&self.inv_symbol) {
            *v *= s;
        }
        self.transform(out, false);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// A linear system ready for PCG.
pub(crate) struct System<'a> {
    pub op: &'a SeparableOperator,
    pub precond: Precond<'a>,
}

pub(crate) enum Precond<'a> {
    Jacobi(Vec<f64>),
    Spectral(&'a SpectralSolver),
}

impl<'a> System<'a> {
    pub fn jacobi(op: &'a SeparableOperator) -> Self {
        Self {
            op,
            precond: Precond::Jacobi(op.diagonal()),
        }
    }

    pub fn spectral(op: &'a SeparableOperator, s: &'a SpectralSolver) -> Self {
        Self {
            op,
            precond: Precond::Spectral(s),
        }
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        match &self.precond {
            Precond::Jacobi(diag) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(diag) {
                    *zi = ri / di;
                }
            }
            Precond::Spectral(s) => s.solve(r, z),
        }
        if self.op.singular() {
            remove_mean(z);
        }
    }

    /// Solves `A x = b`, using `x` as the initial guess. For the singular
    /// Neumann operator the mean of `b` is removed first and `x` is returned
    /// with zero mean.
    pub fn solve(&self, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgStats> {
        let n = b.len();
        let singular = self.op.singular();
        let mut b = b.to_vec();
        if singular {
            remove_mean(&mut b);
            remove_mean(x);
        }
        let b_norm = dot(&b, &b).sqrt();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(CgStats::default());
        }
        let op_norm =
            self.op.alpha.abs() + self.op.beta.abs() * 4.0 * self.op.inv_h2.iter().sum::<f64>();
        let mut r = vec![0.0; n];
        self.op.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri = bi - *ri;
        }
        if dot(&r, &r) >= b_norm * b_norm {
            // a stale warm start is worse than nothing
            x.iter_mut().for_each(|v| *v = 0.0);
            r.copy_from_slice(&b);
        }
        let mut z = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut ap = vec![0.0; n];
        let floor = |x: &[f64]| 64.0 * f64::EPSILON * (op_norm * dot(x, x).sqrt() + b_norm);
        let mut r_norm = dot(&r, &r).sqrt();
        if r_norm <= (tol * b_norm).max(floor(x)) {
            return Ok(CgStats {
                iterations: 0,
                residual: r_norm / b_norm,
            });
        }
        self.precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        for it in 1..=max_iter {
            self.op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let step = rz / pap;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            r_norm = dot(&r, &r).sqrt();
            if r_norm <= (tol * b_norm).max(floor(x)) {
                // confirm against the true residual
                self.op.apply(x, &mut ap);
                let true_norm = b
                    .iter()
                    .zip(&ap)
                    .map(|(bi, ai)| (bi - ai) * (bi - ai))
                    .sum::<f64>()
                    .sqrt();
                if true_norm <= 2.0 * (tol * b_norm).max(floor(x)) {
                    if singular {
                        remove_mean(x);
                    }
                    return Ok(CgStats {
                        iterations: it,
                        residual: true_norm / b_norm,
                    });
                }
                for i in 0..n {
                    r[i] = b[i] - ap[i];
                }
            }
            self.precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::SolverFailure {
            iterations: max_iter,
            residual: r_norm / b_norm,
        })
    }
}

/// Default relative residual for every solve.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// Pressure/Helmholtz solver bound to one grid.
///
/// Holds the factorized bases and the previous solutions used as warm
/// starts, so it is owned by a single simulation.
#[derive(Clone, Debug)]
pub struct PoissonSolver {
    grid: GridRef,
    tol: f64,
    max_iter: usize,
    precond: Preconditioner,
    pressure_op: SeparableOperator,
    pressure_spectral: Option<SpectralSolver>,
    helmholtz: Vec<Option<(f64, SeparableOperator, Option<SpectralSolver>)>>,
    warm_pressure: Vec<f64>,
    warm_velocity: Vec<Vec<f64>>,
    total_iterations: usize,
}

/// Boundary rules for velocity component `axis` under no-slip walls.
pub(crate) fn velocity_bcs(axis: usize) -> [AxisBc; 3] {
    let mut bcs = [AxisBc::DirichletGhost; 3];
    bcs[axis] = AxisBc::DirichletFaces;
    bcs
}

impl PoissonSolver {
    pub fn new(grid: &GridRef) -> Self {
        Self::with_options(
            grid,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_ITER,
            Preconditioner::Spectral,
        )
    }

    pub fn with_options(
        grid: &GridRef,
        tol: f64,
        max_iter: usize,
        precond: Preconditioner,
    ) -> Self {
        let pressure_op = SeparableOperator::new(grid, [AxisBc::Neumann; 3], 0.0, 1.0);
        let pressure_spectral = match precond {
            Preconditioner::Spectral => Some(SpectralSolver::new(grid, pressure_op.clone())),
            Preconditioner::Jacobi => None,
        };
        Self {
            grid: grid.clone(),
            tol,
            max_iter,
            precond,
            pressure_op,
            pressure_spectral,
            helmholtz: vec![None; grid.dim()],
            warm_pressure: vec![0.0; grid.cell_count()],
            warm_velocity: vec![Vec::new(); grid.dim()],
            total_iterations: 0,
        }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn preconditioner(&self) -> Preconditioner {
        self.precond
    }

    /// CG iterations spent since construction or the last reset.
    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn reset_iterations(&mut self) {
        self.total_iterations = 0;
    }

    /// Solves `-Lap_h p = rhs - mean(rhs)` with zero-flux walls and returns
    /// the zero-mean solution.
    pub fn solve_pressure(&mut self, rhs: &ScalarField) -> Result<(ScalarField, CgStats)> {
        let mut x = self.warm_pressure.clone();
        let sys = match &self.pressure_spectral {
            Some(s) => System::spectral(&self.pressure_op, s),
            None => System::jacobi(&self.pressure_op),
        };
        let stats = sys.solve(rhs.values(), &mut x, self.tol, self.max_iter)?;
        self.total_iterations += stats.iterations;
        self.warm_pressure.copy_from_slice(&x);
        Ok((ScalarField::from_raw(&self.grid, x), stats))
    }

    fn helmholtz_entry(&mut self, axis: usize, eps: f64) {
        let stale = match &self.helmholtz[axis] {
            Some((e, _, _)) => *e != eps,
            None => true,
        };
        if stale {
            let op = SeparableOperator::new(&self.grid, velocity_bcs(axis), 1.0, eps);
            let spectral = match self.precond {
                Preconditioner::Spectral => Some(SpectralSolver::new(&self.grid, op.clone())),
                Preconditioner::Jacobi => None,
            };
            self.helmholtz[axis] = Some((eps, op, spectral));
            self.warm_velocity[axis].clear();
        }
    }

    /// Solves `(I - eps Lap_h) v = rhs` for velocity component `axis` on its
    /// interior faces (compact layout, see [`to_compact`]).
    pub(crate) fn solve_helmholtz(
        &mut self,
        axis: usize,
        eps: f64,
        rhs: &[f64],
    ) -> Result<(Vec<f64>, CgStats)> {
        self.helmholtz_entry(axis, eps);
        let (_, op, spectral) = self.helmholtz[axis].as_ref().unwrap();
        let mut x = if self.warm_velocity[axis].len() == rhs.len() {
            self.warm_velocity[axis].clone()
        } else {
            rhs.to_vec()
        };
        let sys = match spectral {
            Some(s) => System::spectral(op, s),
            None => System::jacobi(op),
        };
        let stats = sys.solve(rhs, &mut x, self.tol, self.max_iter)?;
        self.total_iterations += stats.iterations;
        self.warm_velocity[axis].clone_from(&x);
        Ok((x, stats))
    }
}

/// Interior faces of component `axis` packed x-fastest.
pub(crate) fn to_compact(grid: &Grid, axis: usize, comp: &[f64]) -> Vec<f64> {
    let d = grid.face_dims(axis);
    let mut out = Vec::with_capacity(grid.face_count(axis));
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                let c = [i, j, k];
                if c[axis] == 0 || c[axis] == d[axis] - 1 {
                    continue;
                }
                out.push(comp[grid.face_index(axis, i, j, k)]);
            }
        }
    }
    out
}

/// Inverse of [`to_compact`]; wall faces are set to 0.
pub(crate) fn from_compact(grid: &Grid, axis: usize, vals: &[f64], comp: &mut [f64]) {
    let d = grid.face_dims(axis);
    let mut it = vals.iter();
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                let c = [i, j, k];
                let f = grid.face_index(axis, i, j, k);
                if c[axis] == 0 || c[axis] == d[axis] - 1 {
                    comp[f] = 0.0;
                } else {
                    comp[f] = *it.next().unwrap();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian_neumann, make_grid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn neumann_operator_matches_grid_laplacian() {
        let g = make_grid(2, &[1.0, 2.0], &[6, 9]).unwrap();
        let op = SeparableOperator::new(&g, [AxisBc::Neumann; 3], 0.0, 1.0);
        let x = random_vec(g.cell_count(), 1);
        let mut y = vec![0.0; x.len()];
        op.apply(&x, &mut y);
        let lap = laplacian_neumann(&ScalarField::from_vec(&g, x).unwrap());
        for (a, b) in y.iter().zip(lap.values()) {
            assert_relative_eq!(*a, -b, epsilon = 1e-10);
        }
    }

    #[test]
    fn spectral_basis_inverts_each_operator() {
        for dim in [2, 3] {
            let g = if dim == 2 {
                make_grid(2, &[1.0, 1.3], &[7, 5]).unwrap()
            } else {
                make_grid(3, &[1.0, 0.5, 2.0], &[4, 5, 6]).unwrap()
            };
            let cases = [
                ([AxisBc::Neumann; 3], 0.0, 1.0),
                (velocity_bcs(0), 1.0, 0.3),
                (velocity_bcs(1), 1.0, 0.05),
                (velocity_bcs(dim - 1), 0.0, 1.0),
            ];
            for (bcs, alpha, beta) in cases {
                let op = SeparableOperator::new(&g, bcs, alpha, beta);
                let s = SpectralSolver::new(&g, op.clone());
                let mut b = random_vec(op.len(), 7);
                if op.singular() {
                    remove_mean(&mut b);
                }
                let mut x = vec![0.0; op.len()];
                s.solve(&b, &mut x);
                let mut ax = vec![0.0; op.len()];
                op.apply(&x, &mut ax);
                for (u, v) in ax.iter().zip(&b) {
                    assert_relative_eq!(*u, *v, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn jacobi_and_spectral_agree() {
        let g = make_grid(2, &[1.0, 1.0], &[16, 12]).unwrap();
        let op = SeparableOperator::new(&g, [AxisBc::Neumann; 3], 0.0, 1.0);
        let s = SpectralSolver::new(&g, op.clone());
        let b = random_vec(op.len(), 3);
        let mut x1 = vec![0.0; op.len()];
        let mut x2 = vec![0.0; op.len()];
        let st1 = System::jacobi(&op).solve(&b, &mut x1, 1e-12, 5000).unwrap();
        let st2 = System::spectral(&op, &s)
            .solve(&b, &mut x2, 1e-12, 5000)
            .unwrap();
        assert!(st2.iterations <= 3, "spectral took {}", st2.iterations);
        assert!(st1.iterations > st2.iterations);
        for (a, b) in x1.iter().zip(&x2) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9);
        }
        assert!(x1.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn pressure_solve_meets_tolerance_and_gauge() {
        let g = make_grid(2, &[1.0, 1.0], &[12, 12]).unwrap();
        let mut solver = PoissonSolver::new(&g);
        let rhs = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1]);
        let (p, stats) = solver.solve_pressure(&rhs).unwrap();
        assert!(stats.residual <= 1e-12);
        assert!(p.mean().abs() < 1e-13);
        let lap = laplacian_neumann(&p);
        let mean = rhs.mean();
        let res: f64 = lap
            .values()
            .iter()
            .zip(rhs.values())
            .map(|(l, r)| (-l - (r - mean)).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn: f64 = rhs
            .values()
            .iter()
            .map(|r| (r - mean).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res <= 2e-12 * bn);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = make_grid(2, &[1.0, 1.0], &[8, 8]).unwrap();
        let mut solver = PoissonSolver::new(&g);
        let (p, stats) = solver
            .solve_pressure(&ScalarField::constant(&g, 4.0))
            .unwrap();
        assert_eq!(p.max_abs(), 0.0);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = make_grid(2, &[1.0, 1.0], &[32, 32]).unwrap();
        let mut solver = PoissonSolver::with_options(&g, 1e-14, 3, Preconditioner::Jacobi);
        let rhs = ScalarField::from_fn(&g, |x| (7.0 * x[0]).sin() * x[1]);
        match solver.solve_pressure(&rhs) {
            Err(Error::SolverFailure {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn compact_round_trip() {
        let g = make_grid(3, &[1.0, 1.0, 1.0], &[4, 5, 6]).unwrap();
        for a in 0..3 {
            let vals: Vec<f64> = (0..g.face_count(a)).map(|i| i as f64).collect();
            let c = to_compact(&g, a, &vals);
            let mut back = vec![-1.0; vals.len()];
            from_compact(&g, a, &c, &mut back);
            for (idx, v) in back.iter().enumerate() {
                if g.is_boundary_face(a, g.face_coords(a, idx)) {
                    assert_eq!(*v, 0.0);
                } else {
                    assert_eq!(*v, vals[idx]);
                }
            }
        }
    }
}
