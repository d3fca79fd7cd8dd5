//! Smallest nonzero eigenvalue of the discrete zero-flux Laplacian by inverse
//! iteration on the mean-zero subspace.
//!
//! The inner solves use Jacobi-preconditioned CG rather than the
//! fast-diagonalization solver, so the result does not lean on the analytic
//! eigenbasis it is compared against.

use crate::error::{Error, Result};
use crate::fluid::{AxisBc, SeparableOperator, System};
use crate::grid::Grid;

const MAX_OUTER: usize = 500;
const INNER_TOL: f64 = 1e-13;
const INNER_MAX: usize = 100_000;
/// Relative Rayleigh-quotient change and relative eigen-residual at which
/// the iteration stops; the quotient error is then far below 1e-8.
const VALUE_TOL: f64 = 1e-11;
const RESIDUAL_TOL: f64 = 1e-6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize_mean_zero(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// `lambda_1` of `-Lap_h` with zero-flux walls.
pub fn neumann_eigenvalue(grid: &Grid) -> Result<f64> {
    let op = SeparableOperator::new(grid, [AxisBc::Neumann; 3], 0.0, 1.0);
    let sys = System::jacobi(&op);
    let len = op.len();
    // a start vector with a component along every axis' first mode
    let mut x: Vec<f64> = (0..len)
        .map(|idx| {
            let p = grid.cell_center(idx);
            (0..grid.dim())
                .map(|a| {
                    let s = p[a] / grid.extents()[a] - 0.5;
                    (a as f64 + 1.0) * s + 0.3 * s * s * s
                })
                .sum()
        })
        .collect();
    normalize_mean_zero(&mut x);
    let mut ax = vec![0.0; len];
    let mut lambda_prev = f64::INFINITY;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_OUTER {
        let mut y = vec![0.0; len];
        sys.solve(&x, &mut y, INNER_TOL, INNER_MAX)?;
        normalize_mean_zero(&mut y);
        x = y;
        op.apply(&x, &mut ax);
        let lambda = dot(&x, &ax);
        let resid = ax
            .iter()
            .zip(&x)
            .map(|(a, v)| (a - lambda * v).powi(2))
            .sum::<f64>()
            .sqrt()
            / lambda;
        change = (lambda - lambda_prev).abs() / lambda;
        if change <= VALUE_TOL && resid <= RESIDUAL_TOL {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Err(Error::EigenFailure {
        iterations: MAX_OUTER,
        residual: change,
    })
}

/// Best constant `C_N = 1 / lambda_1` in `|f - mean f|^2 <= C_N |grad f|^2`
/// on the grid.
pub fn poincare_constant(grid: &Grid) -> Result<f64> {
    Ok(1.0 / neumann_eigenvalue(grid)?)
}
