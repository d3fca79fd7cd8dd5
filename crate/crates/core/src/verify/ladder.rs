//! Regularization ladder: identical initial data run at a decreasing
//! sequence of `eps`, compared pairwise at the final time.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fluid::FluidParams;
use crate::grid::ScalarField;
use crate::sensitivity::RegularizationParams;
use crate::stepper::{cfl_dt, run, SimParams, State};

/// Distances below this are treated as equal when counting inversions.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// Largest tolerated growth of one successive distance.
pub const INVERSION_SLACK: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct LadderReport {
    pub eps: Vec<f64>,
    /// Common step and final time of all rungs.
    pub dt: f64,
    pub t_final: f64,
    /// `|n_k - n_{k+1}| + |c_k - c_{k+1}| + |u_k - u_{k+1}|` (L2 norms).
    pub distances: Vec<f64>,
    /// Successive distances that grew.
    pub inversions: usize,
    /// Per rung: why it failed, if it did.
    pub failures: Vec<Option<String>>,
}

impl LadderReport {
    /// Nonincreasing distances, except for at most one growth of at most
    /// [`INVERSION_SLACK`], and every rung completed.
    pub fn passed(&self) -> bool {
        if self.failures.iter().any(Option::is_some) {
            return false;
        }
        let mut inversions = 0;
        for w in self.distances.windows(2) {
            if w[1] <= w[0] || w[1] <= DISTANCE_FLOOR {
                continue;
            }
            if w[1] > (1.0 + INVERSION_SLACK) * w[0] {
                return false;
            }
            inversions += 1;
        }
        inversions <= 1
    }

    pub fn key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ladder.dt={}", self.dt);
        let _ = writeln!(out, "ladder.t_final={}", self.t_final);
        for (w, d) in self.eps.windows(2).zip(&self.distances) {
            let _ = writeln!(out, "ladder.dist_{}_{}={d:e}", w[0], w[1]);
        }
        for (e, f) in self.eps.iter().zip(&self.failures) {
            if let Some(f) = f {
                let _ = writeln!(out, "ladder.failure_{e}={f}");
            }
        }
        let _ = writeln!(out, "ladder.inversions={}", self.inversions);
        let _ = writeln!(out, "ladder.passed={}", self.passed());
        out
    }
}

/// `base` with both the flux regularization and the Yosida parameter set
/// to `eps`.
pub fn with_eps(base: &SimParams, eps: f64) -> Result<SimParams> {
    let mut p = base.clone();
    p.regularization = RegularizationParams::new(eps, &base.grid)?;
    p.fluid = FluidParams::new(base.fluid.kappa(), eps, base.fluid.phi().clone())?;
    Ok(p)
}

fn l2_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let s: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    (s * a.grid().volume_element()).sqrt()
}

/// Runs every rung with a common fixed step (the smallest initial stable
/// step over the rungs) to the same final time.
pub fn epsilon_ladder(base: &SimParams, initial: &State, eps_list: &[f64]) -> Result<LadderReport> {
    if eps_list.is_empty() {
        return Err(invalid("empty eps ladder"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(invalid("ladder eps must lie in (0, 1]"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("ladder eps must be strictly decreasing"));
    }
    let rungs = eps_list
        .iter()
        .map(|e| with_eps(base, *e))
        .collect::<Result<Vec<_>>>()?;
    let dt = match base.dt_fixed {
        Some(dt) => dt,
        None => rungs
            .iter()
            .map(|p| cfl_dt(initial, p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min),
    };
    let steps = (base.t_end / dt).floor().max(1.0);
    let t_final = steps * dt;
    let results: Vec<std::result::Result<State, String>> = rungs
        .into_par_iter()
        .map(|mut p| {
            p.dt_fixed = Some(dt);
            p.t_end = t_final;
            p.diagnostics_every = usize::MAX;
            p.snapshot_every = 0;
            match run(&p, initial.clone()).and_then(|t| t.into_result()) {
                Ok(t) => Ok(t.final_state),
                Err(e) => Err(e.to_string()),
            }
        })
        .collect();
    let mut distances = Vec::new();
    for w in results.windows(2) {
        distances.push(match (&w[0], &w[1]) {
            (Ok(a), Ok(b)) => {
                let du = a.u.sub(&b.u).norm_l2_sq().sqrt();
                l2_diff(&a.n, &b.n) + l2_diff(&a.c, &b.c) + du
            }
            _ => f64::NAN,
        });
    }
    let inversions = distances
        .windows(2)
        .filter(|w| w[1] > w[0] && w[1] > DISTANCE_FLOOR)
        .count();
    Ok(LadderReport {
        eps: eps_list.to_vec(),
        dt,
        t_final,
        distances,
        inversions,
        failures: results.into_iter().map(|r| r.err()).collect(),
    })
}
