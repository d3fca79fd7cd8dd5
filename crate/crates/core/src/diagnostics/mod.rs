//! Functionals of the solution and the quantitative checks built on them:
//! masses, distances to the homogeneous steady state, the Lyapunov
//! functional with its dissipation bound, `grad c` norms, the Poincaré
//! constant, decay-rate fits and weak-form residuals.

mod fit;
mod poincare;
mod weak;

pub use fit::{fit_decay_rate, DecayFit};
pub use poincare::{neumann_eigenvalue, poincare_constant};
pub use weak::{
    streamed_weak_residual, weak_residual, TestFunction, WeakAccumulator, WeakResiduals,
};

use crate::error::{invalid, Result};
use crate::grid::{gradient_cc, ScalarField};
use crate::stepper::{State, StepInfo};
use crate::transport::dissipation_integrals;

/// Cap on the Lyapunov weight when the admissible interval is unbounded or
/// very long, in units of `1 / C_N`.
pub const WEIGHT_CAP: f64 = 10.0;

/// Weight and coefficients of the Lyapunov functional
/// `L = (B/2) |n - m|^2 + (1/2) |c - m|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovConfig {
    pub b: f64,
    pub c_n: f64,
    pub c_s: f64,
    /// `B C_N / 2 - 1/4`
    pub a1: f64,
    /// `1 - B C_S^2 / 2`
    pub a2: f64,
    /// `min{2 a1 / B, 2 C_N a2}`
    pub kappa_pred: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LyapunovFeasibility {
    Feasible(LyapunovConfig),
    /// `C_S >= 2 sqrt(C_N)`: the admissible interval for `B` is empty.
    Infeasible {
        c_s: f64,
        c_n: f64,
        lower: f64,
        upper: f64,
    },
}

impl LyapunovFeasibility {
    pub fn feasible(&self) -> Option<&LyapunovConfig> {
        match self {
            LyapunovFeasibility::Feasible(c) => Some(c),
            LyapunovFeasibility::Infeasible { .. } => None,
        }
    }
}

/// Picks `B` as the midpoint of `(1/(2 C_N), min(2/C_S^2, 10/C_N))`.
pub fn make_lyapunov_config(c_s: f64, c_n: f64) -> Result<LyapunovFeasibility> {
    if !(c_n > 0.0 && c_n.is_finite()) {
        return Err(invalid(format!("C_N must be positive, got {c_n}")));
    }
    if !(c_s >= 0.0 && c_s.is_finite()) {
        return Err(invalid(format!("C_S must be nonnegative, got {c_s}")));
    }
    let lower = 1.0 / (2.0 * c_n);
    let cap = WEIGHT_CAP / c_n;
    // C_S < 2 sqrt(C_N) is equivalent to lower < 2 / C_S^2
    if c_s >= 2.0 * c_n.sqrt() {
        let upper = 2.0 / (c_s * c_s);
        return Ok(LyapunovFeasibility::Infeasible {
            c_s,
            c_n,
            lower,
            upper,
        });
    }
    let upper = if c_s == 0.0 {
        cap
    } else {
        (2.0 / (c_s * c_s)).min(cap)
    };
    let b = 0.5 * (lower + upper);
    let a1 = b * c_n / 2.0 - 0.25;
    let a2 = 1.0 - b * c_s * c_s / 2.0;
    Ok(LyapunovFeasibility::Feasible(LyapunovConfig {
        b,
        c_n,
        c_s,
        a1,
        a2,
        kappa_pred: (2.0 * a1 / b).min(2.0 * c_n * a2),
    }))
}

/// `(B/2) |n - m|^2 + (1/2) |c - m|^2` with `m` the initial mean density.
pub fn lyapunov(state: &State, b: f64, nbar0: f64) -> f64 {
    0.5 * b * state.n.l2_sq_about(nbar0) + 0.5 * state.c.l2_sq_about(nbar0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovBudget {
    pub value: f64,
    /// `-a1 |n - m|^2 - a2 |grad c|^2`
    pub bound_rhs: f64,
}

pub fn lyapunov_budget(state: &State, cfg: &LyapunovConfig, nbar0: f64) -> LyapunovBudget {
    let d_c = dissipation_integrals(&state.n, &state.c, &state.u, 1.0).d_c;
    LyapunovBudget {
        value: lyapunov(state, cfg.b, nbar0),
        bound_rhs: -cfg.a1 * state.n.l2_sq_about(nbar0) - cfg.a2 * d_c,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradNorms {
    /// `sum |grad c|^2 vol`
    pub l2_sq: f64,
    /// `sum |grad c|^4 vol`
    pub l4_4: f64,
}

/// Face gradients averaged to cell centers, then aggregated per cell.
pub fn grad_c_norms(c: &ScalarField) -> GradNorms {
    let g = c.grid();
    let grad = gradient_cc(c);
    let cells: Vec<ScalarField> = (0..g.dim()).map(|a| grad.cell_average(a)).collect();
    let vol = g.volume_element();
    let mut out = GradNorms::default();
    for i in 0..g.cell_count() {
        let m2: f64 = cells.iter().map(|f| f.values()[i].powi(2)).sum();
        out.l2_sq += m2;
        out.l4_4 += m2 * m2;
    }
    out.l2_sq *= vol;
    out.l4_4 *= vol;
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SteadyDistance {
    pub n_inf: f64,
    pub c_inf: f64,
    pub u_inf: f64,
}

/// Max-norm distances to `(m, m, 0)`.
pub fn steady_state_distance(state: &State, nbar0: f64) -> SteadyDistance {
    SteadyDistance {
        n_inf: state.n.max_abs_about(nbar0),
        c_inf: state.c.max_abs_about(nbar0),
        u_inf: state.u.max_abs(),
    }
}

/// Constants every record of a run is computed with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordContext {
    pub nbar0: f64,
    pub b: f64,
    pub c_n: f64,
    pub c_s: f64,
    pub alpha: f64,
    pub a1: f64,
    pub a2: f64,
}

impl RecordContext {
    pub fn new(nbar0: f64, b: f64, c_n: f64, c_s: f64, alpha: f64) -> Self {
        Self {
            nbar0,
            b,
            c_n,
            c_s,
            alpha,
            a1: b * c_n / 2.0 - 0.25,
            a2: 1.0 - b * c_s * c_s / 2.0,
        }
    }
}

/// Column names of the CSV time series, in order.
pub const COLUMNS: [&str; 17] = [
    "t",
    "mass_n",
    "mass_c",
    "l2_n_dev",
    "l2_c_dev",
    "l2_u",
    "grad_c_l2",
    "grad_c_l4",
    "lyapunov",
    "D_n",
    "D_c",
    "D_u",
    "n_inf_dev",
    "c_inf_dev",
    "u_inf",
    "dt",
    "poisson_iters",
];

/// All functionals at one recorded time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub mass_n: f64,
    pub mass_c: f64,
    pub l2_n_dev: f64,
    pub l2_c_dev: f64,
    pub l2_u: f64,
    pub grad_c_l2: f64,
    pub grad_c_l4: f64,
    pub lyapunov: f64,
    pub d_n: f64,
    pub d_c: f64,
    pub d_u: f64,
    pub n_inf_dev: f64,
    pub c_inf_dev: f64,
    pub u_inf: f64,
    /// Step that produced this record (0 for the initial record).
    pub dt: f64,
    pub poisson_iters: usize,
    /// `-a1 |n - m|^2 - a2 D_c`; not part of the CSV.
    pub bound_rhs: f64,
}

impl DiagnosticRecord {
    /// Values in [`COLUMNS`] order.
    pub fn row(&self) -> [f64; 17] {
        [
            self.t,
            self.mass_n,
            self.mass_c,
            self.l2_n_dev,
            self.l2_c_dev,
            self.l2_u,
            self.grad_c_l2,
            self.grad_c_l4,
            self.lyapunov,
            self.d_n,
            self.d_c,
            self.d_u,
            self.n_inf_dev,
            self.c_inf_dev,
            self.u_inf,
            self.dt,
            self.poisson_iters as f64,
        ]
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() != COLUMNS.len() {
            return Err(invalid(format!(
                "expected {} columns, got {}",
                COLUMNS.len(),
                row.len()
            )));
        }
        Ok(Self {
            t: row[0],
            mass_n: row[1],
            mass_c: row[2],
            l2_n_dev: row[3],
            l2_c_dev: row[4],
            l2_u: row[5],
            grad_c_l2: row[6],
            grad_c_l4: row[7],
            lyapunov: row[8],
            d_n: row[9],
            d_c: row[10],
            d_u: row[11],
            n_inf_dev: row[12],
            c_inf_dev: row[13],
            u_inf: row[14],
            dt: row[15],
            poisson_iters: row[16] as usize,
            bound_rhs: f64::NAN,
        })
    }
}

pub fn record_state(state: &State, ctx: &RecordContext, info: StepInfo) -> DiagnosticRecord {
    let m = ctx.nbar0;
    let l2_n_dev = state.n.l2_sq_about(m);
    let l2_c_dev = state.c.l2_sq_about(m);
    let diss = dissipation_integrals(&state.n, &state.c, &state.u, ctx.alpha);
    let grad = grad_c_norms(&state.c);
    let dist = steady_state_distance(state, m);
    DiagnosticRecord {
        t: state.t,
        mass_n: state.n.integral(),
        mass_c: state.c.integral(),
        l2_n_dev,
        l2_c_dev,
        l2_u: state.u.norm_l2_sq(),
        grad_c_l2: grad.l2_sq,
        grad_c_l4: grad.l4_4,
        lyapunov: 0.5 * ctx.b * l2_n_dev + 0.5 * l2_c_dev,
        d_n: diss.d_n,
        d_c: diss.d_c,
        d_u: diss.d_u,
        n_inf_dev: dist.n_inf,
        c_inf_dev: dist.c_inf,
        u_inf: dist.u_inf,
        dt: info.dt,
        poisson_iters: info.poisson_iters,
        bound_rhs: -ctx.a1 * l2_n_dev - ctx.a2 * diss.d_c,
    }
}

/// Time series of [`DiagnosticRecord`]s.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsSeries {
    records: Vec<DiagnosticRecord>,
}

impl DiagnosticsSeries {
    pub fn from_records(records: Vec<DiagnosticRecord>) -> Self {
        Self { records }
    }

    pub fn push(&mut self, r: DiagnosticRecord) {
        self.records.push(r);
    }

    pub fn records(&self) -> &[DiagnosticRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&DiagnosticRecord> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// A CSV column by name, or `bound_rhs`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if name == "bound_rhs" {
            return Some(self.records.iter().map(|r| r.bound_rhs).collect());
        }
        let idx = COLUMNS.iter().position(|c| *c == name)?;
        Some(self.records.iter().map(|r| r.row()[idx]).collect())
    }

    /// Index of the first record whose Lyapunov value is below half the
    /// initial one.
    pub fn transient_end(&self) -> Option<usize> {
        let l0 = self.records.first()?.lyapunov;
        self.records.iter().position(|r| r.lyapunov < 0.5 * l0)
    }
}
