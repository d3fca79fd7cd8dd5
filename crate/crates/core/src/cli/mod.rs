//! Batch front door: configuration, run orchestration and output files.
//!
//! A run writes into its output directory
//!
//! - `series.csv`: the diagnostics time series,
//! - `report.txt`: the effective configuration, derived constants, run
//!   status and decay-rate fits as `key=value` lines,
//! - `snapshots/`: field snapshots when a snapshot cadence is set.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{make_lyapunov_config, poincare_constant, LyapunovFeasibility};
use crate::error::Result;
use crate::fluid::PoissonSolver;
use crate::stepper::run;

pub use config::{parse_config, Buoyancy, RunConfig};
pub use output::{csv_text, echo_block, parse_csv, rate_block, write_snapshots};

/// What a finished run wrote.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out: PathBuf,
    pub steps: usize,
    pub t_final: f64,
    pub feasibility: LyapunovFeasibility,
    /// Why the run stopped before `t_end`, if it did.
    pub error: Option<String>,
}

impl RunSummary {
    pub fn csv_path(&self) -> PathBuf {
        self.out.join("series.csv")
    }

    pub fn report_path(&self) -> PathBuf {
        self.out.join("report.txt")
    }
}

/// Runs one trajectory and writes its outputs. An aborted run still writes
/// the series up to the abort and records the reason in the report.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary> {
    let grid = cfg.grid()?;
    let mut params = cfg.sim_params(&grid)?;
    let c_n = poincare_constant(&grid)?;
    params.poincare = Some(c_n);
    let feasibility = make_lyapunov_config(cfg.cs, c_n)?;
    let initial = cfg.initial.build(&grid, &mut PoissonSolver::new(&grid))?;

    fs::create_dir_all(&cfg.out)?;
    let traj = run(&params, initial)?;

    fs::write(cfg.out.join("series.csv"), csv_text(&traj.series))?;
    if cfg.snapshot_every > 0 {
        write_snapshots(&cfg.out.join("snapshots"), &traj.snapshots)?;
    }
    let error = traj.error.as_ref().map(|e| e.to_string());
    let mut report = echo_block(cfg, &feasibility);
    report.push_str("\n# run\n");
    report.push_str(&format!("steps={}\n", traj.steps));
    report.push_str(&format!("t_final={:e}\n", traj.final_state.t));
    match &error {
        Some(e) => report.push_str(&format!("status=aborted\nerror={e}\n")),
        None => report.push_str("status=complete\n"),
    }
    report.push_str("\n# rates\n");
    report.push_str(&rate_block(
        &traj.series,
        feasibility.feasible().map(|l| l.kappa_pred),
    ));
    fs::write(cfg.out.join("report.txt"), report)?;

    Ok(RunSummary {
        out: cfg.out.clone(),
        steps: traj.steps,
        t_final: traj.final_state.t,
        feasibility,
        error,
    })
}

/// Reads a config file and applies command-line overrides.
pub fn load_config(path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = parse_config(&fs::read_to_string(path)?)?;
    if let Some(o) = out {
        cfg.out = o.to_path_buf();
    }
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    Ok(cfg)
}

/// Re-fits decay rates from CSV text; `kappa_pred` adds the comparison
/// lines.
pub fn rates_from_csv(text: &str, kappa_pred: Option<f64>) -> Result<String> {
    Ok(rate_block(&parse_csv(text)?, kappa_pred))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_writes_outputs_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[grid]\ndim = 2\ncells = 8\nextents = 1, 1\n[run]\nt_end = 0.01\nscenario = random\nsnapshot_every = 5\nout = {}\n",
            dir.path().join("a").display()
        );
        let cfg = parse_config(&text).unwrap();
        let s = execute(&cfg).unwrap();
        assert!(s.error.is_none());
        let csv = fs::read_to_string(s.csv_path()).unwrap();
        let report = fs::read_to_string(s.report_path()).unwrap();
        assert!(report.contains("kappa_pred="), "{report}");
        assert!(report.contains("cfl = 0.4"));
        assert!(dir.path().join("a/snapshots/n_000000.kssf").exists());
        assert!(dir.path().join("a/snapshots/index.csv").exists());
        let series = parse_csv(&csv).unwrap();
        assert_eq!(series.len(), s.steps + 1);

        let mut again = cfg.clone();
        again.out = dir.path().join("b");
        let s2 = execute(&again).unwrap();
        assert_eq!(fs::read(s2.csv_path()).unwrap(), csv.as_bytes());
    }

    #[test]
    fn infeasible_cs_runs_and_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[grid]\ndim = 2\ncells = 8\nextents = 1, 1\n[physics]\ncs = 0.9\n[run]\nt_end = 0.002\nscenario = bump\nout = {}\n",
            dir.path().display()
        );
        let s = execute(&parse_config(&text).unwrap()).unwrap();
        assert!(s.feasibility.feasible().is_none());
        let report = fs::read_to_string(s.report_path()).unwrap();
        assert!(report.contains("feasible=false"));
    }
}
