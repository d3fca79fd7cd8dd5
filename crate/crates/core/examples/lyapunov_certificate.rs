//! The stabilization certificate across sensitivity strengths: the weight
//! `B`, the coefficients `a1`, `a2`, the predicted rate, and the observed
//! decay of a short random-perturbation run for comparison.
//!
//! ```text
//! cargo run --release --example lyapunov_certificate
//! ```

use ksns::diagnostics::{make_lyapunov_config, poincare_constant, LyapunovFeasibility};
use ksns::grid::make_grid;
use ksns::sensitivity::SensitivityKind;
use ksns::stepper::run;
use ksns::verify::scenario::{recipe, scenario_params};
use ksns::verify::{series_column, DEFAULT_SEED};

fn main() -> ksns::Result<()> {
    let g = make_grid(2, &[1.0, 1.0], &[32, 32])?;
    let c_n = poincare_constant(&g)?;
    println!(
        "C_N = {c_n:.6}, feasibility threshold 2 sqrt(C_N) = {:.6}",
        2.0 * c_n.sqrt()
    );
    let initial = recipe("random_perturbation", DEFAULT_SEED)?;
    for factor in [0.0, 0.25, 0.5, 0.75, 0.95, 1.25] {
        let p = scenario_params(&g, SensitivityKind::ScalarSaturating, factor, 1.0, 0.1, 0.3)?;
        let cs = p.sensitivity.cs();
        match make_lyapunov_config(cs, c_n)? {
            LyapunovFeasibility::Feasible(l) => {
                let state = initial.build(&g, &mut ksns::fluid::PoissonSolver::new(&g))?;
                let traj = run(&p, state)?.into_result()?;
                let dev = series_column(&traj.series, "l2_dev_sum").expect("virtual column");
                let t = traj.series.times();
                // average rate over the run, transient included
                let observed = (dev[0] / dev[dev.len() - 1]).ln() / t[t.len() - 1];
                println!(
                    "C_S={cs:.4}: B={:.4} a1={:.4} a2={:.4} kappa_pred={:.4}  observed mean rate {observed:.3}",
                    l.b, l.a1, l.a2, l.kappa_pred
                );
            }
            LyapunovFeasibility::Infeasible { lower, upper, .. } => {
                println!("C_S={cs:.4}: infeasible, B would need ({lower:.4}, {upper:.4})");
            }
        }
    }
    Ok(())
}
