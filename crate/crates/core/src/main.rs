//! Command-line front end.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ksns::cli::{execute, load_config, rates_from_csv};
use ksns::diagnostics::poincare_constant;
use ksns::grid::Grid;
use ksns::verify::{mms_convergence, run_suite, MmsCase, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "ksns",
    version,
    about = "Keller-Segel-Navier-Stokes simulator and verification harness"
)]
struct Cli {
    /// Worker threads for parallel sweeps (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write series.csv, report.txt and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a scenario suite; exits nonzero iff a required check fails.
    Verify {
        /// conservation | lyapunov | stabilization | energy | library | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also write the key=value results to DIR/verify.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the Poincaré constant of a grid.
    Poincare {
        #[arg(long)]
        dim: usize,
        /// One value per axis, or one for all.
        #[arg(long, value_delimiter = ',')]
        cells: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        extents: Vec<f64>,
    },
    /// Re-fit decay rates from an existing series CSV.
    Rates {
        csv: PathBuf,
        /// Predicted rate to compare against.
        #[arg(long)]
        kappa_pred: Option<f64>,
    },
    /// Manufactured-solution convergence study.
    Mms {
        /// steady | diffusion | full; all three when omitted.
        #[arg(long)]
        case: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        cells: Vec<usize>,
    },
}

fn broadcast<T: Clone>(v: Vec<T>, dim: usize, what: &str) -> Result<Vec<T>, String> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); dim]),
        n if n == dim => Ok(v),
        n => Err(format!("--{what} has {n} entries for dim {dim}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but its outcome is a failure.
fn dispatch(command: Command) -> Result<bool, Box<dyn std::error::Error>> {
    match command {
        Command::Run { config, out, seed } => {
            let cfg = load_config(&config, out.as_deref(), seed)?;
            let s = execute(&cfg)?;
            println!(
                "steps={}\nt_final={:e}\nout={}",
                s.steps,
                s.t_final,
                s.out.display()
            );
            if let Some(e) = &s.error {
                eprintln!("run aborted: {e}");
            }
            Ok(s.error.is_none())
        }
        Command::Verify { suite, seed, out } => {
            let reports = run_suite(&suite, seed)?;
            let mut kv = String::new();
            for r in &reports {
                print!("{}", r.table());
                kv.push_str(&r.key_values());
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("verify.txt"), kv)?;
            }
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| r.failed())
                .map(|r| r.scenario.as_str())
                .collect();
            if failed.is_empty() {
                println!("suite {suite}: PASS");
            } else {
                println!("suite {suite}: FAIL ({})", failed.join(", "));
            }
            Ok(failed.is_empty())
        }
        Command::Poincare {
            dim,
            cells,
            extents,
        } => {
            let cells = broadcast(cells, dim, "cells")?;
            let extents = broadcast(extents, dim, "extents")?;
            let g = Grid::new(dim, &extents, &cells)?;
            println!("C_N={}", poincare_constant(&g)?);
            Ok(true)
        }
        Command::Rates { csv, kappa_pred } => {
            print!("{}", rates_from_csv(&fs::read_to_string(csv)?, kappa_pred)?);
            Ok(true)
        }
        Command::Mms { case, cells } => {
            let cases = match case {
                Some(name) => vec![MmsCase::by_name(&name)?],
                None => vec![
                    MmsCase::steady(),
                    MmsCase::diffusion_only(),
                    MmsCase::full_coupling(),
                ],
            };
            let mut ok = true;
            for c in &cases {
                let r = mms_convergence(c, &cells)?;
                print!("{}", r.key_values());
                println!("passed={}", r.passed());
                ok &= r.passed();
            }
            Ok(ok)
        }
    }
}
