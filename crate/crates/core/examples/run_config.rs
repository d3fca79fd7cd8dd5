//! A configured run end to end: parse, simulate, write `series.csv`,
//! `report.txt` and snapshots, then re-fit the rates from the CSV.
//!
//! ```text
//! cargo run --release --example run_config [config.ini]
//! ```

use std::fs;

use ksns::cli::{execute, parse_config, rates_from_csv};

const DEFAULT: &str = "\
[grid]
dim = 2
cells = 32
extents = 1, 1

[physics]
kind = rotational
theta = 1.2
cs = 0.3

[run]
t_end = 0.2
scenario = random
csv_every = 4
snapshot_every = 200
out = target/run_config
";

fn main() -> ksns::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => fs::read_to_string(path)?,
        None => DEFAULT.to_string(),
    };
    let cfg = parse_config(&text)?;
    let summary = execute(&cfg)?;
    println!(
        "{} steps to t = {:.4}; outputs in {}",
        summary.steps,
        summary.t_final,
        summary.out.display()
    );
    if let Some(e) = &summary.error {
        println!("aborted: {e}");
    }
    let kappa = summary.feasibility.feasible().map(|l| l.kappa_pred);
    print!(
        "{}",
        rates_from_csv(&fs::read_to_string(summary.csv_path())?, kappa)?
    );
    Ok(())
}
