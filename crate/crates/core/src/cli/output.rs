//! Run outputs: the CSV time series, the key=value report and field
//! snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{
    fit_decay_rate, DiagnosticRecord, DiagnosticsSeries, LyapunovFeasibility, COLUMNS,
};
use crate::error::{Error, Result};
use crate::snapshot::write_snapshot;
use crate::stepper::State;
use crate::verify::series_column;

use super::config::RunConfig;

/// Every CSV column with its meaning. All quantities are nondimensional;
/// `m` is the initial mean of `n` and norms are over the domain.
pub const COLUMN_DOCS: [(&str, &str); 17] = [
    ("t", "time"),
    ("mass_n", "integral of n"),
    ("mass_c", "integral of c"),
    ("l2_n_dev", "|n - m|_2^2"),
    ("l2_c_dev", "|c - m|_2^2"),
    ("l2_u", "|u|_2^2"),
    ("grad_c_l2", "|grad c|_2^2"),
    ("grad_c_l4", "|grad c|_4^4"),
    ("lyapunov", "(B/2)|n - m|_2^2 + (1/2)|c - m|_2^2"),
    ("D_n", "integral of n^(2 alpha - 2) |grad n|^2"),
    ("D_c", "integral of |grad c|^2 over faces (= -<c, Lap_h c>)"),
    ("D_u", "integral of |grad u|^2 including wall terms"),
    ("n_inf_dev", "max |n - m|"),
    ("c_inf_dev", "max |c - m|"),
    ("u_inf", "max |u|"),
    (
        "dt",
        "step that produced the record (0 for the initial record)",
    ),
    (
        "poisson_iters",
        "linear-solver iterations since the previous record",
    ),
];

/// CSV text: header plus one row per record, floats in shortest
/// round-trip form.
pub fn csv_text(series: &DiagnosticsSeries) -> String {
    let mut s = COLUMNS.join(",");
    s.push('\n');
    for r in series.records() {
        let row = r.row();
        for (i, v) in row[..16].iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:e}");
        }
        let _ = writeln!(s, ",{}", r.poisson_iters);
    }
    s
}

/// Parses CSV text written by [`csv_text`].
pub fn parse_csv(text: &str) -> Result<DiagnosticsSeries> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InsufficientData("empty CSV".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names != COLUMNS {
        return Err(Error::Config {
            line: 1,
            message: format!("unexpected CSV header; expected {}", COLUMNS.join(",")),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config {
                line: i + 2,
                message: format!("bad number: {e}"),
            })?;
        let rec = DiagnosticRecord::from_row(&row).map_err(|e| Error::Config {
            line: i + 2,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(DiagnosticsSeries::from_records(records))
}

/// Columns whose decay rates the report fits.
pub const RATE_COLUMNS: [&str; 4] = ["l2_dev_sum", "lyapunov", "grad_c_l2", "grad_c_l4"];

/// `rate.<column>.*` lines: exponential fits after the initial transient
/// (the first time the Lyapunov value halves), compared to `kappa_pred`
/// when given.
pub fn rate_block(series: &DiagnosticsSeries, kappa_pred: Option<f64>) -> String {
    let mut out = String::new();
    let recs = series.records();
    if recs.is_empty() {
        return out;
    }
    let t0 = series.transient_end().map_or(recs[0].t, |i| recs[i].t);
    let _ = writeln!(out, "rate.window_start={t0:e}");
    let times = series.times();
    for name in RATE_COLUMNS {
        let Some(v) = series_column(series, name) else {
            continue;
        };
        match fit_decay_rate(&times, &v, Some((t0, f64::INFINITY))) {
            Ok(fit) => {
                let _ = writeln!(out, "rate.{name}.rate={:e}", fit.rate);
                let _ = writeln!(out, "rate.{name}.r2={:e}", fit.r_squared);
                let _ = writeln!(out, "rate.{name}.samples={}", fit.samples);
                if let (Some(k), "l2_dev_sum" | "lyapunov") = (kappa_pred, name) {
                    let _ = writeln!(out, "rate.{name}.over_kappa_pred={:e}", fit.rate / k);
                }
            }
            Err(e) => {
                let _ = writeln!(out, "rate.{name}.error={e}");
            }
        }
    }
    out
}

/// The echo block: the effective configuration followed by the derived
/// Lyapunov constants.
pub fn echo_block(cfg: &RunConfig, feasibility: &LyapunovFeasibility) -> String {
    let mut out = String::from("# effective configuration\n");
    out.push_str(&cfg.to_text());
    out.push_str("\n# derived\n");
    match feasibility {
        LyapunovFeasibility::Feasible(l) => {
            let _ = writeln!(out, "C_N={:e}", l.c_n);
            let _ = writeln!(out, "C_S={:e}", l.c_s);
            let _ = writeln!(out, "feasible=true");
            let _ = writeln!(out, "B={:e}", l.b);
            let _ = writeln!(out, "a1={:e}", l.a1);
            let _ = writeln!(out, "a2={:e}", l.a2);
            let _ = writeln!(out, "kappa_pred={:e}", l.kappa_pred);
        }
        LyapunovFeasibility::Infeasible {
            c_s,
            c_n,
            lower,
            upper,
        } => {
            let _ = writeln!(out, "C_N={c_n:e}");
            let _ = writeln!(out, "C_S={c_s:e}");
            let _ = writeln!(
                out,
                "feasible=false  # C_S >= 2 sqrt(C_N): B interval ({lower:e}, {upper:e}) is empty; no decay claimed"
            );
        }
    }
    out
}

/// Field file names of one snapshot: `n`, `c`, and the cell-averaged
/// velocity components `u_x`, `u_y`, `u_z`.
pub fn snapshot_names(dim: usize) -> Vec<&'static str> {
    let mut v = vec!["n", "c", "u_x", "u_y"];
    if dim == 3 {
        v.push("u_z");
    }
    v
}

/// Writes `dir/<field>_<k>.kssf` for every state and `dir/index.csv`
/// mapping `k` to time.
pub fn write_snapshots(dir: &Path, states: &[State]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::from("k,t\n");
    for (k, s) in states.iter().enumerate() {
        let names = snapshot_names(s.grid().dim());
        let mut fields = vec![s.n.clone(), s.c.clone()];
        for a in 0..s.grid().dim() {
            fields.push(s.u.cell_average(a));
        }
        for (name, f) in names.iter().zip(&fields) {
            write_snapshot(&dir.join(format!("{name}_{k:06}.kssf")), f)?;
        }
        let _ = writeln!(index, "{k},{:e}", s.t);
    }
    fs::write(dir.join("index.csv"), index)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(v: &[f64]) -> DiagnosticRecord {
        let mut row = v.to_vec();
        row[16] = row[16].abs().floor();
        DiagnosticRecord::from_row(&row).unwrap()
    }

    proptest! {
        #[test]
        fn csv_round_trips_bitwise(rows in proptest::collection::vec(
            proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL, 17), 1..6)) {
            let series = DiagnosticsSeries::from_records(rows.iter().map(|r| {
                let mut r = r.clone();
                r[16] = (r[16].abs() % 1e6).floor();
                record(&r)
            }).collect());
            let back = parse_csv(&csv_text(&series)).unwrap();
            for (a, b) in series.records().iter().zip(back.records()) {
                for (x, y) in a.row().iter().zip(b.row()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn header_is_checked() {
        assert!(parse_csv("t,mass\n1,2\n").is_err());
        let text = format!("{}\n1,2\n", COLUMNS.join(","));
        assert!(parse_csv(&text).is_err());
    }

    #[test]
    fn rate_block_recovers_a_known_rate() {
        let recs: Vec<DiagnosticRecord> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.01;
                let mut row = [0.0; 17];
                row[0] = t;
                row[3] = (-2.0 * t).exp();
                row[4] = (-2.0 * t).exp();
                row[6] = (-3.0 * t).exp();
                row[7] = (-6.0 * t).exp();
                row[8] = (-2.0 * t).exp();
                record(&row)
            })
            .collect();
        let text = rate_block(&DiagnosticsSeries::from_records(recs), Some(1.0));
        let line = text
            .lines()
            .find(|l| l.starts_with("rate.l2_dev_sum.rate="))
            .unwrap();
        let rate: f64 = line.split('=').nth(1).unwrap().parse().unwrap();
        assert!((rate - 2.0).abs() < 1e-9, "{text}");
        assert!(text.contains("rate.l2_dev_sum.over_kappa_pred="));
    }
}
