//! Writes field snapshots of a short bump run and reads them back.
//!
//! ```text
//! cargo run --release --example snapshot_io
//! ```

use ksns::cli::write_snapshots;
use ksns::snapshot::read_snapshot;
use ksns::stepper::run;
use ksns::verify::{builtin_on, DEFAULT_SEED};

fn main() -> ksns::Result<()> {
    let s = builtin_on("bump_n", 32, DEFAULT_SEED)?;
    let mut p = s.params.clone();
    p.t_end = 200.0 * p.dt_fixed.expect("bump uses a fixed step");
    p.snapshot_every = 50;
    let traj = run(&p, s.initial_state()?)?.into_result()?;

    let dir = std::env::temp_dir().join("ksns-snapshots");
    write_snapshots(&dir, &traj.snapshots)?;
    for (k, state) in traj.snapshots.iter().enumerate() {
        let n = read_snapshot(&dir.join(format!("n_{k:06}.kssf")))?;
        let same = n.values() == state.n.values();
        println!(
            "k={k} t={:.5} mass={:.12} max={:.5} bitwise_equal={same}",
            state.t,
            n.integral(),
            n.max()
        );
    }
    println!("snapshots in {}", dir.display());
    Ok(())
}
