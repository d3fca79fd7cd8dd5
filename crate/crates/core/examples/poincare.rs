//! Poincaré constant of the discrete Neumann Laplacian against the
//! continuum value `(L_max / pi)^2`.
//!
//! ```text
//! cargo run --release --example poincare
//! ```

use std::f64::consts::PI;

use ksns::diagnostics::poincare_constant;
use ksns::grid::Grid;

fn main() -> ksns::Result<()> {
    let cases: [(usize, &[f64], usize); 5] = [
        (2, &[1.0, 1.0], 16),
        (2, &[1.0, 1.0], 64),
        (2, &[2.0, 1.0], 64),
        (3, &[1.0, 1.0, 1.0], 16),
        (3, &[1.0, 1.0, 1.0], 32),
    ];
    for (dim, extents, n) in cases {
        let g = Grid::new(dim, extents, &vec![n; dim])?;
        let c_n = poincare_constant(&g)?;
        let l = extents.iter().cloned().fold(0.0, f64::max);
        let exact = (l / PI).powi(2);
        println!(
            "dim={dim} extents={extents:?} N={n:<3} C_N={c_n:.6}  continuum={exact:.6}  rel_err={:.2e}",
            (c_n / exact - 1.0).abs()
        );
    }
    Ok(())
}
