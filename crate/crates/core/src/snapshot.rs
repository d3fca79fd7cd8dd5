//! Binary scalar-field snapshots.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "KSSF"            4 bytes magic
//! version           u32 (currently 1)
//! dim               u32
//! N_1 .. N_dim      u32 each
//! L_1 .. L_dim      f64 each
//! values            f64 per cell, x-fastest
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{make_grid, GridRef, ScalarField};

pub const MAGIC: &[u8; 4] = b"KSSF";
pub const VERSION: u32 = 1;

pub fn encode(field: &ScalarField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(16 + 12 * g.dim() + 8 * g.cell_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    for &n in g.cells() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &l in g.extents() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        if self.pos + n > self.buf.len() {
            return Err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decodes a snapshot, building a fresh grid from its header.
pub fn decode(bytes: &[u8]) -> std::result::Result<ScalarField, String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let dim = r.u32()? as usize;
    if dim != 2 && dim != 3 {
        return Err(format!("bad dim {dim}"));
    }
    let cells = (0..dim)
        .map(|_| r.u32().map(|n| n as usize))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let extents = (0..dim)
        .map(|_| r.f64())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let grid = make_grid(dim, &extents, &cells).map_err(|e| e.to_string())?;
    let values = (0..grid.cell_count())
        .map(|_| r.f64())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    ScalarField::from_vec(&grid, values).map_err(|e| e.to_string())
}

pub fn write_snapshot(path: &Path, field: &ScalarField) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(field))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<ScalarField> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode(&buf).map_err(|message| Error::Snapshot {
        path: path.to_path_buf(),
        message,
    })
}

/// Reads a snapshot and checks it lives on `grid`.
pub fn read_snapshot_on(path: &Path, grid: &GridRef) -> Result<ScalarField> {
    let f = read_snapshot(path)?;
    if **f.grid() != **grid {
        return Err(Error::Snapshot {
            path: path.to_path_buf(),
            message: "grid does not match".into(),
        });
    }
    ScalarField::from_vec(grid, f.into_values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = make_grid(2, &[1.0, 2.0], &[4, 5]).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        let b = encode(&f);
        assert_eq!(&b[0..4], b"KSSF");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 5);
        assert_eq!(f64::from_le_bytes(b[20..28].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(b[28..36].try_into().unwrap()), 2.0);
        // first value is cell (0,0), second is cell (1,0): x fastest
        let v0 = f64::from_le_bytes(b[36..44].try_into().unwrap());
        let v1 = f64::from_le_bytes(b[44..52].try_into().unwrap());
        assert_eq!(v0, f.values()[0]);
        assert_eq!(v1 - v0, 0.25);
        assert_eq!(b.len(), 36 + 8 * 20);
    }

    #[test]
    fn rejects_corruption() {
        let g = make_grid(2, &[1.0, 1.0], &[4, 4]).unwrap();
        let b = encode(&ScalarField::constant(&g, 1.0));
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        assert!(decode(&b[..b.len() - 3]).is_err());
        let mut long = b.clone();
        long.push(0);
        assert!(decode(&long).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(3, &[1.0, 1.0, 0.5], &[4, 5, 6]).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] * 3.0).sin() + x[2]);
        let p = dir.path().join("n.kssf");
        write_snapshot(&p, &f).unwrap();
        let back = read_snapshot_on(&p, &g).unwrap();
        assert_eq!(back.values(), f.values());
    }

    proptest! {
        #[test]
        fn encode_decode_is_bitwise(vals in proptest::collection::vec(-1e6f64..1e6, 20), lx in 0.1f64..10.0) {
            let g = make_grid(2, &[lx, 1.0], &[4, 5]).unwrap();
            let f = ScalarField::from_vec(&g, vals).unwrap();
            let back = decode(&encode(&f)).unwrap();
            prop_assert_eq!(back.values(), f.values());
            prop_assert_eq!(back.grid().extents(), g.extents());
        }
    }
}
