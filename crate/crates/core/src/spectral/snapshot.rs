//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `KGF1`                              |
//! | 4      | 2    | `dim` as u16                              |
//! | 6      | 2    | `n` as u16                                |
//! | 8      | 24   | three f64 period lengths, unused axes 0.0 |
//! | 32     | 8·n^dim | values as f64, row-major, last axis fastest |

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Field, TorusGrid};

pub const MAGIC: &[u8; 4] = b"KGF1";
pub const HEADER_LEN: usize = 32;

pub fn write_field<T: Real, W: Write>(f: &Field<T>, mut w: W) -> Result<()> {
    let g = f.grid();
    let n = u16::try_from(g.n())
        .map_err(|_| Error::Format(format!("n = {} does not fit the header", g.n())))?;
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&(g.dim() as u16).to_le_bytes());
    header[6..8].copy_from_slice(&n.to_le_bytes());
    for (axis, l) in g.lengths().iter().enumerate() {
        let off = 8 + 8 * axis;
        header[off..off + 8].copy_from_slice(&l.as_f64().to_le_bytes());
    }
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(8 * f.values().len());
    for v in f.values() {
        body.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

/// Reads a snapshot, building a fresh grid from the header.
pub fn read_field<T: Real, R: Read>(mut r: R) -> Result<Field<T>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dim = u16::from_le_bytes([header[4], header[5]]) as usize;
    let n = u16::from_le_bytes([header[6], header[7]]) as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("dimension {dim} in header")));
    }
    let lengths: Vec<T> = (0..dim)
        .map(|axis| {
            let off = 8 + 8 * axis;
            let mut b = [0u8; 8];
            b.copy_from_slice(&header[off..off + 8]);
            T::lit(f64::from_le_bytes(b))
        })
        .collect();
    let grid = TorusGrid::new(dim, n, &lengths)?;
    read_values(r, grid)
}

/// Reads a snapshot onto an existing grid, which must match the header.
pub fn read_field_on<T: Real, R: Read>(r: R, grid: &Arc<TorusGrid<T>>) -> Result<Field<T>> {
    let f: Field<T> = read_field(r)?;
    if **f.grid() != **grid {
        return Err(Error::GridMismatch);
    }
    Field::new(grid.clone(), f.into_values())
}

fn read_values<T: Real, R: Read>(mut r: R, grid: Arc<TorusGrid<T>>) -> Result<Field<T>> {
    let mut body = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut body)
        .map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    let values = body
        .chunks_exact(8)
        .map(|c| {
            let mut b = [0u8; 8];
            b.copy_from_slice(c);
            T::lit(f64::from_le_bytes(b))
        })
        .collect();
    Field::new(grid, values)
}
