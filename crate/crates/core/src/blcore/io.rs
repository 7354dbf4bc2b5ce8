//! SGNB binary container and CSV export for grid signals.
//!
//! Layout, all little-endian: magic `SGNB`, `u32` version (1), `u32` d,
//! `u32` N_i for each axis, `f64` L_i for each axis, then `prod N_i` `f64`
//! values in row-major order.

use std::io::{Read, Write};

use super::grid::Grid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SGNB";
pub const VERSION: u32 = 1;

pub fn write_sgnb<W: Write>(mut w: W, grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for &n in grid.shape() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    for &l in grid.period() {
        w.write_all(&l.to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_sgnb<R: Read>(mut r: R) -> Result<(Grid, Vec<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    if !(1..=2).contains(&d) {
        return Err(Error::Format(format!("dimension {d}")));
    }
    let n = (0..d).map(|_| read_u32(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let l = (0..d).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let grid = Grid::new(&n, &l)?;
    let values = (0..grid.len()).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    Ok((grid, values))
}

/// One row per grid point: index columns (`i0[,i1]`) then the value.
pub fn write_csv<W: Write>(mut w: W, grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
    }
    let header = if grid.dim() == 1 { "i0,value" } else { "i0,i1,value" };
    writeln!(w, "{header}")?;
    for (flat, v) in values.iter().enumerate() {
        let [a, b] = grid.unravel(flat);
        if grid.dim() == 1 {
            writeln!(w, "{a},{v:e}")?;
        } else {
            writeln!(w, "{a},{b},{v:e}")?;
        }
    }
    Ok(())
}

pub fn read_csv<R: Read>(mut r: R, grid: &Grid) -> Result<Vec<f64>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut values = vec![f64::NAN; grid.len()];
    for (line_no, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != grid.dim() + 1 {
            return Err(Error::Format(format!("line {}: expected {} columns", line_no + 1, grid.dim() + 1)));
        }
        let bad = |_| Error::Format(format!("line {}: parse error", line_no + 1));
        let mut idx = [0usize; 2];
        for (i, c) in cols[..grid.dim()].iter().enumerate() {
            idx[i] = c.trim().parse().map_err(bad)?;
            if idx[i] >= grid.shape()[i] {
                return Err(Error::Format(format!("line {}: index out of range", line_no + 1)));
            }
        }
        values[grid.ravel(idx)] =
            cols[grid.dim()].trim().parse().map_err(|_| Error::Format(format!("line {}: bad value", line_no + 1)))?;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Format("missing grid points".into()));
    }
    Ok(values)
}
