//! Self-describing binary field snapshots.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic   4 bytes  b"CFS1"
//! version u32      1
//! nx, ny, nz       u32 each
//! dx, dy, dz       f64 each
//! x_min, y_min, z_min  f64 each
//! time_s  f64
//! values  nx*ny*nz f64, k-fastest order: index = (i*ny + j)*nz + k
//! ```
//!
//! Values are stored as f64 regardless of the field's scalar type.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ConcentrationField, GridSpec};
use crate::scalar::Scalar;

const MAGIC: [u8; 4] = *b"CFS1";
const VERSION: u32 = 1;

pub fn write_snapshot<T: Scalar>(field: &ConcentrationField<T>, path: &Path) -> Result<()> {
    let grid = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in [grid.nx(), grid.ny(), grid.nz()] {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    for v in [
        grid.dx().widen(),
        grid.dy().widen(),
        grid.dz().widen(),
        grid.x_min().widen(),
        grid.y_min().widen(),
        grid.z_min().widen(),
        field.time().widen(),
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in field.values() {
        w.write_all(&v.widen().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<ConcentrationField<f64>> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Snapshot("file too short for header".to_string()))?;
    if magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let nz = read_u32(&mut r)? as usize;
    let dx = read_f64(&mut r)?;
    let dy = read_f64(&mut r)?;
    let dz = read_f64(&mut r)?;
    let x_min = read_f64(&mut r)?;
    let y_min = read_f64(&mut r)?;
    let z_min = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;

    let grid = GridSpec::from_counts([x_min, y_min, z_min], [dx, dy, dz], [nx, ny, nz])
        .map_err(|e| Error::Snapshot(format!("invalid grid header: {e}")))?;
    let count = grid.cell_count();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(read_f64(&mut r)?);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Snapshot("trailing bytes after values".to_string()));
    }
    ConcentrationField::from_values(grid, values, time)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Snapshot("truncated header".to_string()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Snapshot("truncated data".to_string()))?;
    Ok(f64::from_le_bytes(buf))
}
