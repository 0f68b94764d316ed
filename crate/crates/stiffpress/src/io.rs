//! Binary snapshot dumps and diagnostics CSV.
//!
//! Snapshot file layout (`STPR1`), little-endian throughout:
//!
//! ```text
//! magic   5 bytes  "STPR1"
//! dim     u8       1 or 2
//! n_cells u64 x dim
//! lo      f64 x dim
//! hi      f64 x dim
//! bc      u8       0 = periodic, 1 = dirichlet-zero
//! count   u64      number of snapshots
//! times   f64 x count
//! data    count x (n_total f64, row-major, x fastest)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::grid::{BoundaryCondition, Field, Grid, GridError};
use crate::solver::StepDiagnostics;

pub const MAGIC: &[u8; 5] = b"STPR1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file: {0}")]
    Format(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_f64(r: &mut impl Read) -> Result<f64, IoError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, IoError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u8(r: &mut impl Read) -> Result<u8, IoError> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)?;
    Ok(buf[0])
}

/// Write timed fields sharing one grid.
pub fn write_snapshots(
    path: &Path,
    grid: &Grid,
    snapshots: &[(f64, &Field)],
) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[grid.dim() as u8])?;
    for axis in 0..grid.dim() {
        write_u64(&mut w, grid.n(axis) as u64)?;
    }
    for axis in 0..grid.dim() {
        write_f64(&mut w, grid.lo(axis))?;
    }
    for axis in 0..grid.dim() {
        write_f64(&mut w, grid.hi(axis))?;
    }
    let bc = match grid.bc() {
        BoundaryCondition::Periodic => 0u8,
        BoundaryCondition::DirichletZero => 1u8,
    };
    w.write_all(&[bc])?;
    write_u64(&mut w, snapshots.len() as u64)?;
    for (t, _) in snapshots {
        write_f64(&mut w, *t)?;
    }
    for (_, field) in snapshots {
        debug_assert_eq!(field.grid().len(), grid.len());
        for &v in field.values() {
            write_f64(&mut w, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot file back into a grid and timed fields, bit-exact.
#[allow(clippy::type_complexity)]
pub fn read_snapshots(path: &Path) -> Result<(Grid, Vec<(f64, Field)>), IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(IoError::Format(format!("bad magic {magic:?}")));
    }
    let dim = read_u8(&mut r)? as usize;
    if !(dim == 1 || dim == 2) {
        return Err(IoError::Format(format!("bad dimension {dim}")));
    }
    let mut n = [1usize; 2];
    for item in n.iter_mut().take(dim) {
        *item = read_u64(&mut r)? as usize;
    }
    let mut lo = [0.0f64; 2];
    for item in lo.iter_mut().take(dim) {
        *item = read_f64(&mut r)?;
    }
    let mut hi = [0.0f64; 2];
    for item in hi.iter_mut().take(dim) {
        *item = read_f64(&mut r)?;
    }
    let bc = match read_u8(&mut r)? {
        0 => BoundaryCondition::Periodic,
        1 => BoundaryCondition::DirichletZero,
        other => return Err(IoError::Format(format!("bad bc tag {other}"))),
    };
    let grid = if dim == 1 {
        Grid::new_1d(lo[0], hi[0], n[0], bc)?
    } else {
        Grid::new_2d(lo, hi, n, bc)?
    };
    let count = read_u64(&mut r)? as usize;
    let mut times = Vec::with_capacity(count);
    for _ in 0..count {
        times.push(read_f64(&mut r)?);
    }
    let total = grid.len();
    let mut out = Vec::with_capacity(count);
    for t in times {
        let mut values = Vec::with_capacity(total);
        for _ in 0..total {
            values.push(read_f64(&mut r)?);
        }
        out.push((t, Field::from_values(grid, values)?));
    }
    Ok((grid, out))
}

/// `step,t,dt,mass,min,max,max_pressure,bv` rows.
pub fn write_diagnostics_csv(path: &Path, rows: &[StepDiagnostics]) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "step,t,dt,mass,min,max,max_pressure,bv")?;
    for (i, d) in rows.iter().enumerate() {
        writeln!(
            w,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            i, d.t, d.dt, d.mass, d.min, d.max, d.max_pressure, d.bv
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshots_round_trip_bit_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let dir = tempfile::tempdir().unwrap();
        for dim in [1usize, 2] {
            let grid = if dim == 1 {
                Grid::new_1d(-1.5, 1.5, 32, BoundaryCondition::DirichletZero).unwrap()
            } else {
                Grid::new_2d([0.0, -1.0], [2.0, 1.0], [16, 16], BoundaryCondition::Periodic)
                    .unwrap()
            };
            let fields: Vec<(f64, Field)> = (0..3)
                .map(|i| {
                    (
                        0.1 * i as f64,
                        Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            let path = dir.path().join(format!("snap{dim}.stpr"));
            let refs: Vec<(f64, &Field)> = fields.iter().map(|(t, f)| (*t, f)).collect();
            write_snapshots(&path, &grid, &refs).unwrap();
            let (grid_back, back) = read_snapshots(&path).unwrap();
            assert_eq!(&grid_back, &grid);
            assert_eq!(back.len(), fields.len());
            for ((t0, f0), (t1, f1)) in fields.iter().zip(&back) {
                assert_eq!(t0.to_bits(), t1.to_bits());
                for (a, b) in f0.values().iter().zip(f1.values()) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.stpr");
        std::fs::write(&path, b"not a snapshot").unwrap();
        assert!(matches!(read_snapshots(&path), Err(IoError::Format(_))));
    }
}
