//! Discrete calculus on cell-centered grids: Laplacian, gradient,
//! divergence, and mass.
//!
//! Stencil choices:
//! - `laplacian` is the compact second-order stencil
//!   `(f[i+1] - 2 f[i] + f[i-1]) / h^2` summed over axes.
//! - `gradient` and `divergence` are centered differences at cell
//!   centers, `(f[i+1] - f[i-1]) / (2h)`. The pair is skew-adjoint, so
//!   summation by parts `Σ f·div F = -Σ grad f·F` holds exactly on
//!   periodic grids (up to float rounding).
//!
//! Ghost values follow the grid's boundary tag: wrap for `Periodic`,
//! zero for `DirichletZero`.

use crate::grid::{BoundaryCondition, Field, Grid};

#[inline]
fn neighbor_value(values: &[f64], grid: &Grid, ix: usize, iy: usize, axis: usize, off: isize) -> f64 {
    let n = grid.n(axis);
    let pos = if axis == 0 { ix as isize } else { iy as isize } + off;
    match grid.bc() {
        BoundaryCondition::Periodic => {
            let p = pos.rem_euclid(n as isize) as usize;
            let (jx, jy) = if axis == 0 { (p, iy) } else { (ix, p) };
            values[grid.index(jx, jy)]
        }
        BoundaryCondition::DirichletZero => {
            if pos < 0 || pos >= n as isize {
                0.0
            } else {
                let p = pos as usize;
                let (jx, jy) = if axis == 0 { (p, iy) } else { (ix, p) };
                values[grid.index(jx, jy)]
            }
        }
    }
}

/// Compact centered Laplacian respecting the grid's boundary tag.
pub fn laplacian(f: &Field) -> Field {
    let grid = *f.grid();
    let v = f.values();
    let h2 = grid.spacing() * grid.spacing();
    let (nx, ny) = (grid.n(0), grid.n(1));
    let mut out = vec![0.0; grid.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let idx = grid.index(ix, iy);
            let c = v[idx];
            let mut acc = 0.0;
            for axis in 0..grid.dim() {
                let l = neighbor_value(v, &grid, ix, iy, axis, -1);
                let r = neighbor_value(v, &grid, ix, iy, axis, 1);
                acc += l - 2.0 * c + r;
            }
            out[idx] = acc / h2;
        }
    }
    Field::from_raw(grid, out)
}

/// Centered gradient; one component field per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    let grid = *f.grid();
    let v = f.values();
    let two_h = 2.0 * grid.spacing();
    let (nx, ny) = (grid.n(0), grid.n(1));
    (0..grid.dim())
        .map(|axis| {
            let mut out = vec![0.0; grid.len()];
            for iy in 0..ny {
                for ix in 0..nx {
                    let l = neighbor_value(v, &grid, ix, iy, axis, -1);
                    let r = neighbor_value(v, &grid, ix, iy, axis, 1);
                    out[grid.index(ix, iy)] = (r - l) / two_h;
                }
            }
            Field::from_raw(grid, out)
        })
        .collect()
}

/// Centered divergence of a vector field (one component per axis).
///
/// Negative adjoint of [`gradient`], which gives the exact discrete
/// integration-by-parts identity on periodic grids.
pub fn divergence(components: &[Field]) -> Field {
    assert!(!components.is_empty(), "divergence needs >= 1 component");
    let grid = *components[0].grid();
    assert_eq!(
        components.len(),
        grid.dim(),
        "expected one component per axis"
    );
    let two_h = 2.0 * grid.spacing();
    let (nx, ny) = (grid.n(0), grid.n(1));
    let mut out = vec![0.0; grid.len()];
    for (axis, comp) in components.iter().enumerate() {
        assert!(comp.grid().same_layout(&grid));
        let v = comp.values();
        for iy in 0..ny {
            for ix in 0..nx {
                let l = neighbor_value(v, &grid, ix, iy, axis, -1);
                let r = neighbor_value(v, &grid, ix, iy, axis, 1);
                out[grid.index(ix, iy)] += (r - l) / two_h;
            }
        }
    }
    Field::from_raw(grid, out)
}

/// Total mass `h^d Σ f`.
pub fn mass(f: &Field) -> f64 {
    f.grid().cell_volume() * f.values().iter().sum::<f64>()
}

/// Discrete `h^d Σ f g`, the L2 pairing of two fields.
pub fn inner(f: &Field, g: &Field) -> f64 {
    assert!(f.grid().same_layout(g.grid()));
    f.grid().cell_volume()
        * f.values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
}
