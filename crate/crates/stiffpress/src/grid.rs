//! Uniform Cartesian grids (1D/2D) and cell-averaged scalar fields.
//!
//! The grid is cell-centered and collocated: cell `i` covers
//! `[lo + i*h, lo + (i+1)*h)` and carries its value at the center.
//! All axes share the same spacing `h`.

use thiserror::Error;

/// How stencils treat neighbours beyond the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BoundaryCondition {
    /// Wrap around; the box is a torus.
    Periodic,
    /// Ghost cells hold zero; emulates a compactly supported field on
    /// a domain large enough to contain it.
    DirichletZero,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("need hi > lo on axis {axis}: lo={lo}, hi={hi}")]
    EmptyAxis { axis: usize, lo: f64, hi: f64 },
    #[error("need at least 4 cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("cell width must match on all axes: hx={hx}, hy={hy}")]
    AnisotropicCells { hx: f64, hy: f64 },
    #[error("field values must be finite (cell {index} is {value})")]
    NonFiniteValue { index: usize, value: f64 },
    #[error("expected {expected} values for this grid, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// Uniform cell-centered mesh with a boundary-condition tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n_cells: [usize; 2],
    bc: BoundaryCondition,
    h: f64,
}

impl Grid {
    pub fn new_1d(lo: f64, hi: f64, n: usize, bc: BoundaryCondition) -> Result<Self, GridError> {
        if hi <= lo {
            return Err(GridError::EmptyAxis { axis: 0, lo, hi });
        }
        if n < 4 {
            return Err(GridError::TooFewCells(n));
        }
        let h = (hi - lo) / n as f64;
        Ok(Grid {
            dim: 1,
            lo: [lo, 0.0],
            hi: [hi, 1.0],
            n_cells: [n, 1],
            bc,
            h,
        })
    }

    pub fn new_2d(
        lo: [f64; 2],
        hi: [f64; 2],
        n: [usize; 2],
        bc: BoundaryCondition,
    ) -> Result<Self, GridError> {
        for axis in 0..2 {
            if hi[axis] <= lo[axis] {
                return Err(GridError::EmptyAxis {
                    axis,
                    lo: lo[axis],
                    hi: hi[axis],
                });
            }
            if n[axis] < 4 {
                return Err(GridError::TooFewCells(n[axis]));
            }
        }
        let hx = (hi[0] - lo[0]) / n[0] as f64;
        let hy = (hi[1] - lo[1]) / n[1] as f64;
        if (hx - hy).abs() > 1e-12 * hx.abs().max(hy.abs()) {
            return Err(GridError::AnisotropicCells { hx, hy });
        }
        Ok(Grid {
            dim: 2,
            lo,
            hi,
            n_cells: n,
            bc,
            h: hx,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Cell width, identical on all axes.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n_cells[axis]
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.n_cells[0] * self.n_cells[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Center coordinate of cell `i` along `axis`.
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (i as f64 + 0.5) * self.h
    }

    /// Center of the flattened cell `idx` as `[x, y]` (`y = 0` in 1D).
    pub fn cell_center(&self, idx: usize) -> [f64; 2] {
        let nx = self.n_cells[0];
        let ix = idx % nx;
        let iy = idx / nx;
        if self.dim == 1 {
            [self.center(0, ix), 0.0]
        } else {
            [self.center(0, ix), self.center(1, iy)]
        }
    }

    /// Flattened index of cell `(ix, iy)`; row-major, x fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n_cells[0] + ix
    }

    pub(crate) fn same_layout(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n_cells == other.n_cells && self.h == other.h
    }
}

/// Cell-averaged scalar sampled on a [`Grid`].
///
/// Fields are immutable values: every operation that "changes" a field
/// returns a new one, so sharing across threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        assert!(c.is_finite(), "field values must be finite");
        Field {
            values: vec![c; grid.len()],
            grid,
        }
    }

    /// Build a field by evaluating `f` at every cell center.
    ///
    /// Panics if `f` produces a non-finite value.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64; 2]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.cell_center(i))).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            panic!(
                "field function produced {} at cell {i} ({:?})",
                values[i],
                grid.cell_center(i)
            );
        }
        Field { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::WrongLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(GridError::NonFiniteValue { index, value });
            }
        }
        Ok(Field { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Exchange the backing storage with `other` (same length).
    pub(crate) fn swap_values(&mut self, other: &mut Vec<f64>) {
        debug_assert_eq!(other.len(), self.values.len());
        std::mem::swap(&mut self.values, other);
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cellwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cellwise `self - other`.
    pub fn sub(&self, other: &Field) -> Field {
        assert!(
            self.grid.same_layout(&other.grid),
            "fields live on different grids"
        );
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Cellwise `a*self + b*other`.
    pub fn linear_combination(&self, a: f64, other: &Field, b: f64) -> Field {
        assert!(self.grid.same_layout(&other.grid));
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }
}
