//! Reference limit objects: the self-similar source solution of the
//! porous medium equation, the flat-top ("mesa") indicator profile it
//! converges to, and surrogate references produced by running the
//! solver at a much stiffer parameter.

use std::f64::consts::PI;

use thiserror::Error;

use crate::grid::{Field, Grid};
use crate::solver::{solve, SimConfig, SolverError, Trajectory};

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("profile parameters out of range: {0}")]
    BadParameter(String),
    #[error("requested profile does not fit the box: {0}")]
    BoxTooSmall(String),
}

/// Self-similar source solution of `d/dt n = Delta(n^gamma)`:
/// `U(t,x) = t^-alpha (C - k |x|^2 t^(-2 alpha/d))_+^(1/(gamma-1))`
/// with `alpha = d/(d(gamma-1)+2)`, `k = alpha(gamma-1)/(2 d gamma)`,
/// and `C` fixed so that the total mass is `M`.
#[derive(Debug, Clone, Copy)]
pub struct BarenblattProfile {
    pub gamma: f64,
    pub mass: f64,
    pub dim: usize,
    pub alpha: f64,
    pub k: f64,
    pub c: f64,
}

impl BarenblattProfile {
    pub fn new(gamma: f64, mass: f64, dim: usize) -> Result<Self, LimitsError> {
        if gamma <= 1.0 || mass <= 0.0 || !(dim == 1 || dim == 2) {
            return Err(LimitsError::BadParameter(format!(
                "gamma={gamma}, mass={mass}, dim={dim}"
            )));
        }
        let d = dim as f64;
        let alpha = d / (d * (gamma - 1.0) + 2.0);
        let k = alpha * (gamma - 1.0) / (2.0 * d * gamma);
        let c = solve_normalization(gamma, mass, dim, k);
        Ok(BarenblattProfile {
            gamma,
            mass,
            dim,
            alpha,
            k,
            c,
        })
    }

    /// Profile value at time `t > 0` and point `x` (only the first
    /// `dim` coordinates are read).
    pub fn value(&self, t: f64, x: &[f64; 2]) -> f64 {
        assert!(t > 0.0, "self-similar profile needs t > 0, got {t}");
        let d = self.dim as f64;
        let r2 = if self.dim == 1 {
            x[0] * x[0]
        } else {
            x[0] * x[0] + x[1] * x[1]
        };
        let s = self.c - self.k * r2 * t.powf(-2.0 * self.alpha / d);
        if s <= 0.0 {
            0.0
        } else {
            t.powf(-self.alpha) * s.powf(1.0 / (self.gamma - 1.0))
        }
    }

    /// Radius of the support at time `t`.
    pub fn support_radius(&self, t: f64) -> f64 {
        assert!(t > 0.0);
        (self.c / self.k).sqrt() * t.powf(self.alpha / self.dim as f64)
    }

    /// Sample on a grid around `center`; no mass renormalization.
    pub fn field(&self, grid: Grid, t: f64, center: [f64; 2]) -> Field {
        Field::from_fn(grid, |x| {
            self.value(t, &[x[0] - center[0], x[1] - center[1]])
        })
    }
}

/// Convenience wrapper around [`BarenblattProfile::value`].
pub fn barenblatt(gamma: f64, mass: f64, dim: usize, t: f64, x: &[f64; 2]) -> f64 {
    BarenblattProfile::new(gamma, mass, dim)
        .expect("invalid profile parameters")
        .value(t, x)
}

/// Mass of the profile with free constant `c` at t = 1, by quadrature
/// with the edge singularity removed (`s = sin theta`).
fn profile_mass(gamma: f64, dim: usize, k: f64, c: f64) -> f64 {
    let q = 1.0 / (gamma - 1.0);
    let radius = (c / k).sqrt();
    // 1D: 2 R C^q  int_0^{pi/2} cos^{2q+1} theta dtheta
    // 2D: 2 pi R^2 C^q int_0^{pi/2} cos^{2q+1} theta sin theta dtheta
    let m = 4096usize;
    let h = 0.5 * PI / m as f64;
    let integrand = |theta: f64| -> f64 {
        let base = theta.cos().powf(2.0 * q + 1.0);
        if dim == 1 {
            base
        } else {
            base * theta.sin()
        }
    };
    let mut acc = integrand(0.0) + integrand(0.5 * PI);
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(j as f64 * h);
    }
    let integral = acc * h / 3.0;
    if dim == 1 {
        2.0 * radius * c.powf(q) * integral
    } else {
        2.0 * PI * radius * radius * c.powf(q) * integral
    }
}

/// Bisection for the normalization constant: mass is strictly
/// increasing in `c`.
fn solve_normalization(gamma: f64, mass: f64, dim: usize, k: f64) -> f64 {
    let mut lo = 1e-300;
    let mut hi = 1.0;
    while profile_mass(gamma, dim, k, hi) < mass {
        hi *= 2.0;
        assert!(hi.is_finite(), "normalization bracket diverged");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if profile_mass(gamma, dim, k, mid) < mass {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// A limit object to measure convergence against.
#[derive(Debug, Clone)]
pub enum LimitReference {
    /// Stationary indicator profile; pressure identically zero.
    ExactIndicator { density: Field },
    /// Stationary profile given by an arbitrary function; pressure zero.
    ExactStationary { density: Field },
    /// Trajectory of a much stiffer run standing in for the limit.
    Surrogate {
        parameter: f64,
        trajectory: Trajectory,
    },
}

impl LimitReference {
    /// Stationary reference from an arbitrary profile function.
    pub fn stationary_from_profile(grid: Grid, profile: impl Fn(&[f64; 2]) -> f64) -> Self {
        LimitReference::ExactStationary {
            density: Field::from_fn(grid, profile),
        }
    }

    /// Density at snapshot `index` (stationary references ignore it).
    pub fn density_at(&self, index: usize) -> &Field {
        match self {
            LimitReference::ExactIndicator { density }
            | LimitReference::ExactStationary { density } => density,
            LimitReference::Surrogate { trajectory, .. } => {
                &trajectory.snapshots[index].density
            }
        }
    }

    /// Pressure at snapshot `index`; `None` means identically zero.
    pub fn pressure_at(&self, index: usize) -> Option<&Field> {
        match self {
            LimitReference::ExactIndicator { .. } | LimitReference::ExactStationary { .. } => {
                None
            }
            LimitReference::Surrogate { trajectory, .. } => {
                Some(&trajectory.snapshots[index].pressure)
            }
        }
    }

    pub fn snapshot_count(&self) -> Option<usize> {
        match self {
            LimitReference::Surrogate { trajectory, .. } => Some(trajectory.snapshots.len()),
            _ => None,
        }
    }
}

/// Indicator of total mass exactly `mass` (an interval in 1D, a disc in
/// 2D), with interface cells carrying their exact volume fraction.
pub fn mesa_indicator(grid: Grid, mass: f64, center: [f64; 2]) -> Result<Field, LimitsError> {
    if mass <= 0.0 {
        return Err(LimitsError::BadParameter(format!("mass={mass}")));
    }
    let h = grid.spacing();
    if grid.dim() == 1 {
        let half = 0.5 * mass;
        let (a, b) = (center[0] - half, center[0] + half);
        if a < grid.lo(0) || b > grid.hi(0) {
            return Err(LimitsError::BoxTooSmall(format!(
                "interval [{a}, {b}] vs box [{}, {}]",
                grid.lo(0),
                grid.hi(0)
            )));
        }
        let mut values = vec![0.0; grid.len()];
        for (i, v) in values.iter_mut().enumerate() {
            let x0 = grid.lo(0) + i as f64 * h;
            let x1 = x0 + h;
            let overlap = (x1.min(b) - x0.max(a)).max(0.0);
            *v = overlap / h;
        }
        Ok(Field::from_raw(grid, values))
    } else {
        let r = (mass / PI).sqrt();
        for axis in 0..2 {
            if center[axis] - r < grid.lo(axis) || center[axis] + r > grid.hi(axis) {
                return Err(LimitsError::BoxTooSmall(format!(
                    "disc radius {r} centered at {:?}",
                    center
                )));
            }
        }
        let mut values = vec![0.0; grid.len()];
        for iy in 0..grid.n(1) {
            for ix in 0..grid.n(0) {
                let x0 = grid.lo(0) + ix as f64 * h - center[0];
                let y0 = grid.lo(1) + iy as f64 * h - center[1];
                let area = disc_cell_overlap(r, x0, x0 + h, y0, y0 + h);
                values[grid.index(ix, iy)] = area / (h * h);
            }
        }
        Ok(Field::from_raw(grid, values))
    }
}

/// `int_{-r}^{x} sqrt(r^2 - t^2) dt` for `x` clamped into `[-r, r]`.
fn circ_area_below(r: f64, x: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * ((x / r).asin() + 0.5 * PI))
}

/// Area of `disc(0, r) ∩ {X <= x, Y <= y}`.
fn quadrant_area(r: f64, x: f64, y: f64) -> f64 {
    if x <= -r || y <= -r {
        return 0.0;
    }
    let x = x.min(r);
    if y >= r {
        return 2.0 * circ_area_below(r, x);
    }
    let t_star = (r * r - y * y).max(0.0).sqrt();
    if y >= 0.0 {
        // chord height min(y, c(t)) + c(t)
        let mut area = circ_area_below(r, x); // the "+ c(t)" part
        if x <= -t_star {
            area += circ_area_below(r, x);
        } else {
            area += circ_area_below(r, -t_star);
            let upper = x.min(t_star);
            area += y * (upper + t_star);
            if x > t_star {
                area += circ_area_below(r, x) - circ_area_below(r, t_star);
            }
        }
        area
    } else {
        // chord height (y + c(t))_+ supported on |t| < t_star
        if x <= -t_star {
            return 0.0;
        }
        let upper = x.min(t_star);
        y * (upper + t_star) + circ_area_below(r, upper) - circ_area_below(r, -t_star)
    }
}

/// Exact area of the intersection of `disc(0, r)` with the rectangle
/// `[x0, x1] x [y0, y1]`, by inclusion-exclusion over corners.
fn disc_cell_overlap(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    (quadrant_area(r, x1, y1) - quadrant_area(r, x0, y1) - quadrant_area(r, x1, y0)
        + quadrant_area(r, x0, y0))
    .max(0.0)
}

/// Run the solver at a stiff reference parameter and wrap the
/// trajectory as the limit stand-in for a sweep.
pub fn surrogate_limit(config: &SimConfig) -> Result<LimitReference, SolverError> {
    let parameter = config.law.stiffness();
    let trajectory = solve(config)?;
    Ok(LimitReference::Surrogate {
        parameter,
        trajectory,
    })
}
