//! Explicit finite-volume time integration of
//! `d/dt n = Delta A(n) + div(n grad V) + n g`
//! with adaptive stability-bounded steps.
//!
//! Fluxes are assembled per face (diffusion as face differences of the
//! flux potential, drift first-order upwinded on the transport velocity
//! `-grad V`), so interior updates telescope and mass is conserved
//! exactly on periodic grids when `g = 0`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::calculus::{laplacian, mass};
use crate::grid::{BoundaryCondition, Field, Grid, GridError};
use crate::limits::{mesa_indicator, BarenblattProfile};
use crate::metrics::bv_seminorm;
use crate::pressure::{LawKind, PressureLaw};

/// Densities at or above `1 - SINGULAR_MARGIN` count as saturated
/// (out of domain) for the singular law.
pub const SINGULAR_MARGIN: f64 = 1e-12;

/// Undershoots smaller than this are clipped to zero; anything larger
/// aborts the run, since silently clipping it would corrupt mass.
pub const UNDERSHOOT_CLIP: f64 = 1e-14;

/// Dirichlet runs must keep the support away from the walls: cells
/// within two of a boundary stay under this threshold.
pub const BOUNDARY_SENSOR_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("domain violation at t = {t}: {detail}")]
    DomainViolation { t: f64, detail: String },
    #[error("support reached the box margin at t = {t} (value {value:e} within two cells of a wall)")]
    BoundaryTouched { t: f64, value: f64 },
    #[error("step budget exhausted after {steps} steps at t = {t}")]
    TimeoutExceeded { steps: usize, t: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type SpaceFn = Arc<dyn Fn(&[f64; 2]) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, &[f64; 2]) -> f64 + Send + Sync>;

/// Drift potential `V(x)` with the semiconvexity constant it claims.
#[derive(Clone)]
pub struct DriftSpec {
    pub potential: SpaceFn,
    /// Claimed constant in `D^2 V >= (lambda + tr(D^2 V)/2) I`;
    /// spot-checked by finite differences when present.
    pub lambda: Option<f64>,
}

impl DriftSpec {
    pub fn quadratic(strength: f64, center: [f64; 2]) -> Self {
        DriftSpec {
            potential: Arc::new(move |x: &[f64; 2]| {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                0.5 * strength * (dx * dx + dy * dy)
            }),
            lambda: if strength >= 0.0 { Some(0.0) } else { None },
        }
    }

    fn check_semiconvexity(&self, grid: &Grid) -> Result<(), SolverError> {
        let Some(lambda) = self.lambda else {
            return Ok(());
        };
        let h = grid.spacing();
        let v = &self.potential;
        let mut worst = f64::INFINITY;
        let mut scale = 0.0f64;
        let mut probe = |x: [f64; 2]| {
            let vxx = (v(&[x[0] + h, x[1]]) - 2.0 * v(&x) + v(&[x[0] - h, x[1]])) / (h * h);
            if grid.dim() == 1 {
                worst = worst.min(0.5 * vxx);
                scale = scale.max(vxx.abs());
            } else {
                let vyy = (v(&[x[0], x[1] + h]) - 2.0 * v(&x) + v(&[x[0], x[1] - h])) / (h * h);
                let vxy = (v(&[x[0] + h, x[1] + h]) - v(&[x[0] + h, x[1] - h])
                    - v(&[x[0] - h, x[1] + h])
                    + v(&[x[0] - h, x[1] - h]))
                    / (4.0 * h * h);
                // smallest eigenvalue of D^2 V - (tr D^2 V / 2) I
                let a = 0.5 * (vxx - vyy);
                worst = worst.min(-(a * a + vxy * vxy).sqrt());
                scale = scale.max(vxx.abs()).max(vyy.abs()).max(vxy.abs());
            }
        };
        let stride_x = (grid.n(0) / 8).max(1);
        if grid.dim() == 1 {
            let mut ix = stride_x;
            while ix + stride_x <= grid.n(0) {
                probe([grid.center(0, ix.min(grid.n(0) - 1)), 0.0]);
                ix += stride_x;
            }
        } else {
            let stride_y = (grid.n(1) / 8).max(1);
            let mut iy = stride_y;
            while iy + stride_y <= grid.n(1) {
                let mut ix = stride_x;
                while ix + stride_x <= grid.n(0) {
                    probe([
                        grid.center(0, ix.min(grid.n(0) - 1)),
                        grid.center(1, iy.min(grid.n(1) - 1)),
                    ]);
                    ix += stride_x;
                }
                iy += stride_y;
            }
        }
        let tol = 1e-4 * (1.0 + scale);
        if worst < lambda - tol {
            return Err(SolverError::InvalidConfig {
                detail: format!(
                    "drift potential violates its claimed semiconvexity: min {worst} < lambda {lambda}"
                ),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftSpec")
            .field("lambda", &self.lambda)
            .finish_non_exhaustive()
    }
}

/// Reaction rate `g(t, x)` with its essential upper bound.
#[derive(Clone)]
pub struct ReactionSpec {
    pub rate: SpaceTimeFn,
    /// `||g_+||_inf`, used in the stability bound.
    pub g_plus_max: f64,
    /// Whether `Delta g >= 0` is claimed; spot-checked at start.
    pub subharmonic: bool,
}

impl ReactionSpec {
    pub fn constant(rate: f64) -> Self {
        ReactionSpec {
            rate: Arc::new(move |_, _| rate),
            g_plus_max: rate.max(0.0),
            subharmonic: true,
        }
    }

    fn check(&self, grid: &Grid, t_end: f64) -> Result<(), SolverError> {
        for &t in &[0.0, 0.5 * t_end, t_end] {
            let stride = (grid.len() / 64).max(1);
            for idx in (0..grid.len()).step_by(stride) {
                let x = grid.cell_center(idx);
                let g = (self.rate)(t, &x);
                if g > self.g_plus_max + 1e-12 * (1.0 + self.g_plus_max) {
                    return Err(SolverError::InvalidConfig {
                        detail: format!(
                            "reaction exceeds its declared bound: g({t}, {x:?}) = {g} > {}",
                            self.g_plus_max
                        ),
                    });
                }
            }
            if self.subharmonic {
                let g_field = Field::from_fn(*grid, |x| (self.rate)(t, x));
                let lap = laplacian(&g_field);
                let scale =
                    1.0 + g_field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let min = lap.min();
                let h = grid.spacing();
                if min < -1e-6 * scale / (h * h) {
                    return Err(SolverError::InvalidConfig {
                        detail: format!(
                            "reaction claims Delta g >= 0 but the discrete Laplacian has min {min} at t = {t}"
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ReactionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionSpec")
            .field("g_plus_max", &self.g_plus_max)
            .field("subharmonic", &self.subharmonic)
            .finish_non_exhaustive()
    }
}

/// Named initial data; profiles carrying a target mass are rescaled so
/// the discrete mass matches it exactly.
#[derive(Clone)]
pub enum InitialData {
    /// Self-similar source profile frozen at `t = time_offset`.
    Barenblatt {
        gamma: f64,
        mass: f64,
        time_offset: f64,
        center: [f64; 2],
    },
    /// Flat indicator of the given mass (exact volume fractions).
    MesaIndicator { mass: f64, center: [f64; 2] },
    /// Smooth compactly supported bump of the given radius.
    SmoothBump {
        mass: f64,
        radius: f64,
        center: [f64; 2],
    },
    /// Ring (2D) / symmetric two-bump (1D) data whose hole closes under
    /// diffusion; the focusing experiment preset.
    Annulus {
        mass: f64,
        r_inner: f64,
        r_outer: f64,
        center: [f64; 2],
    },
    Uniform { value: f64 },
    Custom {
        profile: SpaceFn,
        /// Rescale to this mass when present.
        mass: Option<f64>,
    },
}

impl InitialData {
    pub fn build(&self, grid: Grid) -> Result<Field, SolverError> {
        let rescale = |field: Field, target: f64| -> Result<Field, SolverError> {
            let m = mass(&field);
            if m <= 0.0 {
                return Err(SolverError::InvalidConfig {
                    detail: "initial datum has nonpositive mass on this grid".into(),
                });
            }
            Ok(field.scale(target / m))
        };
        match self {
            InitialData::Barenblatt {
                gamma,
                mass: m,
                time_offset,
                center,
            } => {
                let prof = BarenblattProfile::new(*gamma, *m, grid.dim()).map_err(|e| {
                    SolverError::InvalidConfig {
                        detail: e.to_string(),
                    }
                })?;
                rescale(prof.field(grid, *time_offset, *center), *m)
            }
            InitialData::MesaIndicator { mass: m, center } => mesa_indicator(grid, *m, *center)
                .map_err(|e| SolverError::InvalidConfig {
                    detail: e.to_string(),
                }),
            InitialData::SmoothBump {
                mass: m,
                radius,
                center,
            } => {
                let (r, c) = (*radius, *center);
                let dim = grid.dim();
                let f = Field::from_fn(grid, |x| {
                    let mut r2 = (x[0] - c[0]) * (x[0] - c[0]);
                    if dim == 2 {
                        r2 += (x[1] - c[1]) * (x[1] - c[1]);
                    }
                    let s2 = r2 / (r * r);
                    if s2 < 1.0 {
                        (1.0 - 1.0 / (1.0 - s2)).exp()
                    } else {
                        0.0
                    }
                });
                rescale(f, *m)
            }
            InitialData::Annulus {
                mass: m,
                r_inner,
                r_outer,
                center,
            } => {
                let (ri, ro, c) = (*r_inner, *r_outer, *center);
                if !(0.0 < ri && ri < ro) {
                    return Err(SolverError::InvalidConfig {
                        detail: format!("annulus needs 0 < r_inner < r_outer, got {ri}, {ro}"),
                    });
                }
                let dim = grid.dim();
                let mid = 0.5 * (ri + ro);
                let half = 0.5 * (ro - ri);
                let f = Field::from_fn(grid, |x| {
                    let mut r2 = (x[0] - c[0]) * (x[0] - c[0]);
                    if dim == 2 {
                        r2 += (x[1] - c[1]) * (x[1] - c[1]);
                    }
                    let s = (r2.sqrt() - mid) / half;
                    if s.abs() < 1.0 {
                        (1.0 - 1.0 / (1.0 - s * s)).exp()
                    } else {
                        0.0
                    }
                });
                rescale(f, *m)
            }
            InitialData::Uniform { value } => {
                if *value < 0.0 {
                    return Err(SolverError::InvalidConfig {
                        detail: format!("uniform initial value must be >= 0, got {value}"),
                    });
                }
                Ok(Field::constant(grid, *value))
            }
            InitialData::Custom { profile, mass: m } => {
                let f = Field::from_fn(grid, |x| profile(x));
                if f.min() < 0.0 {
                    return Err(SolverError::InvalidConfig {
                        detail: "custom initial datum is negative somewhere".into(),
                    });
                }
                match m {
                    Some(target) => rescale(f, *target),
                    None => Ok(f),
                }
            }
        }
    }
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Barenblatt {
                gamma,
                mass,
                time_offset,
                ..
            } => write!(f, "Barenblatt(gamma={gamma}, mass={mass}, t0={time_offset})"),
            InitialData::MesaIndicator { mass, .. } => write!(f, "MesaIndicator(mass={mass})"),
            InitialData::SmoothBump { mass, radius, .. } => {
                write!(f, "SmoothBump(mass={mass}, radius={radius})")
            }
            InitialData::Annulus {
                mass,
                r_inner,
                r_outer,
                ..
            } => write!(f, "Annulus(mass={mass}, r=[{r_inner},{r_outer}])"),
            InitialData::Uniform { value } => write!(f, "Uniform({value})"),
            InitialData::Custom { mass, .. } => write!(f, "Custom(mass={mass:?})"),
        }
    }
}

/// Full description of one run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: Grid,
    pub law: PressureLaw,
    pub drift: Option<DriftSpec>,
    pub reaction: Option<ReactionSpec>,
    pub t_end: f64,
    /// Safety factor in (0, 1] on the stability bound.
    pub cfl: f64,
    pub snapshot_times: Vec<f64>,
    pub init: InitialData,
    pub max_steps: usize,
}

impl SimConfig {
    pub fn new(grid: Grid, law: PressureLaw, init: InitialData, t_end: f64) -> Self {
        SimConfig {
            grid,
            law,
            drift: None,
            reaction: None,
            t_end,
            cfl: 0.9,
            snapshot_times: uniform_times(t_end, 11),
            init,
            max_steps: 20_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::InvalidConfig {
                detail: format!("cfl must lie in (0, 1], got {}", self.cfl),
            });
        }
        if self.t_end < 0.0 || !self.t_end.is_finite() {
            return Err(SolverError::InvalidConfig {
                detail: format!("t_end must be finite and >= 0, got {}", self.t_end),
            });
        }
        if self.snapshot_times.is_empty() {
            return Err(SolverError::InvalidConfig {
                detail: "need at least one snapshot time".into(),
            });
        }
        for w in self.snapshot_times.windows(2) {
            if w[1] <= w[0] {
                return Err(SolverError::InvalidConfig {
                    detail: "snapshot times must be strictly increasing".into(),
                });
            }
        }
        let first = self.snapshot_times[0];
        let last = *self.snapshot_times.last().unwrap();
        if first < 0.0 || last > self.t_end + 1e-12 * self.t_end.max(1.0) {
            return Err(SolverError::InvalidConfig {
                detail: format!(
                    "snapshot times [{first}, {last}] outside [0, {}]",
                    self.t_end
                ),
            });
        }
        if self.max_steps == 0 {
            return Err(SolverError::InvalidConfig {
                detail: "max_steps must be positive".into(),
            });
        }
        if let Some(drift) = &self.drift {
            drift.check_semiconvexity(&self.grid)?;
        }
        if let Some(reaction) = &self.reaction {
            reaction.check(&self.grid, self.t_end)?;
        }
        Ok(())
    }

    /// Step cap for degenerate (near-vacuum) states.
    pub fn dt_max(&self) -> f64 {
        if self.t_end > 0.0 {
            self.t_end / 1000.0
        } else {
            f64::INFINITY
        }
    }
}

/// `count` uniformly spaced times on `[0, t_end]` (just `[0]` when
/// `t_end == 0`).
pub fn uniform_times(t_end: f64, count: usize) -> Vec<f64> {
    if t_end <= 0.0 || count <= 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|i| t_end * i as f64 / (count - 1) as f64)
        .collect()
}

/// One stored state: density and the pressure derived from it.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub density: Field,
    pub pressure: Field,
}

/// Per-step scalars recorded along a run.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub max_pressure: f64,
    pub bv: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn final_density(&self) -> &Field {
        &self
            .snapshots
            .last()
            .expect("trajectory has snapshots")
            .density
    }

    /// Largest pressure observed over the whole run.
    pub fn observed_max_pressure(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.max_pressure)
            .fold(0.0, f64::max)
    }
}

/// Face-centered `grad V` precomputed once per run.
struct DriftFaces {
    /// Per axis, `lines * faces_per_line` entries; `n+1` faces per line
    /// on Dirichlet grids, `n` (wrapping) on periodic ones.
    grad_v: Vec<Vec<f64>>,
    max_speed: f64,
}

fn build_drift_faces(grid: &Grid, drift: &DriftSpec) -> DriftFaces {
    let h = grid.spacing();
    let (nx, ny) = (grid.n(0), grid.n(1));
    let v = &drift.potential;
    // V is ambient, so ghost centers outside the box are fine
    let value_at = |ix: isize, iy: isize| -> f64 {
        let x = grid.lo(0) + (ix as f64 + 0.5) * h;
        let y = if grid.dim() == 2 {
            grid.lo(1) + (iy as f64 + 0.5) * h
        } else {
            0.0
        };
        v(&[x, y])
    };
    let mut grad_v = Vec::new();
    let mut max_speed = 0.0f64;
    for axis in 0..grid.dim() {
        let n_axis = grid.n(axis);
        let periodic = grid.bc() == BoundaryCondition::Periodic;
        let faces_per_line = if periodic { n_axis } else { n_axis + 1 };
        let lines = if axis == 0 { ny } else { nx };
        let mut arr = vec![0.0; faces_per_line * lines];
        for line in 0..lines {
            for f in 0..faces_per_line {
                let (left, right) = if periodic {
                    ((f as isize - 1).rem_euclid(n_axis as isize), f as isize)
                } else {
                    (f as isize - 1, f as isize)
                };
                let dv = if axis == 0 {
                    value_at(right, line as isize) - value_at(left, line as isize)
                } else {
                    value_at(line as isize, right) - value_at(line as isize, left)
                } / h;
                arr[line * faces_per_line + f] = dv;
                max_speed = max_speed.max(dv.abs());
            }
        }
        grad_v.push(arr);
    }
    DriftFaces { grad_v, max_speed }
}

fn max_diffusivity(state: &Field, law: &PressureLaw) -> Result<f64, String> {
    let max_n = state.max();
    if let LawKind::Singular { .. } = law.kind {
        if max_n >= 1.0 - SINGULAR_MARGIN {
            return Err(format!("singular-law density reached {max_n}"));
        }
    }
    // both laws have monotone A'(n)
    Ok(if max_n > 0.0 {
        law.flux_potential_derivative(max_n)
    } else {
        0.0
    })
}

/// Largest stable explicit step from this state:
/// `cfl * min(h^2/(2 d max A'), h/(2 max|grad V|), 0.5/g_plus_max)`,
/// capped at `t_end/1000` for degenerate states.
pub fn stable_dt(state: &Field, config: &SimConfig) -> Result<f64, SolverError> {
    let drift_faces = config
        .drift
        .as_ref()
        .map(|d| build_drift_faces(&config.grid, d));
    stable_dt_inner(state, config, drift_faces.as_ref(), 0.0)
}

fn stable_dt_inner(
    state: &Field,
    config: &SimConfig,
    drift: Option<&DriftFaces>,
    t: f64,
) -> Result<f64, SolverError> {
    let grid = &config.grid;
    let h = grid.spacing();
    let d = grid.dim() as f64;
    let mut physical = f64::INFINITY;
    let a_max = max_diffusivity(state, &config.law)
        .map_err(|detail| SolverError::DomainViolation { t, detail })?;
    if a_max > 0.0 {
        physical = physical.min(h * h / (2.0 * d * a_max));
    }
    if let Some(faces) = drift {
        if faces.max_speed > 0.0 {
            physical = physical.min(h / (2.0 * faces.max_speed));
        }
    }
    if let Some(reaction) = &config.reaction {
        if reaction.g_plus_max > 0.0 {
            physical = physical.min(0.5 / reaction.g_plus_max);
        }
    }
    let dt = (config.cfl * physical).min(config.dt_max());
    debug_assert!(dt > 0.0);
    Ok(dt)
}

/// Advance one explicit step. The caller is responsible for `dt` being
/// stable (see [`stable_dt`]); the resulting state is validated and
/// non-finite values, saturated singular densities, or support touching
/// the box margin come back as errors. The undershoot clip policy lives
/// in [`solve`], so raw steps may carry rounding-level negatives.
pub fn step(state: &Field, t: f64, dt: f64, config: &SimConfig) -> Result<Field, SolverError> {
    let drift_faces = config
        .drift
        .as_ref()
        .map(|d| build_drift_faces(&config.grid, d));
    let mut out = vec![0.0; state.values().len()];
    let mut flux_buf = vec![0.0; config.grid.n(0).max(config.grid.n(1)) + 1];
    step_into(
        state.values(),
        &mut out,
        t,
        dt,
        config,
        drift_faces.as_ref(),
        &mut flux_buf,
    );
    let next = Field::from_raw(config.grid, out);
    validate_state(&next, t + dt, config)?;
    Ok(next)
}

/// Raw update `out = state + dt * rhs(state)`; no validation.
fn step_into(
    state: &[f64],
    out: &mut [f64],
    t: f64,
    dt: f64,
    config: &SimConfig,
    drift: Option<&DriftFaces>,
    flux: &mut [f64],
) {
    let grid = &config.grid;
    let law = &config.law;
    let h = grid.spacing();
    let (nx, ny) = (grid.n(0), grid.n(1));
    out.copy_from_slice(state);

    // per-axis face sweep: J = dA/dx + n_up dV/dx at each face,
    // cell j gets dt/h (J_right - J_left)
    for axis in 0..grid.dim() {
        let n_axis = grid.n(axis);
        let lines = if axis == 0 { ny } else { nx };
        let periodic = grid.bc() == BoundaryCondition::Periodic;
        let faces_per_line = if periodic { n_axis } else { n_axis + 1 };
        for line in 0..lines {
            let cell_index = |j: usize| -> usize {
                if axis == 0 {
                    grid.index(j, line)
                } else {
                    grid.index(line, j)
                }
            };
            let face_flux = &mut flux[..faces_per_line];
            for (f, slot) in face_flux.iter_mut().enumerate() {
                // face f sits between cells f-1 and f (ghosts outside)
                let left = if periodic {
                    (f + n_axis - 1) % n_axis
                } else {
                    f.wrapping_sub(1)
                };
                let right = f;
                let n_l = if left < n_axis {
                    state[cell_index(left)]
                } else {
                    0.0
                };
                let n_r = if right < n_axis {
                    state[cell_index(right)]
                } else {
                    0.0
                };
                let a_l = if n_l > 0.0 { law.flux_potential(n_l) } else { 0.0 };
                let a_r = if n_r > 0.0 { law.flux_potential(n_r) } else { 0.0 };
                let mut j_face = (a_r - a_l) / h;
                if let Some(faces) = drift {
                    let dv = faces.grad_v[axis][line * faces_per_line + f];
                    // transport velocity is -dV/dx; upwind the carrier
                    let n_up = if dv < 0.0 { n_l } else { n_r };
                    j_face += n_up * dv;
                }
                *slot = j_face;
            }
            for j in 0..n_axis {
                let jl = j;
                let jr = if periodic { (j + 1) % n_axis } else { j + 1 };
                out[cell_index(j)] += dt / h * (face_flux[jr] - face_flux[jl]);
            }
        }
    }

    if let Some(reaction) = &config.reaction {
        let rate = &reaction.rate;
        for (idx, (&s, o)) in state.iter().zip(out.iter_mut()).enumerate() {
            if s != 0.0 {
                let x = grid.cell_center(idx);
                *o += dt * s * rate(t, &x);
            }
        }
    }
}

fn validate_state(state: &Field, t: f64, config: &SimConfig) -> Result<(), SolverError> {
    if !state.is_finite() {
        return Err(SolverError::NonFiniteState { t });
    }
    if let LawKind::Singular { .. } = config.law.kind {
        let max = state.max();
        if max >= 1.0 - SINGULAR_MARGIN {
            return Err(SolverError::DomainViolation {
                t,
                detail: format!("singular-law density reached {max}"),
            });
        }
    }
    if config.grid.bc() == BoundaryCondition::DirichletZero {
        let worst = boundary_margin_max(state);
        if worst > BOUNDARY_SENSOR_TOL {
            return Err(SolverError::BoundaryTouched { t, value: worst });
        }
    }
    Ok(())
}

/// Largest |value| within two cells of a wall.
fn boundary_margin_max(state: &Field) -> f64 {
    let grid = state.grid();
    let v = state.values();
    let (nx, ny) = (grid.n(0), grid.n(1));
    let mut worst = 0.0f64;
    for iy in 0..ny {
        for ix in 0..nx {
            let near_x = ix < 2 || ix >= nx - 2;
            let near_y = grid.dim() == 2 && (iy < 2 || iy >= ny - 2);
            if near_x || near_y {
                worst = worst.max(v[grid.index(ix, iy)].abs());
            }
        }
    }
    worst
}

/// Clip rounding-level undershoots; abort on anything larger.
fn enforce_nonnegative(state: &mut Field, t: f64) -> Result<(), SolverError> {
    for v in state.values_mut() {
        if *v < 0.0 {
            if *v >= -UNDERSHOOT_CLIP {
                *v = 0.0;
            } else {
                return Err(SolverError::DomainViolation {
                    t,
                    detail: format!("negative undershoot {v:e} exceeds the clip threshold"),
                });
            }
        }
    }
    Ok(())
}

fn pressure_field(law: &PressureLaw, density: &Field) -> Field {
    density.map(|n| law.pressure(n))
}

fn record_diagnostics(state: &Field, law: &PressureLaw, t: f64, dt: f64) -> StepDiagnostics {
    let max = state.max();
    StepDiagnostics {
        t,
        dt,
        mass: mass(state),
        min: state.min(),
        max,
        // pressure laws are monotone, so the max sits at the max density
        max_pressure: if max > 0.0 { law.pressure(max) } else { 0.0 },
        bv: bv_seminorm(state),
    }
}

/// March `[0, t_end]` with adaptive stable steps, landing exactly on
/// every snapshot time.
pub fn solve(config: &SimConfig) -> Result<Trajectory, SolverError> {
    config.validate()?;
    let grid = config.grid;
    let mut state = config.init.build(grid)?;
    enforce_nonnegative(&mut state, 0.0)?;
    validate_state(&state, 0.0, config)?;

    let drift_faces = config.drift.as_ref().map(|d| build_drift_faces(&grid, d));
    let mut flux_buf = vec![0.0; grid.n(0).max(grid.n(1)) + 1];

    let mut snapshots = Vec::with_capacity(config.snapshot_times.len());
    let mut diagnostics = Vec::new();
    diagnostics.push(record_diagnostics(&state, &config.law, 0.0, 0.0));

    let time_tol = 1e-12 * config.t_end.max(1.0);
    let mut snap_iter = config.snapshot_times.iter().copied().peekable();
    if let Some(&t0) = snap_iter.peek() {
        if t0 <= time_tol {
            snapshots.push(Snapshot {
                t: t0,
                density: state.clone(),
                pressure: pressure_field(&config.law, &state),
            });
            snap_iter.next();
        }
    }

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut next_values = vec![0.0; grid.len()];
    while t < config.t_end - time_tol {
        if steps >= config.max_steps {
            return Err(SolverError::TimeoutExceeded { steps, t });
        }
        let mut dt = stable_dt_inner(&state, config, drift_faces.as_ref(), t)?;
        let mut landing = config.t_end;
        if let Some(&ts) = snap_iter.peek() {
            landing = landing.min(ts);
        }
        if t + dt > landing {
            dt = landing - t;
        }
        step_into(
            state.values(),
            &mut next_values,
            t,
            dt,
            config,
            drift_faces.as_ref(),
            &mut flux_buf,
        );
        state.swap_values(&mut next_values);
        t += dt;
        enforce_nonnegative(&mut state, t)?;
        validate_state(&state, t, config)?;
        steps += 1;
        diagnostics.push(record_diagnostics(&state, &config.law, t, dt));
        if let Some(&ts) = snap_iter.peek() {
            if (t - ts).abs() <= time_tol {
                t = ts;
                snapshots.push(Snapshot {
                    t,
                    density: state.clone(),
                    pressure: pressure_field(&config.law, &state),
                });
                snap_iter.next();
            }
        }
    }
    // t_end == 0: the loop never runs, record the trailing snapshot here
    if let Some(&ts) = snap_iter.peek() {
        if (ts - t).abs() <= time_tol {
            snapshots.push(Snapshot {
                t: ts,
                density: state.clone(),
                pressure: pressure_field(&config.law, &state),
            });
        }
    }
    Ok(Trajectory {
        snapshots,
        diagnostics,
    })
}
