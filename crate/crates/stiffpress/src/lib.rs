//! Numerical laboratory for stiff-pressure diffusion-advection
//! equations.
//!
//! The equation under study is
//! `d/dt n = div(n grad p + n grad V) + n g` with a density-dependent
//! pressure, either the power law `p = gamma/(gamma-1) n^(gamma-1)` or
//! the singular law `p = eps n/(1-n)`. As the law stiffens
//! (`gamma -> infinity` or `eps -> 0`) solutions approach an
//! incompressible free-boundary regime; this crate provides
//!
//! - an explicit positivity-preserving finite-volume solver for finite
//!   stiffness ([`solver`]),
//! - exact and surrogate limit profiles ([`limits`]),
//! - the norms and functionals the convergence statements are phrased
//!   in: spectral negative-Sobolev norms, Lebesgue norms, discrete
//!   total variation, 1D quantile Wasserstein distance, limit-relation
//!   and complementarity residuals, 2D moment/entropy diagnostics
//!   ([`metrics`]),
//! - a sweep harness that fits log-log convergence rates and renders
//!   the stiff-limit statements as pass/fail verdicts ([`harness`]),
//! - a seeded property suite ([`validate`]) and binary/CSV dumps
//!   ([`io`]).

pub mod calculus;
pub mod grid;
pub mod harness;
pub mod io;
pub mod limits;
pub mod metrics;
pub mod pressure;
pub mod solver;
mod spectral;
pub mod validate;

pub use grid::{BoundaryCondition, Field, Grid, GridError};
pub use pressure::{c_gamma, LawKind, PressureLaw};
pub use solver::{
    solve, stable_dt, step, DriftSpec, InitialData, ReactionSpec, SimConfig, SolverError,
    Trajectory,
};
