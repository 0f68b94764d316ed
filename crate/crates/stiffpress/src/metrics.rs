//! Norms, distances, and inequality checks: the negative Sobolev norm
//! via a lifted Poisson solve, Lebesgue norms, discrete total
//! variation, the 1D quantile Wasserstein distance, the W2 vs H^-1
//! sandwich, the BV/H^-1 interpolation ratio, limit-relation and
//! complementarity residuals, and the 2D moment/entropy/log-HLS
//! diagnostics.

use thiserror::Error;

use crate::calculus::{gradient, inner, laplacian, mass};
use crate::grid::{BoundaryCondition, Field};
use crate::spectral::{solve_poisson, Lift};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("periodic H^-1 norm needs mean-zero data (mean = {mean:e}); compare equal-mass fields")]
    NonZeroMean { mean: f64 },
    #[error("Lebesgue exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),
    #[error("operation requires dimension {expected}, grid has {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("masses differ beyond tolerance: {a} vs {b}")]
    MassMismatch { a: f64, b: f64 },
    #[error("densities must be nonnegative (found {0})")]
    NegativeValue(f64),
    #[error("field is zero (or degenerate for this functional)")]
    ZeroField,
    #[error("density below the required lower bound: min {min} < {bound}")]
    BelowLowerBound { min: f64, bound: f64 },
    #[error("density above the saturation level: max {max} > 1")]
    AboveSaturation { max: f64 },
}

/// Result of the spectral Poisson solve `-laplacian(phi) = f`.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub phi: Field,
    pub grad_phi: Vec<Field>,
    /// L2 norm of `laplacian(phi) + f`; tiny for spectral solves.
    pub residual_norm: f64,
}

fn lift_for(bc: BoundaryCondition) -> Lift {
    match bc {
        BoundaryCondition::Periodic => Lift::Periodic,
        BoundaryCondition::DirichletZero => Lift::Dirichlet,
    }
}

fn check_mean_zero(f: &Field) -> Result<(), MetricsError> {
    let mean = f.mean();
    let scale = 1.0 + f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if mean.abs() > 1e-12 * scale {
        return Err(MetricsError::NonZeroMean { mean });
    }
    Ok(())
}

/// Solve `-laplacian(phi) = f` spectrally with the grid's boundary tag.
pub fn poisson_solve(f: &Field) -> Result<PoissonSolution, MetricsError> {
    let grid = *f.grid();
    let lift = lift_for(grid.bc());
    if lift == Lift::Periodic {
        check_mean_zero(f)?;
    }
    let phi_values = solve_poisson(f.values(), grid.n(0), grid.n(1), grid.spacing(), lift);
    let phi = Field::from_raw(grid, phi_values);
    let grad_phi = gradient(&phi);
    let res = laplacian(&phi);
    let residual_norm = f
        .values()
        .iter()
        .zip(res.values())
        .map(|(fv, rv)| (rv + fv) * (rv + fv))
        .sum::<f64>()
        .sqrt()
        * grid.cell_volume().sqrt();
    Ok(PoissonSolution {
        phi,
        grad_phi,
        residual_norm,
    })
}

fn hminus1_with_lift(f: &Field, lift: Lift) -> Result<f64, MetricsError> {
    let grid = *f.grid();
    if lift != Lift::Dirichlet {
        check_mean_zero(f)?;
    }
    let phi = solve_poisson(f.values(), grid.n(0), grid.n(1), grid.spacing(), lift);
    // ||grad phi||_{L2}^2 = h^d sum phi f, exact for the face-difference
    // gradient paired with the compact Laplacian.
    let sq = grid.cell_volume()
        * phi
            .iter()
            .zip(f.values())
            .map(|(p, v)| p * v)
            .sum::<f64>();
    Ok(sq.max(0.0).sqrt())
}

/// Homogeneous negative Sobolev norm `||f||_{H^-1} = ||grad phi||_{L2}`
/// where `-laplacian(phi) = f` with the grid's boundary tag.
///
/// On periodic grids the data must have zero mean (compare fields of
/// equal mass); Dirichlet grids accept anything.
pub fn hminus1_norm(f: &Field) -> Result<f64, MetricsError> {
    hminus1_with_lift(f, lift_for(f.grid().bc()))
}

/// Negative norm under the no-flux (Neumann) lift.
///
/// This is the lift whose potential has zero normal derivative at the
/// walls, which is the one that pairs with in-box transport: the
/// continuity-equation argument behind the W2 sandwich closes without
/// boundary terms. Needs mean-zero data.
pub fn hminus1_norm_noflux(f: &Field) -> Result<f64, MetricsError> {
    hminus1_with_lift(f, Lift::NoFlux)
}

/// `(h^d sum |f|^p)^(1/p)`; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64, MetricsError> {
    if p.is_nan() || p < 1.0 {
        return Err(MetricsError::BadExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let sum: f64 = f.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((f.grid().cell_volume() * sum).powf(1.0 / p))
}

/// Anisotropic discrete total variation: `h^(d-1)` times the sum of
/// absolute jumps across faces (wrap faces included on periodic grids).
pub fn bv_seminorm(f: &Field) -> f64 {
    let grid = *f.grid();
    let v = f.values();
    let (nx, ny) = (grid.n(0), grid.n(1));
    let mut tv = 0.0;
    for iy in 0..ny {
        for ix in 0..nx - 1 {
            tv += (v[grid.index(ix + 1, iy)] - v[grid.index(ix, iy)]).abs();
        }
        if grid.bc() == BoundaryCondition::Periodic {
            tv += (v[grid.index(0, iy)] - v[grid.index(nx - 1, iy)]).abs();
        }
    }
    if grid.dim() == 2 {
        for ix in 0..nx {
            for iy in 0..ny - 1 {
                tv += (v[grid.index(ix, iy + 1)] - v[grid.index(ix, iy)]).abs();
            }
            if grid.bc() == BoundaryCondition::Periodic {
                tv += (v[grid.index(ix, 0)] - v[grid.index(ix, ny - 1)]).abs();
            }
        }
    }
    tv * grid.spacing().powi(grid.dim() as i32 - 1)
}

pub const DEFAULT_W2_NODES: usize = 10_000;

/// A quantile-based 1D Wasserstein-2 distance and its resolution
/// estimate (difference against the half-node-count evaluation).
#[derive(Debug, Clone, Copy)]
pub struct W2Computation {
    pub distance: f64,
    pub nodes: usize,
    pub resolution_error: f64,
}

fn cumulative_masses(f: &Field) -> Vec<f64> {
    let h = f.grid().spacing();
    let mut c = Vec::with_capacity(f.values().len() + 1);
    c.push(0.0);
    let mut acc = 0.0;
    for &v in f.values() {
        acc += v * h;
        c.push(acc);
    }
    c
}

/// Invert a piecewise-linear CDF at sorted targets (two-pointer sweep).
fn quantiles_sorted(cum: &[f64], lo: f64, h: f64, targets: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let n = cum.len() - 1;
    let mut j = 0usize;
    for &q in targets {
        while j + 1 < n && cum[j + 1] < q {
            j += 1;
        }
        let dq = cum[j + 1] - cum[j];
        let x = if dq > 0.0 {
            lo + j as f64 * h + (q - cum[j]) / dq * h
        } else {
            lo + (j as f64 + 1.0) * h
        };
        out.push(x);
    }
}

fn w2_at_nodes(cf: &[f64], cg: &[f64], lo: f64, h: f64, total: f64, nodes: usize) -> f64 {
    let dq = total / nodes as f64;
    let targets: Vec<f64> = (0..nodes).map(|i| (i as f64 + 0.5) * dq).collect();
    let mut xf = Vec::new();
    let mut xg = Vec::new();
    quantiles_sorted(cf, lo, h, &targets, &mut xf);
    quantiles_sorted(cg, lo, h, &targets, &mut xg);
    let sum: f64 = xf.iter().zip(&xg).map(|(a, b)| (a - b) * (a - b)).sum();
    (sum * dq).sqrt()
}

/// 1D Wasserstein-2 distance between equal-mass nonnegative densities,
/// computed by quantile inversion at `nodes` mass levels.
pub fn w2_distance_1d_detailed(
    f: &Field,
    g: &Field,
    nodes: usize,
) -> Result<W2Computation, MetricsError> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(MetricsError::WrongDimension {
            expected: 1,
            got: grid.dim(),
        });
    }
    for field in [f, g] {
        let min = field.min();
        if min < 0.0 {
            return Err(MetricsError::NegativeValue(min));
        }
    }
    let (mf, mg) = (mass(f), mass(g));
    if (mf - mg).abs() > 1e-10 * mf.abs().max(mg.abs()).max(1.0) {
        return Err(MetricsError::MassMismatch { a: mf, b: mg });
    }
    if mf <= 0.0 {
        return Err(MetricsError::ZeroField);
    }
    let cf = cumulative_masses(f);
    let cg = cumulative_masses(g);
    let lo = grid.lo(0);
    let h = grid.spacing();
    let distance = w2_at_nodes(&cf, &cg, lo, h, mf, nodes);
    let coarse = w2_at_nodes(&cf, &cg, lo, h, mf, (nodes / 2).max(1));
    Ok(W2Computation {
        distance,
        nodes,
        resolution_error: 2.0 * (distance - coarse).abs() + 1e-12,
    })
}

pub fn w2_distance_1d(f: &Field, g: &Field) -> Result<f64, MetricsError> {
    Ok(w2_distance_1d_detailed(f, g, DEFAULT_W2_NODES)?.distance)
}

/// Outcome of the two-sided W2 vs H^-1 comparison.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SandwichReport {
    pub w2: f64,
    pub hm1: f64,
    pub tol: f64,
    /// `hm1 <= w2 + tol` (densities bounded by 1).
    pub left_ok: bool,
    /// `w2 <= (2/sqrt(n_lower)) hm1 + tol` (densities above `n_lower`).
    pub right_ok: bool,
}

/// Check both transport/negative-norm bounds for densities with values
/// in `[n_lower, 1]` and equal mass (1D).
///
/// The negative norm is taken under the no-flux lift, the one whose
/// continuity-equation argument stays inside the box.
pub fn sandwich_check(f: &Field, g: &Field, n_lower: f64) -> Result<SandwichReport, MetricsError> {
    assert!(n_lower > 0.0, "n_lower must be positive");
    for field in [f, g] {
        let min = field.min();
        if min < n_lower {
            return Err(MetricsError::BelowLowerBound {
                min,
                bound: n_lower,
            });
        }
        let max = field.max();
        if max > 1.0 + 1e-12 {
            // the saturation cap is what the forward inequality rests on
            return Err(MetricsError::AboveSaturation { max });
        }
    }
    let w2c = w2_distance_1d_detailed(f, g, DEFAULT_W2_NODES)?;
    let hm1 = hminus1_norm_noflux(&f.sub(g))?;
    let tol = 1e-6 + w2c.resolution_error;
    Ok(SandwichReport {
        w2: w2c.distance,
        hm1,
        tol,
        left_ok: hm1 <= w2c.distance + tol,
        right_ok: w2c.distance <= 2.0 / n_lower.sqrt() * hm1 + tol,
    })
}

/// `||f||_{4/3} / (|f|_BV^(1/2) ||f||_{H^-1}^(1/2))`, the quantity the
/// interpolation inequality bounds uniformly.
///
/// On periodic grids the mean is subtracted before the Poisson lift
/// (the norm is only defined on mean-zero data there).
pub fn interpolation_ratio(f: &Field) -> Result<f64, MetricsError> {
    let min = f.min();
    if min < 0.0 {
        return Err(MetricsError::NegativeValue(min));
    }
    let l43 = lp_norm(f, 4.0 / 3.0)?;
    if l43 == 0.0 {
        return Err(MetricsError::ZeroField);
    }
    let bv = bv_seminorm(f);
    let hm1 = match f.grid().bc() {
        BoundaryCondition::DirichletZero => hminus1_norm(f)?,
        BoundaryCondition::Periodic => {
            let centered = f.sub(&Field::constant(*f.grid(), f.mean()));
            hminus1_norm(&centered)?
        }
    };
    if bv == 0.0 || hm1 == 0.0 {
        return Err(MetricsError::ZeroField);
    }
    Ok(l43 / (bv.sqrt() * hm1.sqrt()))
}

/// Signed and absolute versions of `h^d sum p (1 - n)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RelationResidual {
    pub raw: f64,
    pub abs: f64,
}

/// Limit-relation residual `∫ p (1 - n)`; vanishes in the stiff limit.
pub fn relation_residual(n: &Field, p: &Field) -> RelationResidual {
    assert!(n.grid().same_layout(p.grid()));
    let vol = n.grid().cell_volume();
    let mut raw = 0.0;
    let mut abs = 0.0;
    for (nv, pv) in n.values().iter().zip(p.values()) {
        let term = pv * (1.0 - nv);
        raw += term;
        abs += term.abs();
    }
    RelationResidual {
        raw: raw * vol,
        abs: abs * vol,
    }
}

/// Which power of the pressure weights the complementarity residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplementarityVariant {
    /// `p (Delta p + Delta V + g)`, the power-law form.
    Power,
    /// `p^2 (Delta p + Delta V + g)`, the singular-law form.
    Singular,
}

/// Test-function dictionary for weak residuals: smooth compactly
/// supported bumps `exp(1 - 1/(1-s^2))`, tensorized per axis in 2D.
///
/// Placements are fixed fractions of the box so residuals are
/// reproducible. 1D `(center, radius)` fractions:
/// (0.30, 0.15), (0.45, 0.15), (0.55, 0.15), (0.70, 0.15),
/// (0.35, 0.275), (0.50, 0.275), (0.65, 0.275), (0.50, 0.40).
/// 2D `((cx, cy), radius)` fractions:
/// ((0.35, 0.35), 0.15), ((0.65, 0.35), 0.15), ((0.35, 0.65), 0.15),
/// ((0.65, 0.65), 0.15), ((0.50, 0.50), 0.20), ((0.40, 0.50), 0.30),
/// ((0.60, 0.50), 0.30), ((0.50, 0.50), 0.40).
pub const TEST_DICTIONARY_1D: [(f64, f64); 8] = [
    (0.30, 0.15),
    (0.45, 0.15),
    (0.55, 0.15),
    (0.70, 0.15),
    (0.35, 0.275),
    (0.50, 0.275),
    (0.65, 0.275),
    (0.50, 0.40),
];

pub const TEST_DICTIONARY_2D: [((f64, f64), f64); 8] = [
    ((0.35, 0.35), 0.15),
    ((0.65, 0.35), 0.15),
    ((0.35, 0.65), 0.15),
    ((0.65, 0.65), 0.15),
    ((0.50, 0.50), 0.20),
    ((0.40, 0.50), 0.30),
    ((0.60, 0.50), 0.30),
    ((0.50, 0.50), 0.40),
];

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// The dictionary evaluated on a grid.
pub fn test_functions(grid: &crate::grid::Grid) -> Vec<Field> {
    let spans: Vec<f64> = (0..grid.dim()).map(|a| grid.hi(a) - grid.lo(a)).collect();
    if grid.dim() == 1 {
        TEST_DICTIONARY_1D
            .iter()
            .map(|&(c, r)| {
                let center = grid.lo(0) + c * spans[0];
                let radius = r * spans[0];
                Field::from_fn(*grid, |x| bump((x[0] - center) / radius))
            })
            .collect()
    } else {
        TEST_DICTIONARY_2D
            .iter()
            .map(|&((cx, cy), r)| {
                let center = [grid.lo(0) + cx * spans[0], grid.lo(1) + cy * spans[1]];
                let radius = [r * spans[0], r * spans[1]];
                Field::from_fn(*grid, |x| {
                    bump((x[0] - center[0]) / radius[0]) * bump((x[1] - center[1]) / radius[1])
                })
            })
            .collect()
    }
}

/// Weak complementarity residual, maximized over the test dictionary.
///
/// For each test function `psi` this evaluates
/// `|h^d sum [-grad(psi p^k) . grad(p) + psi p^k (Delta V + g)]|`
/// with the Laplacian of `p` moved onto the test side by discrete
/// integration by parts; `k` is 1 (power) or 2 (singular).
pub fn complementarity_residual(
    p: &Field,
    drift_potential: Option<&Field>,
    reaction: Option<&Field>,
    variant: ComplementarityVariant,
) -> f64 {
    let grid = *p.grid();
    let weight = match variant {
        ComplementarityVariant::Power => p.clone(),
        ComplementarityVariant::Singular => p.map(|v| v * v),
    };
    let grad_p = gradient(p);
    let lap_v = drift_potential.map(laplacian);
    let mut worst = 0.0f64;
    for psi in test_functions(&grid) {
        let w = Field::from_raw(
            grid,
            psi.values()
                .iter()
                .zip(weight.values())
                .map(|(a, b)| a * b)
                .collect(),
        );
        let grad_w = gradient(&w);
        let mut total = -grad_w
            .iter()
            .zip(&grad_p)
            .map(|(gw, gp)| inner(gw, gp))
            .sum::<f64>();
        if let Some(lv) = &lap_v {
            total += inner(&w, lv);
        }
        if let Some(g) = reaction {
            total += inner(&w, g);
        }
        worst = worst.max(total.abs());
    }
    worst
}

/// Second moment, entropy, and the log-HLS functional of a 2D density.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Diagnostics2d {
    pub mass: f64,
    pub second_moment: f64,
    pub entropy: f64,
    /// `entropy + (2/M) ∬ f(x) f(y) ln|x-y|`, pairwise sum over
    /// distinct cells.
    pub log_hls_lhs: f64,
    /// `-C(M)` with `C(M) = M (1 + ln pi - ln M)`.
    pub log_hls_bound: f64,
    pub satisfies_log_hls: bool,
}

/// Compute the 2D diagnostics. The pairwise interaction sum is direct
/// (O(cells^2) over occupied cells), intended for small grids.
pub fn diagnostics_2d(f: &Field) -> Result<Diagnostics2d, MetricsError> {
    let grid = *f.grid();
    if grid.dim() != 2 {
        return Err(MetricsError::WrongDimension {
            expected: 2,
            got: grid.dim(),
        });
    }
    let min = f.min();
    if min < 0.0 {
        return Err(MetricsError::NegativeValue(min));
    }
    let m = mass(f);
    if m <= 0.0 {
        return Err(MetricsError::ZeroField);
    }
    let h2 = grid.cell_volume();
    let mut second_moment = 0.0;
    let mut entropy = 0.0;
    let mut occupied: Vec<([f64; 2], f64)> = Vec::new();
    for (i, &v) in f.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let x = grid.cell_center(i);
        second_moment += (x[0] * x[0] + x[1] * x[1]) * v;
        entropy += v * v.ln();
        occupied.push((x, v));
    }
    second_moment *= h2;
    entropy *= h2;
    let mut interaction = 0.0;
    for i in 0..occupied.len() {
        let (xi, vi) = occupied[i];
        for &(xj, vj) in occupied.iter().skip(i + 1) {
            let dx = xi[0] - xj[0];
            let dy = xi[1] - xj[1];
            interaction += vi * vj * 0.5 * (dx * dx + dy * dy).ln();
        }
    }
    interaction *= 2.0 * h2 * h2; // both orderings of each pair
    let log_hls_lhs = entropy + 2.0 / m * interaction;
    let c_m = m * (1.0 + std::f64::consts::PI.ln() - m.ln());
    let log_hls_bound = -c_m;
    let tol = 1e-9 * (1.0 + c_m.abs());
    Ok(Diagnostics2d {
        mass: m,
        second_moment,
        entropy,
        log_hls_lhs,
        log_hls_bound,
        satisfies_log_hls: log_hls_lhs >= log_hls_bound - tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = std::f64::consts::PI;

    fn periodic(n: usize) -> Grid {
        Grid::new_1d(0.0, 1.0, n, BoundaryCondition::Periodic).unwrap()
    }

    fn dirichlet(n: usize) -> Grid {
        Grid::new_1d(0.0, 1.0, n, BoundaryCondition::DirichletZero).unwrap()
    }

    #[test]
    fn hminus1_of_single_mode_approaches_continuum() {
        // ||sin(2 pi x)||_{H^-1} = 1/(2 pi sqrt(2)) on [0,1)
        let exact = 1.0 / (2.0 * PI * 2.0f64.sqrt());
        for &n in &[64usize, 128, 256] {
            let g = periodic(n);
            let h = g.spacing();
            let f = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin());
            let val = hminus1_norm(&f).unwrap();
            assert!(
                (val - exact).abs() <= 5.0 * h * h,
                "n={n}: {val} vs {exact}"
            );
        }
    }

    #[test]
    fn hminus1_zero_and_homogeneity() {
        let g = periodic(64);
        assert_eq!(hminus1_norm(&Field::zeros(g)).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = Field::from_fn(g, |_| rng.gen_range(-1.0..1.0));
        let f = f.sub(&Field::constant(g, f.mean()));
        let base = hminus1_norm(&f).unwrap();
        let scaled = hminus1_norm(&f.scale(-3.5)).unwrap();
        assert_relative_eq!(scaled, 3.5 * base, max_relative = 1e-13);
    }

    #[test]
    fn hminus1_rejects_nonzero_mean_on_periodic() {
        let g = periodic(32);
        let f = Field::constant(g, 0.3);
        assert!(matches!(
            hminus1_norm(&f),
            Err(MetricsError::NonZeroMean { .. })
        ));
        // Dirichlet accepts anything
        let gd = dirichlet(32);
        assert!(hminus1_norm(&Field::constant(gd, 0.3)).is_ok());
    }

    #[test]
    fn hminus1_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = periodic(64);
        for _ in 0..50 {
            let f = Field::from_fn(g, |_| rng.gen_range(-1.0..1.0));
            let f = f.sub(&Field::constant(g, f.mean()));
            let k = Field::from_fn(g, |_| rng.gen_range(-1.0..1.0));
            let k = k.sub(&Field::constant(g, k.mean()));
            let sum = f.linear_combination(1.0, &k, 1.0);
            let lhs = hminus1_norm(&sum).unwrap();
            let rhs = hminus1_norm(&f).unwrap() + hminus1_norm(&k).unwrap();
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn poisson_residual_is_spectrally_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for bc in [BoundaryCondition::Periodic, BoundaryCondition::DirichletZero] {
            let g = Grid::new_1d(0.0, 1.0, 96, bc).unwrap();
            let f = Field::from_fn(g, |_| rng.gen_range(-1.0..1.0));
            let f = match bc {
                BoundaryCondition::Periodic => f.sub(&Field::constant(g, f.mean())),
                BoundaryCondition::DirichletZero => f,
            };
            let sol = poisson_solve(&f).unwrap();
            let f_l2 = (f.grid().cell_volume()
                * f.values().iter().map(|v| v * v).sum::<f64>())
            .sqrt();
            assert!(
                sol.residual_norm <= 1e-10 * f_l2,
                "residual {} vs source {}",
                sol.residual_norm,
                f_l2
            );
        }
        // 2D smoke
        let g2 = Grid::new_2d([0.0, 0.0], [1.0, 1.0], [24, 24], BoundaryCondition::Periodic)
            .unwrap();
        let f2 = Field::from_fn(g2, |x| (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos());
        let sol2 = poisson_solve(&f2).unwrap();
        assert!(sol2.residual_norm < 1e-10);
    }

    #[test]
    fn poisson_2d_dirichlet_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = Grid::new_2d(
            [-1.0, -1.4],
            [1.0, 1.4],
            [20, 28],
            BoundaryCondition::DirichletZero,
        )
        .unwrap();
        let f = Field::from_fn(g, |_| rng.gen_range(-1.0..1.0));
        let sol = poisson_solve(&f).unwrap();
        let f_l2 =
            (g.cell_volume() * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt();
        assert!(sol.residual_norm <= 1e-10 * f_l2, "{}", sol.residual_norm);
    }

    #[test]
    fn noflux_norm_matches_the_cosine_mode_eigenvalue() {
        // cos(pi k (2i+1)/(2N)) per axis is an exact eigenvector of the
        // mirrored-ghost stencil; the norm of a product mode is
        // ||f||_2 / sqrt(mu_kx + mu_ky).
        let (nx, ny) = (24usize, 16usize);
        let g = Grid::new_2d(
            [0.0, 0.0],
            [1.5, 1.0],
            [nx, ny],
            BoundaryCondition::DirichletZero,
        )
        .unwrap();
        let h = g.spacing();
        let (kx, ky) = (3usize, 2usize);
        let f = Field::from_fn(g, |x| {
            let ix = ((x[0] - g.lo(0)) / h - 0.5).round();
            let iy = ((x[1] - g.lo(1)) / h - 0.5).round();
            (PI * kx as f64 * (2.0 * ix + 1.0) / (2.0 * nx as f64)).cos()
                * (PI * ky as f64 * (2.0 * iy + 1.0) / (2.0 * ny as f64)).cos()
        });
        let mu = (2.0 / (h * h))
            * ((1.0 - (PI * kx as f64 / nx as f64).cos())
                + (1.0 - (PI * ky as f64 / ny as f64).cos()));
        let l2 = (g.cell_volume() * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt();
        let expected = l2 / mu.sqrt();
        let got = hminus1_norm_noflux(&f).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-10);
    }

    #[test]
    fn sandwich_rejects_saturated_density() {
        let g = dirichlet(64);
        let f = Field::constant(g, 1.5);
        assert!(matches!(
            sandwich_check(&f, &f, 0.5),
            Err(MetricsError::AboveSaturation { .. })
        ));
    }

    #[test]
    fn lp_norm_basics() {
        let g = periodic(64);
        // indicator of measure m has Lp norm m^(1/p)
        let f = Field::from_fn(g, |x| if x[0] < 0.25 { 1.0 } else { 0.0 });
        for p in [1.0, 4.0 / 3.0, 2.0, 7.0] {
            assert_relative_eq!(
                lp_norm(&f, p).unwrap(),
                0.25f64.powf(1.0 / p),
                max_relative = 1e-12
            );
        }
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.0);
        assert!(lp_norm(&f, 0.5).is_err());
        // triangle inequality on random pairs
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = Field::from_fn(g, |_| rng.gen_range(-1.0..1.0));
            let b = Field::from_fn(g, |_| rng.gen_range(-1.0..1.0));
            let p = rng.gen_range(1.0..5.0);
            let lhs = lp_norm(&a.linear_combination(1.0, &b, 1.0), p).unwrap();
            let rhs = lp_norm(&a, p).unwrap() + lp_norm(&b, p).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn l43_of_source_profile_matches_quadrature() {
        // independent Simpson quadrature of the closed-form profile
        let prof = crate::limits::BarenblattProfile::new(2.0, 1.0, 1).unwrap();
        let r = prof.support_radius(1.0);
        let grid = Grid::new_1d(-1.2 * r, 1.2 * r, 2048, BoundaryCondition::DirichletZero).unwrap();
        let f = prof.field(grid, 1.0, [0.0, 0.0]);
        let computed = lp_norm(&f, 4.0 / 3.0).unwrap();
        // int U^{4/3} = 2 sqrt(C/k) C^{4/3} int_0^1 (1-s^2)^{4/3} ds,
        // with the edge flattened by s = sin(theta)
        let m = 4096;
        let h = 0.5 * PI / m as f64;
        let integrand = |th: f64| th.cos().powf(8.0 / 3.0 + 1.0);
        let mut acc = integrand(0.0) + integrand(0.5 * PI);
        for j in 1..m {
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * integrand(j as f64 * h);
        }
        let shape = acc * h / 3.0;
        let exact = (2.0 * (prof.c / prof.k).sqrt() * prof.c.powf(4.0 / 3.0) * shape).powf(0.75);
        assert_abs_diff_eq!(computed, exact, epsilon = 1e-3);
    }

    #[test]
    fn bv_seminorm_examples() {
        let g = dirichlet(128);
        let f = Field::from_fn(g, |x| {
            if (0.3..0.7).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        });
        assert_abs_diff_eq!(bv_seminorm(&f), 2.0, epsilon = 1e-12);
        assert_eq!(bv_seminorm(&Field::constant(g, 4.2)), 0.0);
        let gp = periodic(256);
        let s = Field::from_fn(gp, |x| (2.0 * PI * x[0]).sin());
        let h = gp.spacing();
        assert!(
            (bv_seminorm(&s) - 4.0).abs() <= 40.0 * h * h,
            "{}",
            bv_seminorm(&s)
        );
    }

    #[test]
    fn w2_translation_and_identity() {
        let g = Grid::new_1d(-1.5, 1.5, 300, BoundaryCondition::DirichletZero).unwrap();
        let f = Field::from_fn(g, |x| if x[0].abs() < 0.3 { 1.0 } else { 0.0 });
        assert_eq!(w2_distance_1d(&f, &f).unwrap(), 0.0);
        let delta = 10.0 * g.spacing(); // exact cell multiple
        let t = Field::from_fn(g, |x| if (x[0] - delta).abs() < 0.3 { 1.0 } else { 0.0 });
        let d = w2_distance_1d(&f, &t).unwrap();
        assert_relative_eq!(d, delta * mass(&f).sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn w2_uniform_stretch_closed_form() {
        // uniform on [0,1] vs uniform on [0,2], both mass 1:
        // T(q) maps q to 2q, W2^2 = int_0^1 q^2 dq = 1/3.
        let g = Grid::new_1d(0.0, 2.0, 1000, BoundaryCondition::DirichletZero).unwrap();
        let f = Field::from_fn(g, |x| if x[0] < 1.0 { 1.0 } else { 0.0 });
        let gfield = Field::constant(g, 0.5);
        let d = w2_distance_1d(&f, &gfield).unwrap();
        assert_relative_eq!(d, (1.0f64 / 3.0).sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn w2_errors() {
        let g = dirichlet(32);
        let f = Field::constant(g, 1.0);
        let g2 = Field::constant(g, 0.5);
        assert!(matches!(
            w2_distance_1d(&f, &g2),
            Err(MetricsError::MassMismatch { .. })
        ));
        let neg = Field::from_fn(g, |x| x[0] - 0.5);
        assert!(matches!(
            w2_distance_1d(&neg, &neg),
            Err(MetricsError::NegativeValue(_))
        ));
    }

    #[test]
    fn w2_matches_exact_piecewise_integration() {
        // Independent oracle: quantile functions of piecewise-constant
        // densities are piecewise linear, so (F^-1 - G^-1)^2 integrates
        // exactly with Simpson on merged breakpoints.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = dirichlet(64);
        let h = g.spacing();
        for _ in 0..10 {
            let f = Field::from_fn(g, |_| rng.gen_range(0.5..1.0));
            let gf = Field::from_fn(g, |_| rng.gen_range(0.5..1.0));
            let shift = (mass(&f) - mass(&gf)) / 1.0;
            let gf = Field::from_raw(*gf.grid(), gf.values().iter().map(|v| v + shift).collect());
            let cf = cumulative_masses(&f);
            let cg = cumulative_masses(&gf);
            let total = mass(&f);
            let mut qs: Vec<f64> = cf.iter().chain(cg.iter()).copied().collect();
            qs.retain(|&q| (0.0..=total).contains(&q));
            qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            qs.dedup();
            let mut exact2 = 0.0;
            let mut xs = Vec::new();
            for win in qs.windows(2) {
                let (a, b) = (win[0], win[1]);
                if b - a < 1e-15 {
                    continue;
                }
                let mids = [a, 0.5 * (a + b), b];
                quantiles_sorted(&cf, 0.0, h, &mids, &mut xs);
                let xf = [xs[0], xs[1], xs[2]];
                quantiles_sorted(&cg, 0.0, h, &mids, &mut xs);
                let d2 = [
                    (xf[0] - xs[0]).powi(2),
                    (xf[1] - xs[1]).powi(2),
                    (xf[2] - xs[2]).powi(2),
                ];
                exact2 += (b - a) * (d2[0] + 4.0 * d2[1] + d2[2]) / 6.0;
            }
            let exact = exact2.sqrt();
            let computed = w2_distance_1d(&f, &gf).unwrap();
            assert_abs_diff_eq!(computed, exact, epsilon = 1e-6);
        }
    }

    #[test]
    fn sandwich_trivial_and_perturbation() {
        let g = dirichlet(128);
        let f = Field::constant(g, 0.75);
        let r = sandwich_check(&f, &f, 0.5).unwrap();
        assert!(r.left_ok && r.right_ok);
        assert_eq!(r.w2, 0.0);
        // n = 0.75, n' = 0.75 + 0.1 sin(2 pi x): values within [0.5, 1]
        let p = Field::from_fn(g, |x| 0.75 + 0.1 * (2.0 * PI * x[0]).sin());
        // equalize mass exactly
        let p = p.sub(&Field::constant(g, (mass(&p) - mass(&f)) / 1.0));
        let r = sandwich_check(&f, &p, 0.5).unwrap();
        assert!(r.left_ok && r.right_ok, "{r:?}");
        assert!(r.w2 > 0.0 && r.hm1 > 0.0);
    }

    #[test]
    fn sandwich_rejects_low_density() {
        let g = dirichlet(64);
        let f = Field::constant(g, 0.3);
        assert!(matches!(
            sandwich_check(&f, &f, 0.5),
            Err(MetricsError::BelowLowerBound { .. })
        ));
    }

    #[test]
    fn interpolation_ratio_homogeneous_and_finite() {
        let g = dirichlet(128);
        let f = Field::from_fn(g, |x| {
            if (0.25..0.75).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        });
        let base = interpolation_ratio(&f).unwrap();
        assert!(base.is_finite() && base > 0.0);
        let scaled = interpolation_ratio(&f.scale(7.0)).unwrap();
        assert_relative_eq!(scaled, base, max_relative = 1e-12);
        assert!(matches!(
            interpolation_ratio(&Field::zeros(g)),
            Err(MetricsError::ZeroField)
        ));
    }

    #[test]
    fn relation_residual_cases() {
        let g = dirichlet(64);
        let n = Field::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let zero = Field::zeros(g);
        let r = relation_residual(&n, &zero);
        assert_eq!(r.raw, 0.0);
        assert_eq!(r.abs, 0.0);
        // n = 1 wherever p > 0
        let p = Field::from_fn(g, |x| if x[0] < 0.5 { 2.0 } else { 0.0 });
        let r = relation_residual(&n, &p);
        assert_abs_diff_eq!(r.abs, 0.0, epsilon = 1e-14);
        // singular law identity: p(n) (1-n) = eps n, so residual = eps * mass
        let law = crate::pressure::PressureLaw::singular(0.05, 2.0);
        let dens = Field::from_fn(g, |x| 0.8 * (PI * x[0]).sin().powi(2));
        let pres = dens.map(|v| law.pressure(v));
        let r = relation_residual(&dens, &pres);
        assert_relative_eq!(r.raw, 0.05 * mass(&dens), max_relative = 1e-12);
        let delta = 1.0 - dens.max();
        assert!(r.raw <= 0.05 * mass(&dens) / delta);
    }

    #[test]
    fn complementarity_zero_pressure() {
        let g = dirichlet(64);
        let p = Field::zeros(g);
        assert_eq!(
            complementarity_residual(&p, None, None, ComplementarityVariant::Power),
            0.0
        );
    }

    #[test]
    fn diagnostics_2d_square_moment_and_entropy() {
        // M * uniform on the unit square centered at the origin:
        // second moment = M * (1/6); indicator-valued entropy is 0.
        let g = Grid::new_2d(
            [-0.5, -0.5],
            [0.5, 0.5],
            [64, 64],
            BoundaryCondition::DirichletZero,
        )
        .unwrap();
        let m_target = 0.7;
        let f = Field::constant(g, m_target);
        let d = diagnostics_2d(&f).unwrap();
        assert_relative_eq!(d.second_moment, m_target / 6.0, max_relative = 1e-3);
        let ind = Field::constant(g, 1.0);
        let di = diagnostics_2d(&ind).unwrap();
        assert_abs_diff_eq!(di.entropy, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn diagnostics_2d_log_hls_on_bump() {
        let g = Grid::new_2d(
            [-1.0, -1.0],
            [1.0, 1.0],
            [48, 48],
            BoundaryCondition::DirichletZero,
        )
        .unwrap();
        let raw = Field::from_fn(g, |x| {
            let r2 = (x[0] * x[0] + x[1] * x[1]) / 0.49;
            if r2 < 1.0 {
                (1.0 - 1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        });
        let f = raw.scale(1.0 / mass(&raw)); // unit mass
        let d = diagnostics_2d(&f).unwrap();
        assert!(d.satisfies_log_hls, "{d:?}");
        assert!(d.log_hls_lhs >= -(1.0 + PI.ln()) - 1e-9);
        assert!(diagnostics_2d(&Field::zeros(g)).is_err());
        let g1 = dirichlet(16);
        assert!(matches!(
            diagnostics_2d(&Field::constant(g1, 1.0)),
            Err(MetricsError::WrongDimension { .. })
        ));
    }
}
