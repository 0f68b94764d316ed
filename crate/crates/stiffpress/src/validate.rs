//! Seeded property suite covering the discrete-calculus identities,
//! pressure-law inequalities, solver conservation laws, and metric
//! properties. The CLI `validate` command runs this and reports one
//! line per property; a mutant hook deliberately corrupts one check so
//! the harness around it can prove the suite has teeth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{divergence, gradient, inner, laplacian, mass};
use crate::grid::{BoundaryCondition, Field, Grid};
use crate::harness::sandwich_suite;
use crate::metrics::{bv_seminorm, hminus1_norm, interpolation_ratio, w2_distance_1d};
use crate::pressure::PressureLaw;
use crate::solver::{solve, InitialData, SimConfig};

/// Deliberate corruption for self-tests of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutant {
    /// Flip the sign convention in the integration-by-parts check.
    FlipIbpSign,
}

impl Mutant {
    pub fn parse(name: &str) -> Option<Mutant> {
        match name {
            "flip_ibp_sign" => Some(Mutant::FlipIbpSign),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub mutant: Option<String>,
    pub results: Vec<PropertyResult>,
    pub all_pass: bool,
}

impl PropertyReport {
    /// One `name,pass,detail` line per property.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("property,pass,detail\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},\"{}\"\n",
                r.name,
                if r.pass { "pass" } else { "FAIL" },
                r.detail
            ));
        }
        out
    }
}

fn result(name: &str, pass: bool, detail: String) -> PropertyResult {
    PropertyResult {
        name: name.into(),
        pass,
        detail,
    }
}

fn ibp_property(rng: &mut ChaCha8Rng, mutant: Option<Mutant>) -> PropertyResult {
    let mut worst: f64 = 0.0;
    for dim in [1usize, 2] {
        let grid = if dim == 1 {
            Grid::new_1d(0.0, 1.0, 64, BoundaryCondition::Periodic).unwrap()
        } else {
            Grid::new_2d([0.0, 0.0], [1.0, 1.0], [24, 24], BoundaryCondition::Periodic).unwrap()
        };
        for _ in 0..10 {
            let f = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
            let comps: Vec<Field> = (0..dim)
                .map(|_| Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0)))
                .collect();
            let lhs = inner(&f, &divergence(&comps));
            let grad = gradient(&f);
            let mut rhs: f64 = grad.iter().zip(&comps).map(|(gf, c)| inner(gf, c)).sum();
            if mutant == Some(Mutant::FlipIbpSign) {
                rhs = -rhs;
            }
            let scale = lhs.abs().max(rhs.abs()).max(1e-30);
            worst = worst.max((lhs + rhs).abs() / scale);
        }
    }
    result(
        "core_integration_by_parts",
        worst <= 1e-12,
        format!("worst relative defect {worst:.3e} (tol 1e-12)"),
    )
}

fn laplacian_eigenvalue_property() -> PropertyResult {
    let n = 128;
    let grid = Grid::new_1d(0.0, 1.0, n, BoundaryCondition::Periodic).unwrap();
    let h = grid.spacing();
    let f = Field::from_fn(grid, |x| (2.0 * std::f64::consts::PI * x[0]).sin());
    let lam = -(2.0 / (h * h)) * (1.0 - (2.0 * std::f64::consts::PI * h).cos());
    let lap = laplacian(&f);
    let worst = lap
        .values()
        .iter()
        .zip(f.values())
        .map(|(lv, fv)| (lv - lam * fv).abs())
        .fold(0.0f64, f64::max)
        / lam.abs();
    result(
        "core_laplacian_eigenvalue",
        worst <= 1e-12,
        format!("worst relative defect {worst:.3e} against the exact symbol"),
    )
}

fn linearity_property(rng: &mut ChaCha8Rng) -> PropertyResult {
    let grid = Grid::new_1d(0.0, 1.0, 96, BoundaryCondition::Periodic).unwrap();
    let f = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
    let g = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
    let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let lhs = laplacian(&f.linear_combination(a, &g, b));
    let rhs = laplacian(&f).linear_combination(a, &laplacian(&g), b);
    let scale = 1.0
        + rhs
            .values()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
        / scale;
    result(
        "core_linearity",
        worst <= 1e-12,
        format!("worst relative defect {worst:.3e}"),
    )
}

fn pressure_monotonicity_property() -> PropertyResult {
    let laws = [
        PressureLaw::power(1.5, 2.0),
        PressureLaw::power(50.0, 2.0),
        PressureLaw::singular(0.02, 2.0),
    ];
    let mut ok = true;
    for law in &laws {
        let cap = law.density_cap().min(0.999);
        let mut prev = 0.0;
        for i in 1..=400 {
            let n = cap * i as f64 / 400.0;
            let p = law.pressure(n);
            if p <= prev && i > 1 {
                ok = false;
            }
            prev = p;
        }
    }
    result(
        "pressure_monotonicity",
        ok,
        "pressure strictly increasing on dense samples for both laws".into(),
    )
}

fn stiffness_inequality_property(rng: &mut ChaCha8Rng) -> PropertyResult {
    // s^gamma (1-s) <= s/gamma on [0, 1]
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let s: f64 = rng.gen_range(0.0..=1.0);
        let gamma: f64 = rng.gen_range(1.0 + 1e-9..1000.0);
        let lhs = if s == 0.0 { 0.0 } else { s.powf(gamma) * (1.0 - s) };
        worst = worst.max(lhs - s / gamma);
    }
    result(
        "pressure_stiffness_inequality",
        worst <= 1e-15,
        format!("max of s^g(1-s) - s/g over 10^4 samples: {worst:.3e}"),
    )
}

fn diffusivity_fd_property(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let law = if rng.gen_bool(0.5) {
            PressureLaw::power(rng.gen_range(1.2..20.0), 2.0)
        } else {
            PressureLaw::singular(rng.gen_range(0.01..1.0), 2.0)
        };
        let n = rng.gen_range(0.05..0.95);
        let d = 1e-6 * n;
        let fd = (law.flux_potential(n + d) - law.flux_potential(n - d)) / (2.0 * d);
        let exact = law.flux_potential_derivative(n);
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-30));
    }
    result(
        "pressure_diffusivity_matches_fd",
        worst <= 1e-6,
        format!("worst relative mismatch {worst:.3e} (tol 1e-6)"),
    )
}

fn mass_conservation_property() -> PropertyResult {
    let grid = Grid::new_1d(0.0, 1.0, 128, BoundaryCondition::Periodic).unwrap();
    let law = PressureLaw::power(4.0, 2.0);
    let mut config = SimConfig::new(
        grid,
        law,
        InitialData::Custom {
            profile: std::sync::Arc::new(|x: &[f64; 2]| {
                0.4 + 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin()
            }),
            mass: None,
        },
        0.05,
    );
    config.snapshot_times = vec![0.0, 0.05];
    match solve(&config) {
        Ok(traj) => {
            let m0 = traj.diagnostics[0].mass;
            let worst_step = traj
                .diagnostics
                .windows(2)
                .map(|w| (w[1].mass - w[0].mass).abs())
                .fold(0.0f64, f64::max);
            let total = (traj.diagnostics.last().unwrap().mass - m0).abs();
            let pass = worst_step <= 1e-12 * m0 && total <= 1e-10 * m0;
            result(
                "solver_mass_conservation",
                pass,
                format!("per-step drift {worst_step:.3e}, run drift {total:.3e}"),
            )
        }
        Err(e) => result("solver_mass_conservation", false, e.to_string()),
    }
}

fn maximum_principle_property() -> PropertyResult {
    let grid = Grid::new_1d(-1.5, 1.5, 256, BoundaryCondition::DirichletZero).unwrap();
    let law = PressureLaw::power(7.0, 2.0);
    let mut config = SimConfig::new(
        grid,
        law,
        InitialData::Barenblatt {
            gamma: 7.0,
            mass: 1.0,
            time_offset: 1.0,
            center: [0.0, 0.0],
        },
        0.3,
    );
    config.snapshot_times = vec![0.0, 0.3];
    match solve(&config) {
        Ok(traj) => {
            let p0 = traj.diagnostics[0].max_pressure;
            let worst = traj
                .diagnostics
                .iter()
                .map(|d| d.max_pressure)
                .fold(0.0f64, f64::max);
            let pass = worst <= p0 + 1e-10;
            result(
                "solver_maximum_principle",
                pass,
                format!("initial max pressure {p0:.6e}, observed max {worst:.6e}"),
            )
        }
        Err(e) => result("solver_maximum_principle", false, e.to_string()),
    }
}

fn singular_cap_property() -> PropertyResult {
    let grid = Grid::new_1d(-1.5, 1.5, 256, BoundaryCondition::DirichletZero).unwrap();
    let law = PressureLaw::singular(0.05, 2.0);
    let mut config = SimConfig::new(
        grid,
        law,
        InitialData::SmoothBump {
            mass: 1.0,
            radius: 1.0,
            center: [0.0, 0.0],
        },
        0.5,
    );
    config.snapshot_times = vec![0.0, 0.5];
    match solve(&config) {
        Ok(traj) => {
            let worst = traj.diagnostics.iter().map(|d| d.max).fold(0.0f64, f64::max);
            result(
                "solver_singular_density_cap",
                worst < 1.0,
                format!("max density over the run {worst:.6}"),
            )
        }
        Err(e) => result("solver_singular_density_cap", false, e.to_string()),
    }
}

fn hminus1_norm_properties(rng: &mut ChaCha8Rng) -> PropertyResult {
    let grid = Grid::new_1d(0.0, 1.0, 128, BoundaryCondition::Periodic).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for _ in 0..20 {
        let f0 = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
        let f = f0.sub(&Field::constant(grid, f0.mean()));
        let g0 = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
        let g = g0.sub(&Field::constant(grid, g0.mean()));
        let a = rng.gen_range(0.1..5.0);
        let hf = hminus1_norm(&f).unwrap();
        let scaled = hminus1_norm(&f.scale(a)).unwrap();
        if (scaled - a * hf).abs() > 1e-12 * scaled.max(1.0) {
            ok = false;
            detail = format!("homogeneity broke: {scaled} vs {}", a * hf);
        }
        let tri = hminus1_norm(&f.linear_combination(1.0, &g, 1.0)).unwrap();
        if tri > hf + hminus1_norm(&g).unwrap() + 1e-12 {
            ok = false;
            detail = "triangle inequality broke".into();
        }
    }
    if ok {
        detail = "homogeneity and triangle inequality on 20 random pairs".into();
    }
    result("metrics_hminus1_is_a_norm", ok, detail)
}

fn w2_translation_property() -> PropertyResult {
    let grid = Grid::new_1d(-1.5, 1.5, 300, BoundaryCondition::DirichletZero).unwrap();
    let f = Field::from_fn(grid, |x| if x[0].abs() < 0.4 { 0.9 } else { 0.0 });
    let delta = 12.0 * grid.spacing();
    let g = Field::from_fn(grid, |x| {
        if (x[0] - delta).abs() < 0.4 {
            0.9
        } else {
            0.0
        }
    });
    match w2_distance_1d(&f, &g) {
        Ok(d) => {
            let expected = delta * mass(&f).sqrt();
            let rel = (d - expected).abs() / expected;
            result(
                "metrics_w2_translation",
                rel <= 1e-3,
                format!("translation by {delta:.4}: W2 {d:.6} vs {expected:.6}"),
            )
        }
        Err(e) => result("metrics_w2_translation", false, e.to_string()),
    }
}

fn bv_indicator_property() -> PropertyResult {
    let grid = Grid::new_1d(-1.5, 1.5, 512, BoundaryCondition::DirichletZero).unwrap();
    let f = crate::limits::mesa_indicator(grid, 1.0, [0.0, 0.0]).unwrap();
    let tv = bv_seminorm(&f);
    result(
        "metrics_bv_of_indicator",
        (tv - 2.0).abs() <= 1e-12,
        format!("TV of the unit indicator: {tv}"),
    )
}

fn sandwich_property(seed: u64) -> PropertyResult {
    match sandwich_suite(seed, 20) {
        Ok(rep) => result(
            "metrics_sandwich_bounds",
            rep.all_pass,
            format!(
                "{} pairs, w2/hm1 in [{:.3}, {:.3}]",
                rep.pairs, rep.min_ratio, rep.max_ratio
            ),
        ),
        Err(e) => result("metrics_sandwich_bounds", false, e.to_string()),
    }
}

/// A resolution-independent nonnegative test function: an indicator or
/// a Gaussian mixture, drawn once and sampled on every grid.
enum RatioTestFn {
    Indicator { a: f64, b: f64, height: f64 },
    Mixture(Vec<(f64, f64, f64)>),
}

impl RatioTestFn {
    fn draw(rng: &mut ChaCha8Rng, k: usize) -> Self {
        if k.is_multiple_of(3) {
            let a = rng.gen_range(-1.2..0.2);
            RatioTestFn::Indicator {
                a,
                b: a + rng.gen_range(0.2..1.2),
                height: rng.gen_range(0.2..2.0),
            }
        } else {
            RatioTestFn::Mixture(
                (0..5)
                    .map(|_| {
                        (
                            rng.gen_range(0.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(0.3..3.0),
                        )
                    })
                    .collect(),
            )
        }
    }

    fn sample(&self, grid: Grid) -> Field {
        match self {
            RatioTestFn::Indicator { a, b, height } => Field::from_fn(grid, |x| {
                if (*a..*b).contains(&x[0]) {
                    *height
                } else {
                    0.0
                }
            }),
            RatioTestFn::Mixture(modes) => Field::from_fn(grid, |x| {
                modes
                    .iter()
                    .map(|(amp, c, w)| {
                        let s = (x[0] - c) * w;
                        amp * (-s * s).exp()
                    })
                    .sum()
            }),
        }
    }
}

fn interpolation_bounded_property(rng: &mut ChaCha8Rng) -> PropertyResult {
    // the same 200 functions at every resolution: refining the grid must
    // not inflate the ratio
    let family: Vec<RatioTestFn> = (0..200).map(|k| RatioTestFn::draw(rng, k)).collect();
    let mut max_at = Vec::new();
    for &n in &[128usize, 256, 512] {
        let grid = Grid::new_1d(-1.5, 1.5, n, BoundaryCondition::DirichletZero).unwrap();
        let mut worst: f64 = 0.0;
        for f in &family {
            if let Ok(r) = interpolation_ratio(&f.sample(grid)) {
                worst = worst.max(r);
            }
        }
        max_at.push(worst);
    }
    let pass = max_at[1] <= 1.1 * max_at[0] && max_at[2] <= 1.1 * max_at[0];
    result(
        "metrics_interpolation_ratio_bounded",
        pass,
        format!(
            "max ratio at N=128/256/512: {:.4}/{:.4}/{:.4}",
            max_at[0], max_at[1], max_at[2]
        ),
    )
}

/// Run every property with a seeded generator.
pub fn run_properties(seed: u64, mutant: Option<Mutant>) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let results = vec![
        ibp_property(&mut rng, mutant),
        laplacian_eigenvalue_property(),
        linearity_property(&mut rng),
        pressure_monotonicity_property(),
        stiffness_inequality_property(&mut rng),
        diffusivity_fd_property(&mut rng),
        mass_conservation_property(),
        maximum_principle_property(),
        singular_cap_property(),
        hminus1_norm_properties(&mut rng),
        w2_translation_property(),
        bv_indicator_property(),
        sandwich_property(seed),
        interpolation_bounded_property(&mut rng),
    ];
    let all_pass = results.iter().all(|r| r.pass);
    PropertyReport {
        seed,
        mutant: mutant.map(|m| format!("{m:?}")),
        results,
        all_pass,
    }
}
