//! TOML experiment schema and its mapping onto library types.
//!
//! The file is strict: unknown keys are rejected so typos fail before
//! any compute starts. `--set a.b.c=value` overrides patch the parsed
//! tree ahead of deserialization.

use std::path::Path;

use serde::Deserialize;

use stiffpress::harness::{NormKind, ReferenceSpec, SweepAxis, SweepInit, SweepPlan};
use stiffpress::{
    BoundaryCondition, DriftSpec, Grid, InitialData, PressureLaw, ReactionSpec, SimConfig,
};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub pressure: PressureSection,
    pub init: InitSection,
    #[serde(default)]
    pub drift: Option<DriftSection>,
    #[serde(default)]
    pub reaction: Option<ReactionSection>,
    pub time: TimeSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub metrics: Option<MetricsSection>,
    #[serde(default)]
    pub validate: Option<ValidateSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n_cells: Vec<usize>,
    pub bc: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureSection {
    pub law: String,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub p_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: String,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub time_offset: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub r_inner: Option<f64>,
    #[serde(default)]
    pub r_outer: Option<f64>,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub kind: String,
    #[serde(default)]
    pub strength: Option<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSection {
    pub kind: String,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub g_plus_max: Option<f64>,
    #[serde(default)]
    pub subharmonic: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub snapshots: Option<usize>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub values: Vec<f64>,
    pub reference: String,
    #[serde(default)]
    pub surrogate_parameter: Option<f64>,
    /// "barenblatt_of_gamma" or "fixed" (use the [init] section).
    #[serde(default)]
    pub init: Option<String>,
    pub norms: Vec<String>,
    #[serde(default)]
    pub slope_tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub relation_threshold: Option<f64>,
    #[serde(default)]
    pub complementarity_threshold: Option<f64>,
    #[serde(default)]
    pub check_residuals: Option<bool>,
    /// Mock mode: skip solves, inject `constant * stiffness^exponent`.
    #[serde(default)]
    pub synthetic_constant: Option<f64>,
    #[serde(default)]
    pub synthetic_exponent: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    pub snapshots: String,
    /// "mesa", "none", or a path to a second snapshot file.
    pub reference: String,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub norms: Vec<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mutant: Option<String>,
}

/// Parse `--set a.b.c=value` pairs onto the raw TOML tree.
pub fn apply_overrides(
    tree: &mut toml::Table,
    overrides: &[String],
) -> Result<(), ConfigError> {
    for pair in overrides {
        let Some((path, raw)) = pair.split_once('=') else {
            return err(format!("override '{pair}' is not of the form key=value"));
        };
        let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").unwrap(),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let mut node = &mut *tree;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if i + 1 == parts.len() {
                node.insert(part.to_string(), parsed.clone());
            } else {
                node = node
                    .entry(part.to_string())
                    .or_insert(toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| ConfigError(format!("override path '{path}' crosses a non-table")))?;
            }
        }
    }
    Ok(())
}

/// Load, override, and strictly deserialize a config file. Returns the
/// config plus the canonical merged text (used for the content hash).
pub fn load(path: &Path, overrides: &[String]) -> Result<(ExperimentConfig, String), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut tree: toml::Table =
        toml::from_str(&text).map_err(|e| ConfigError(format!("TOML parse error: {e}")))?;
    apply_overrides(&mut tree, overrides)?;
    let canonical =
        toml::to_string(&tree).map_err(|e| ConfigError(format!("re-serialization failed: {e}")))?;
    let config: ExperimentConfig = toml::Table::try_into(tree)
        .map_err(|e| ConfigError(format!("config schema error: {e}")))?;
    Ok((config, canonical))
}

fn center_from(v: &Option<Vec<f64>>) -> [f64; 2] {
    match v {
        Some(c) => [
            c.first().copied().unwrap_or(0.0),
            c.get(1).copied().unwrap_or(0.0),
        ],
        None => [0.0, 0.0],
    }
}

impl ExperimentConfig {
    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        let g = &self.grid;
        let bc = match g.bc.as_str() {
            "periodic" => BoundaryCondition::Periodic,
            "dirichlet_zero" => BoundaryCondition::DirichletZero,
            other => return err(format!("unknown bc '{other}'")),
        };
        let need = g.dim;
        if g.lo.len() != need || g.hi.len() != need || g.n_cells.len() != need {
            return err("grid lo/hi/n_cells must each have one entry per axis");
        }
        let grid = match g.dim {
            1 => Grid::new_1d(g.lo[0], g.hi[0], g.n_cells[0], bc),
            2 => Grid::new_2d(
                [g.lo[0], g.lo[1]],
                [g.hi[0], g.hi[1]],
                [g.n_cells[0], g.n_cells[1]],
                bc,
            ),
            other => return err(format!("dim must be 1 or 2, got {other}")),
        };
        grid.map_err(|e| ConfigError(e.to_string()))
    }

    pub fn build_law(&self) -> Result<PressureLaw, ConfigError> {
        let p = &self.pressure;
        if p.p_max <= 0.0 || p.p_max.is_nan() {
            return err("pressure.p_max must be positive");
        }
        match p.law.as_str() {
            "power" => {
                let gamma = p.gamma.ok_or(ConfigError("power law needs gamma".into()))?;
                if gamma <= 1.0 {
                    return err(format!("power law needs gamma > 1, got {gamma}"));
                }
                Ok(PressureLaw::power(gamma, p.p_max))
            }
            "singular" => {
                let eps = p
                    .epsilon
                    .ok_or(ConfigError("singular law needs epsilon".into()))?;
                if eps <= 0.0 {
                    return err(format!("singular law needs epsilon > 0, got {eps}"));
                }
                Ok(PressureLaw::singular(eps, p.p_max))
            }
            other => err(format!("unknown pressure law '{other}'")),
        }
    }

    pub fn build_init(&self) -> Result<InitialData, ConfigError> {
        let i = &self.init;
        let center = center_from(&i.center);
        let mass = i.mass.unwrap_or(1.0);
        match i.kind.as_str() {
            "barenblatt" => Ok(InitialData::Barenblatt {
                gamma: i
                    .gamma
                    .or(self.pressure.gamma)
                    .ok_or(ConfigError("barenblatt init needs a gamma".into()))?,
                mass,
                time_offset: i.time_offset.unwrap_or(1.0),
                center,
            }),
            "mesa" => Ok(InitialData::MesaIndicator { mass, center }),
            "bump" => Ok(InitialData::SmoothBump {
                mass,
                radius: i.radius.ok_or(ConfigError("bump init needs radius".into()))?,
                center,
            }),
            "annulus" => Ok(InitialData::Annulus {
                mass,
                r_inner: i
                    .r_inner
                    .ok_or(ConfigError("annulus init needs r_inner".into()))?,
                r_outer: i
                    .r_outer
                    .ok_or(ConfigError("annulus init needs r_outer".into()))?,
                center,
            }),
            "uniform" => Ok(InitialData::Uniform {
                value: i
                    .value
                    .ok_or(ConfigError("uniform init needs value".into()))?,
            }),
            other => err(format!("unknown init kind '{other}'")),
        }
    }

    fn build_drift(&self) -> Result<Option<DriftSpec>, ConfigError> {
        let Some(d) = &self.drift else {
            return Ok(None);
        };
        match d.kind.as_str() {
            "none" => Ok(None),
            "quadratic" => {
                let strength = d
                    .strength
                    .ok_or(ConfigError("quadratic drift needs strength".into()))?;
                let center = center_from(&d.center);
                let mut spec = DriftSpec::quadratic(strength, center);
                if d.lambda.is_some() {
                    spec.lambda = d.lambda;
                }
                Ok(Some(spec))
            }
            other => err(format!("unknown drift kind '{other}'")),
        }
    }

    fn build_reaction(&self) -> Result<Option<ReactionSpec>, ConfigError> {
        let Some(r) = &self.reaction else {
            return Ok(None);
        };
        match r.kind.as_str() {
            "none" => Ok(None),
            "constant" => {
                let rate = r
                    .rate
                    .ok_or(ConfigError("constant reaction needs rate".into()))?;
                let mut spec = ReactionSpec::constant(rate);
                if let Some(gp) = r.g_plus_max {
                    spec.g_plus_max = gp;
                }
                if let Some(s) = r.subharmonic {
                    spec.subharmonic = s;
                }
                Ok(Some(spec))
            }
            other => err(format!("unknown reaction kind '{other}'")),
        }
    }

    pub fn build_sim(&self) -> Result<SimConfig, ConfigError> {
        let grid = self.build_grid()?;
        let law = self.build_law()?;
        let init = self.build_init()?;
        let mut config = SimConfig::new(grid, law, init, self.time.t_end);
        if let Some(cfl) = self.time.cfl {
            config.cfl = cfl;
        }
        if let Some(times) = &self.time.times {
            config.snapshot_times = times.clone();
        } else if let Some(count) = self.time.snapshots {
            config.snapshot_times = stiffpress::solver::uniform_times(self.time.t_end, count);
        }
        if let Some(ms) = self.time.max_steps {
            config.max_steps = ms;
        }
        config.drift = self.build_drift()?;
        config.reaction = self.build_reaction()?;
        config
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(config)
    }

    pub fn build_sweep(&self, seed_override: Option<u64>) -> Result<SweepPlan, ConfigError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or(ConfigError("config has no [sweep] section".into()))?;
        let axis = match s.axis.as_str() {
            "gamma" => SweepAxis::Gamma(s.values.clone()),
            "epsilon" => SweepAxis::Epsilon(s.values.clone()),
            other => return err(format!("unknown sweep axis '{other}'")),
        };
        let reference = match s.reference.as_str() {
            "mesa" => ReferenceSpec::Mesa {
                mass: self.init.mass.unwrap_or(1.0),
                center: center_from(&self.init.center),
            },
            "surrogate" => ReferenceSpec::Surrogate {
                parameter: s.surrogate_parameter.ok_or(ConfigError(
                    "surrogate reference needs sweep.surrogate_parameter".into(),
                ))?,
            },
            other => return err(format!("unknown reference '{other}'")),
        };
        let init = match s.init.as_deref().unwrap_or("fixed") {
            "barenblatt_of_gamma" => SweepInit::BarenblattOfParameter {
                mass: self.init.mass.unwrap_or(1.0),
                time_offset: self.init.time_offset.unwrap_or(1.0),
                center: center_from(&self.init.center),
            },
            "fixed" => SweepInit::Fixed(self.build_init()?),
            other => return err(format!("unknown sweep init policy '{other}'")),
        };
        let norms = s
            .norms
            .iter()
            .map(|n| parse_norm(n))
            .collect::<Result<Vec<_>, _>>()?;
        let base = {
            // base uses the first sweep value's law; overridden per entry
            let grid = self.build_grid()?;
            let first = *s.values.first().ok_or(ConfigError("empty sweep".into()))?;
            let law = match axis {
                SweepAxis::Gamma(_) => PressureLaw::power(first.max(1.5), self.pressure.p_max),
                SweepAxis::Epsilon(_) => PressureLaw::singular(first, self.pressure.p_max),
            };
            let mut config = SimConfig::new(grid, law, self.build_init()?, self.time.t_end);
            if let Some(cfl) = self.time.cfl {
                config.cfl = cfl;
            }
            if let Some(times) = &self.time.times {
                config.snapshot_times = times.clone();
            } else if let Some(count) = self.time.snapshots {
                config.snapshot_times = stiffpress::solver::uniform_times(self.time.t_end, count);
            }
            if let Some(ms) = self.time.max_steps {
                config.max_steps = ms;
            }
            config.drift = self.build_drift()?;
            config.reaction = self.build_reaction()?;
            config
        };
        Ok(SweepPlan {
            base,
            axis,
            reference,
            init,
            norms,
            seed: seed_override.or(s.seed).unwrap_or(42),
            slope_tol: s.slope_tol.unwrap_or(0.15),
        })
    }
}

pub fn parse_norm(name: &str) -> Result<NormKind, ConfigError> {
    match name {
        "hminus1" => Ok(NormKind::HMinus1),
        "l1" => Ok(NormKind::L1),
        "l43" => Ok(NormKind::L43),
        "w2_1d" | "w2" => Ok(NormKind::W2),
        other => {
            if let Some(p) = other.strip_prefix("lp:") {
                let p: f64 = p
                    .parse()
                    .map_err(|_| ConfigError(format!("bad Lp exponent in '{other}'")))?;
                Ok(NormKind::Lp(p))
            } else {
                err(format!("unknown norm '{other}'"))
            }
        }
    }
}

