//! Command implementations. Every command writes its artifacts under
//! the output directory and reports failures through [`CliError`] so
//! exit codes and stderr tags stay uniform.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use stiffpress::harness::{
    appendix_suites, report_from_records, run_sweep, synthetic_records, residual_sweep,
    RateReport, ResidualReport,
};
use stiffpress::io::{read_snapshots, write_diagnostics_csv, write_snapshots};
use stiffpress::limits::mesa_indicator;
use stiffpress::metrics::{hminus1_norm, lp_norm, w2_distance_1d};
use stiffpress::solver::solve;
use stiffpress::validate::{run_properties, Mutant};
use stiffpress::SolverError;

use crate::config::{parse_norm, ConfigError, ExperimentConfig};

/// Failure with the exit code and machine-parsable tag it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub tag: &'static str,
    pub detail: String,
}

impl CliError {
    pub fn config(detail: impl Into<String>) -> Self {
        CliError {
            code: 1,
            tag: "CONFIG_ERROR",
            detail: detail.into(),
        }
    }

    pub fn compute(tag: &'static str, detail: impl Into<String>) -> Self {
        CliError {
            code: 2,
            tag,
            detail: detail.into(),
        }
    }

    pub fn verdict(tag: &'static str, detail: impl Into<String>) -> Self {
        CliError {
            code: 3,
            tag,
            detail: detail.into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match &e {
            SolverError::InvalidConfig { .. } | SolverError::Grid(_) => {
                CliError::config(e.to_string())
            }
            SolverError::DomainViolation { .. } => {
                CliError::compute("DOMAIN_VIOLATION", e.to_string())
            }
            SolverError::NonFiniteState { .. } => {
                CliError::compute("NON_FINITE_STATE", e.to_string())
            }
            SolverError::BoundaryTouched { .. } => {
                CliError::compute("BOUNDARY_TOUCHED", e.to_string())
            }
            SolverError::TimeoutExceeded { .. } => {
                CliError::compute("TIMEOUT_EXCEEDED", e.to_string())
            }
        }
    }
}

impl From<stiffpress::harness::HarnessError> for CliError {
    fn from(e: stiffpress::harness::HarnessError) -> Self {
        use stiffpress::harness::HarnessError as H;
        match e {
            H::PlanInvalid(_) => CliError::config(e.to_string()),
            H::Solver(s) => s.into(),
            other => CliError::compute("COMPUTE_ERROR", other.to_string()),
        }
    }
}

impl From<stiffpress::io::IoError> for CliError {
    fn from(e: stiffpress::io::IoError) -> Self {
        CliError::compute("IO_ERROR", e.to_string())
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::config(format!("cannot create output dir: {e}")))
}

fn write_text(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::compute("IO_ERROR", format!("{}: {e}", path.display())))
}

pub fn content_hash(canonical: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    format!("{:x}", hasher.finalize())
}

pub fn cmd_run(
    config: &ExperimentConfig,
    canonical: &str,
    out: &Path,
) -> Result<(), CliError> {
    let sim = config.build_sim()?;
    prepare_out(out)?;
    let trajectory = solve(&sim)?;
    let snaps: Vec<(f64, &stiffpress::Field)> = trajectory
        .snapshots
        .iter()
        .map(|s| (s.t, &s.density))
        .collect();
    write_snapshots(&out.join("snapshots.stpr"), &sim.grid, &snaps)?;
    write_diagnostics_csv(&out.join("diagnostics.csv"), &trajectory.diagnostics)?;
    write_text(&out.join("config_echo.toml"), canonical)?;
    println!(
        "run: {} snapshots, {} steps, observed max pressure {:.6e}, hash {}",
        trajectory.snapshots.len(),
        trajectory.diagnostics.len().saturating_sub(1),
        trajectory.observed_max_pressure(),
        content_hash(canonical)
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepArtifact<'a> {
    config_hash: String,
    config_echo: &'a str,
    rates: RateReport,
    residuals: Option<ResidualReport>,
    residual_trend_ok: Option<bool>,
    verdicts_pass: bool,
}

pub fn cmd_sweep(
    config: &ExperimentConfig,
    canonical: &str,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let plan = config.build_sweep(seed)?;
    prepare_out(out)?;
    let sweep_section = config.sweep.as_ref().expect("checked in build_sweep");

    let synthetic = match (
        sweep_section.synthetic_constant,
        sweep_section.synthetic_exponent,
    ) {
        (Some(c), Some(e)) => Some((c, e)),
        (None, None) => None,
        _ => {
            return Err(CliError::config(
                "synthetic sweeps need both synthetic_constant and synthetic_exponent",
            ))
        }
    };

    let (rates, residuals) = if let Some((c, e)) = synthetic {
        let records = synthetic_records(&plan.axis, &plan.norms, c, e);
        (
            report_from_records(plan.axis.clone(), plan.norms.clone(), plan.slope_tol, plan.seed, records),
            None,
        )
    } else {
        let rates = run_sweep(&plan)?;
        let residuals = residual_sweep(&plan)?;
        (rates, Some(residuals))
    };

    let check_residuals = sweep_section.check_residuals.unwrap_or(true);
    let relation_threshold = sweep_section.relation_threshold.unwrap_or(0.25);
    let comp_threshold = sweep_section.complementarity_threshold.unwrap_or(0.5);
    let residual_trend_ok = residuals.as_ref().map(|t| {
        t.relation_decreasing
            && t.relation_last_over_first < relation_threshold
            && t.complementarity_last_over_first < comp_threshold
    });

    let verdicts_pass = rates.all_verdicts_pass()
        && (!check_residuals || residual_trend_ok.unwrap_or(true));

    write_text(&out.join("rates.csv"), &rates.to_csv())?;
    let artifact = SweepArtifact {
        config_hash: content_hash(canonical),
        config_echo: canonical,
        rates,
        residuals,
        residual_trend_ok,
        verdicts_pass,
    };
    let json = serde_json::to_string_pretty(&artifact)
        .map_err(|e| CliError::compute("IO_ERROR", e.to_string()))?;
    write_text(&out.join("report.json"), &json)?;

    if let Some(t1) = &artifact.rates.hminus1_verdict {
        println!(
            "sweep: negative-norm slope {:?}, pass {}",
            t1.slope, t1.pass
        );
    }
    println!(
        "sweep: verdicts {} (hash {})",
        if verdicts_pass { "pass" } else { "FAIL" },
        artifact.config_hash
    );
    if !verdicts_pass {
        return Err(CliError::verdict(
            "VERDICT_FAILED",
            "one or more sweep verdicts failed; see report.json",
        ));
    }
    Ok(())
}

pub fn cmd_metrics(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let section = config
        .metrics
        .as_ref()
        .ok_or_else(|| CliError::config("config has no [metrics] section"))?;
    let norms = section
        .norms
        .iter()
        .map(|n| parse_norm(n))
        .collect::<Result<Vec<_>, _>>()?;
    prepare_out(out)?;
    let (grid, snapshots) = read_snapshots(Path::new(&section.snapshots))?;
    let reference: Option<Vec<stiffpress::Field>> = match section.reference.as_str() {
        "none" => None,
        "mesa" => {
            let center = match &section.center {
                Some(c) => [
                    c.first().copied().unwrap_or(0.0),
                    c.get(1).copied().unwrap_or(0.0),
                ],
                None => [0.0, 0.0],
            };
            let mesa = mesa_indicator(grid, section.mass.unwrap_or(1.0), center)
                .map_err(|e| CliError::config(e.to_string()))?;
            Some(vec![mesa; snapshots.len()])
        }
        path => {
            let (ref_grid, ref_snaps) = read_snapshots(Path::new(path))?;
            if ref_grid != grid || ref_snaps.len() != snapshots.len() {
                return Err(CliError::config(
                    "reference snapshots do not match the primary file's grid/count",
                ));
            }
            Some(ref_snaps.into_iter().map(|(_, f)| f).collect())
        }
    };
    let mut csv = String::from("index,t,norm,value\n");
    for (i, (t, field)) in snapshots.iter().enumerate() {
        for norm in &norms {
            let value = match reference.as_ref() {
                Some(refs) => measure(norm, field, Some(&refs[i])),
                None => measure(norm, field, None),
            }
            .map_err(|e| CliError::compute("COMPUTE_ERROR", e.to_string()))?;
            csv.push_str(&format!("{i},{t},{},{value:.17e}\n", norm.label()));
        }
    }
    write_text(&out.join("metrics.csv"), &csv)?;
    println!(
        "metrics: {} snapshots x {} norms written",
        snapshots.len(),
        norms.len()
    );
    Ok(())
}

fn measure(
    norm: &stiffpress::harness::NormKind,
    field: &stiffpress::Field,
    reference: Option<&stiffpress::Field>,
) -> Result<f64, stiffpress::metrics::MetricsError> {
    use stiffpress::harness::NormKind;
    let target = match reference {
        Some(r) => field.sub(r),
        None => field.clone(),
    };
    match norm {
        NormKind::HMinus1 => hminus1_norm(&target),
        NormKind::L1 => lp_norm(&target, 1.0),
        NormKind::L43 => lp_norm(&target, 4.0 / 3.0),
        NormKind::Lp(p) => lp_norm(&target, *p),
        NormKind::W2 => match reference {
            Some(r) => w2_distance_1d(field, r),
            None => Err(stiffpress::metrics::MetricsError::ZeroField),
        },
    }
}

pub fn cmd_validate(
    config: Option<&ExperimentConfig>,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let section = config.and_then(|c| c.validate.as_ref());
    let seed = seed
        .or(section.and_then(|s| s.seed))
        .unwrap_or(42);
    let mutant = match section.and_then(|s| s.mutant.as_deref()) {
        Some(name) => Some(
            Mutant::parse(name)
                .ok_or_else(|| CliError::config(format!("unknown mutant '{name}'")))?,
        ),
        None => None,
    };
    prepare_out(out)?;
    let report = run_properties(seed, mutant);
    write_text(&out.join("validate.csv"), &report.to_csv())?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::compute("IO_ERROR", e.to_string()))?;
    write_text(&out.join("validate.json"), &json)?;
    for r in &report.results {
        println!("{}: {}", r.name, if r.pass { "pass" } else { "FAIL" });
    }
    if !report.all_pass {
        return Err(CliError::verdict(
            "PROPERTY_FAILED",
            "property suite failed; see validate.csv",
        ));
    }
    Ok(())
}

pub fn cmd_appendix(out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    prepare_out(out)?;
    let report = appendix_suites(seed.unwrap_or(42))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::compute("IO_ERROR", e.to_string()))?;
    write_text(&out.join("appendix.json"), &json)?;
    println!(
        "appendix: sandwich {}/{} pairs ok, 2D bounded {}, log-HLS ok {}",
        report.sandwich.pairs - report.sandwich.failures,
        report.sandwich.pairs,
        report.two_dim.bounded,
        report.two_dim.all_log_hls_ok
    );
    if !(report.sandwich.all_pass && report.two_dim.bounded && report.two_dim.all_log_hls_ok) {
        return Err(CliError::verdict(
            "VERDICT_FAILED",
            "appendix suite failed; see appendix.json",
        ));
    }
    Ok(())
}
