//! One function per subcommand. Each validates its inputs, computes, and writes
//! its artifacts atomically.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hdtomo_core::io::{
    fmt_f64, parse_grid_spec, read_dataset, read_density, render_dataset, render_density, render_real_matrix,
    render_wigner, write_atomic,
};
use hdtomo_core::{
    backproject, bootstrap_uncertainty, log_likelihood, reconstruct, sample_quadratures, wigner_from_rho,
    BackProjectionConfig, BinnedHistogram, BootstrapOptions, MeasurementSet, ReconstructionResult, SimulationPlan,
    WignerGrid,
};
use serde_json::json;

use crate::config::{parse_state, PlanFile, RunConfig};
use crate::CliError;

pub const DIAGNOSTICS_FORMAT: &str = "hdtomo-diagnostics/1";

fn meta(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".diag.json");
    PathBuf::from(name)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("diagnostics serialize") + "\n";
    Ok(write_atomic(path, &text)?)
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> serde_json::Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

pub fn reconstruct_cmd(data: &Path, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dataset = read_dataset(data, &cfg.ingest(), cfg.eta)?;
    let recon = cfg.reconstruction();
    let (result, outside): (ReconstructionResult, usize) = match cfg.binning() {
        Some(spec) => {
            let hist = BinnedHistogram::from_dataset(&dataset, &spec)?;
            (reconstruct(&hist, &recon)?, hist.outside)
        }
        None => (reconstruct(&dataset, &recon)?, 0),
    };
    let final_lnl = *result.loglik_trace.last().expect("trace holds the initial state");
    let resolved = serde_json::to_string(&result.config).expect("config serializes");
    let stop = serde_json::to_value(result.stop_reason).expect("stop reason serializes");
    let headers = meta(&[
        ("config", cfg.echo()),
        ("resolved", resolved),
        ("data", data.display().to_string()),
        ("records", dataset.len().to_string()),
        ("iterations", result.iterations.to_string()),
        ("stop_reason", stop.as_str().unwrap_or_default().to_string()),
        ("log_likelihood", fmt_f64(final_lnl)),
    ]);
    let report = result.rho.physicality();
    let diag = json!({
        "format": DIAGNOSTICS_FORMAT,
        "config": cfg,
        "resolved": result.config,
        "iterations": result.iterations,
        "stop_reason": stop,
        "loglik_trace": result.loglik_trace,
        "diagnostics": result.diagnostics,
        "records_outside_binning": outside,
        "physicality": {
            "trace_error": report.trace_error,
            "hermiticity_error": report.hermiticity_error,
            "min_eigenvalue": report.min_eigenvalue,
        },
    });
    for w in &result.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&sidecar(out), &diag)?;
    write_atomic(out, &render_density(&result.rho, &headers))?;
    Ok(())
}

pub fn simulate_cmd(state: &str, plan: &Path, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let plan_file = PlanFile::load(plan)?;
    let plan = plan_file.to_plan()?;
    let spec = parse_state(state, cfg.n_max)?;
    let dataset = sample_quadratures(&spec, &plan)?;
    let comments = [
        format!("state = {}", spec.describe()),
        format!("n_max = {}", spec.n_max()),
        format!("plan = {}", plan_file.echo()),
        format!("config = {}", cfg.echo()),
    ];
    write_atomic(out, &render_dataset(&dataset, &comments))?;
    Ok(())
}

fn write_grid(grid: &WignerGrid, headers: BTreeMap<String, String>, out: &Path) -> Result<(), CliError> {
    let mut headers = headers;
    if !grid.warnings.is_empty() {
        for w in &grid.warnings {
            eprintln!("warning: {w}");
        }
        headers.insert("warnings".into(), serde_json::to_string(&grid.warnings).expect("strings serialize"));
    }
    write_atomic(out, &render_wigner(grid, &headers))?;
    Ok(())
}

pub fn wigner_cmd(rho: &Path, grid: &str, out: &Path) -> Result<(), CliError> {
    let spec = parse_grid_spec(grid)?;
    let (rho_m, _) = read_density(rho)?;
    let result = wigner_from_rho(&rho_m, &spec)?;
    let echo = json!({ "rho": rho, "grid": grid });
    write_grid(&result, meta(&[("config", echo.to_string())]), out)
}

pub fn radon_cmd(data: &Path, cutoff: Option<f64>, grid: Option<&str>, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(c) = cutoff {
        cfg.cutoff = c;
    }
    if let Some(g) = grid {
        cfg.grid = parse_grid_spec(g)?;
    }
    cfg.validate()?;
    let dataset = read_dataset(data, &cfg.ingest(), cfg.eta)?;
    let result = backproject(
        &dataset,
        &BackProjectionConfig {
            cutoff: cfg.cutoff,
            grid: cfg.grid,
        },
    )?;
    let headers = meta(&[("config", cfg.echo()), ("data", data.display().to_string())]);
    write_grid(&result, headers, out)
}

pub fn uncertainty_cmd(
    rho: &Path,
    plan: &Path,
    replicas: Option<usize>,
    data: Option<&Path>,
    config: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(m) = replicas {
        cfg.replicas = m;
    }
    let (rho_ml, _) = read_density(rho)?;
    // replicas must live in the estimate's space
    cfg.n_max = rho_ml.n_max();
    if cfg.k_max.is_some_and(|k| k > cfg.n_max) {
        cfg.k_max = Some(cfg.n_max);
    }
    cfg.validate()?;
    let plan_file = PlanFile::load(plan)?;
    let mut template = plan_file.to_plan()?;
    if let (Some(path), false) = (data, cfg.redraw_phases) {
        let dataset = read_dataset(path, &cfg.ingest(), plan_file.eta)?;
        template = SimulationPlan::replaying(&dataset, plan_file.seed);
    }
    let result = bootstrap_uncertainty(
        &rho_ml,
        &template,
        &cfg.reconstruction(),
        &BootstrapOptions::with_replicas(cfg.replicas),
    )?;
    let phases = if matches!(template.phase_schedule, hdtomo_core::PhaseSchedule::UniformRandom) {
        "uniform"
    } else if data.is_some() && !cfg.redraw_phases {
        "replayed from data"
    } else {
        "fixed set"
    };
    let headers = meta(&[
        ("config", cfg.echo()),
        ("plan", plan_file.echo()),
        ("rho", rho.display().to_string()),
        ("replicas", cfg.replicas.to_string()),
        ("samples_per_replica", template.n_samples.to_string()),
        ("phases", phases.to_string()),
        ("mean_trace_distance", fmt_f64(result.mean_trace_distance)),
    ]);
    let diag = json!({
        "format": DIAGNOSTICS_FORMAT,
        "config": cfg,
        "plan": plan_file,
        "mean_abs_deviation": matrix_json(&result.mean_abs_deviation),
        "std_deviation": matrix_json(&result.std_deviation),
        "mean_trace_distance": result.mean_trace_distance,
        "replica_seeds": result.replica_seeds,
        "replica_iterations": result.replica_iterations,
    });
    write_json(&sidecar(out), &diag)?;
    write_atomic(out, &render_real_matrix(&result.mean_abs_deviation, &headers))?;
    Ok(())
}

pub fn likelihood_cmd(rho: &Path, data: &Path, config: Option<&Path>) -> Result<f64, CliError> {
    let cfg = RunConfig::load(config)?;
    let (rho_m, _) = read_density(rho)?;
    let dataset = read_dataset(data, &cfg.ingest(), cfg.eta)?;
    let n_max = rho_m.n_max();
    let k_max = cfg.k_max.unwrap_or(n_max).min(n_max);
    let set = match cfg.binning() {
        Some(spec) => MeasurementSet::from_histogram(&BinnedHistogram::from_dataset(&dataset, &spec)?, n_max, cfg.eta, k_max)?,
        None => MeasurementSet::from_dataset(&dataset, n_max, cfg.eta, k_max)?,
    };
    Ok(log_likelihood(&rho_m, &set)?)
}
