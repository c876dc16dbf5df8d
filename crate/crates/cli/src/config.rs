//! Run configuration, simulation plans and state descriptors.

use std::path::Path;

use hdtomo_core::io::{read_density, read_text, IngestOptions, PhaseUnit};
use hdtomo_core::simulate::{PhaseSchedule, StateKind};
use hdtomo_core::{
    BackProjectionConfig, BinningSpec, ReconstructionConfig, SimulationPlan, StateSpec, TomoError, WignerGridSpec,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run can be configured with. Every key is optional in the
/// TOML file; the defaults are listed in `Default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Fock-space truncation.
    pub n_max: usize,
    /// Detector efficiency attached to ingested data.
    pub eta: f64,
    /// Lost photons summed in the loss POVM; defaults to `n_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    pub max_iterations: usize,
    /// Per-sample log-likelihood gain below which iteration stops.
    pub tolerance: f64,
    pub seed: u64,
    /// Back-projection filter cutoff.
    pub cutoff: f64,
    pub grid: WignerGridSpec,
    /// When present, `reconstruct` bins the data first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binning: Option<BinningConfig>,
    pub phase_unit: PhaseUnit,
    /// Field separator for datasets; detected per line when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
    /// Bootstrap replica count.
    pub replicas: usize,
    /// Bootstrap replicas draw fresh phases instead of reusing the data's.
    pub redraw_phases: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningConfig {
    pub theta_bins: usize,
    pub x_bins: usize,
    pub x_range: [f64; 2],
}

impl Default for RunConfig {
    fn default() -> Self {
        let recon = ReconstructionConfig::default();
        RunConfig {
            n_max: recon.n_max,
            eta: 1.0,
            k_max: None,
            max_iterations: recon.max_iterations,
            tolerance: recon.tolerance,
            seed: 0,
            cutoff: hdtomo_core::radon::DEFAULT_CUTOFF,
            grid: WignerGridSpec::square(4.0, 81),
            binning: None,
            phase_unit: PhaseUnit::Radians,
            delimiter: None,
            replicas: 50,
            redraw_phases: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = read_text(p)?;
                toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every downstream precondition before any compute.
    pub fn validate(&self) -> Result<(), CliError> {
        self.reconstruction().validate()?;
        if let Some(k) = self.k_max {
            if k > self.n_max {
                return Err(CliError::usage(format!("k_max = {k} exceeds n_max = {}", self.n_max)));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(CliError::usage(format!("eta = {} must lie in (0, 1]", self.eta)));
        }
        BackProjectionConfig {
            cutoff: self.cutoff,
            grid: self.grid,
        }
        .validate()?;
        if let Some(b) = self.binning() {
            b.validate()?;
        }
        if self.replicas < 2 {
            return Err(CliError::usage("replicas must be at least 2"));
        }
        Ok(())
    }

    pub fn reconstruction(&self) -> ReconstructionConfig {
        ReconstructionConfig {
            n_max: self.n_max,
            eta: None,
            k_max: self.k_max,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            ..ReconstructionConfig::default()
        }
    }

    pub fn ingest(&self) -> IngestOptions {
        IngestOptions {
            phase_unit: self.phase_unit,
            delimiter: self.delimiter,
        }
    }

    pub fn binning(&self) -> Option<BinningSpec> {
        self.binning.map(|b| BinningSpec {
            theta_bins: b.theta_bins,
            x_bins: b.x_bins,
            x_min: b.x_range[0],
            x_max: b.x_range[1],
        })
    }

    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// A simulation plan as written in TOML. Phases are uniform on [0, 2π) unless
/// `phases` (cycled) or `phase_count` (equally spaced over [0, π)) is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub n_samples: usize,
    #[serde(default = "unit_efficiency")]
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_count: Option<usize>,
}

fn unit_efficiency() -> f64 {
    1.0
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path)?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn to_plan(&self) -> Result<SimulationPlan, CliError> {
        let schedule = match (&self.phases, self.phase_count) {
            (Some(_), Some(_)) => return Err(CliError::usage("plan: give either `phases` or `phase_count`, not both")),
            (Some(set), None) => PhaseSchedule::FixedSet(set.clone()),
            (None, Some(count)) => {
                if count == 0 {
                    return Err(CliError::usage("plan: phase_count must be positive"));
                }
                SimulationPlan::equally_spaced(count, self.n_samples, self.eta, self.seed).phase_schedule
            }
            (None, None) => PhaseSchedule::UniformRandom,
        };
        let plan = SimulationPlan {
            n_samples: self.n_samples,
            phase_schedule: schedule,
            eta: self.eta,
            seed: self.seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }
}

/// `vacuum`, `fock:N`, `coherent:RE,IM`, `superposition:C0RE,C0IM,C1RE,C1IM`,
/// or the path of a density-matrix file.
pub fn parse_state(text: &str, n_max: usize) -> Result<StateSpec, CliError> {
    let numbers = |rest: &str, count: usize| -> Result<Vec<f64>, CliError> {
        let v: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::usage(format!("state {text:?}: expected {count} numbers")))?;
        if v.len() != count {
            return Err(CliError::usage(format!("state {text:?}: expected {count} numbers")));
        }
        Ok(v)
    };
    let kind = match text.split_once(':') {
        None if text == "vacuum" => StateKind::Vacuum,
        Some(("fock", n)) => StateKind::Fock(
            n.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("state {text:?}: photon number expected")))?,
        ),
        Some(("coherent", rest)) => {
            let v = numbers(rest, 2)?;
            StateKind::Coherent(Complex64::new(v[0], v[1]))
        }
        Some(("superposition", rest)) => {
            let v = numbers(rest, 4)?;
            StateKind::Superposition01 {
                c0: Complex64::new(v[0], v[1]),
                c1: Complex64::new(v[2], v[3]),
            }
        }
        _ => {
            let (rho, _) = read_density(Path::new(text))?;
            return Ok(StateSpec::explicit(rho));
        }
    };
    Ok(StateSpec::new(kind, n_max)?)
}

impl From<TomoError> for CliError {
    fn from(e: TomoError) -> Self {
        CliError::Core(e)
    }
}
