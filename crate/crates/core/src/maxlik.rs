//! Maximum-likelihood reconstruction by the iteration ρ ← N[R(ρ) ρ R(ρ)].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinnedHistogram, QuadratureDataset};
use crate::density::{hermitian_part, CMatrix, DensityMatrix};
use crate::error::{Result, TomoError};
use crate::fock::{validate_eta, MeasurementKind, MeasurementOperator};
use crate::measurement::{Evaluation, MeasurementSet};

/// Phase sets whose largest gap (folded into `[0, π)`) exceeds this are
/// flagged as poorly covered.
pub const PHASE_GAP_WARNING: f64 = std::f64::consts::FRAC_PI_4;

/// Smallest trace of R·ρ·R that is still normalized.
pub const TRACE_FLOOR: f64 = 1e-290;

/// Re Tr[E·ρ], clamped at zero.
pub fn probability(rho: &DensityMatrix, op: &MeasurementOperator) -> Result<f64> {
    if op.dim() != rho.dim() {
        return Err(TomoError::DimensionMismatch {
            expected: rho.dim(),
            found: op.dim(),
        });
    }
    let m = rho.matrix();
    let mut acc = 0.0;
    for a in 0..rho.dim() {
        for b in 0..rho.dim() {
            acc += (op.matrix[(a, b)] * m[(b, a)]).re;
        }
    }
    Ok(acc.max(0.0))
}

/// ln L = Σ_i ln pr_i over the cached measurements.
pub fn log_likelihood(rho: &DensityMatrix, set: &MeasurementSet) -> Result<f64> {
    Ok(set.evaluate(rho.matrix())?.log_likelihood)
}

/// R(ρ) = Σ_i E_i / pr_i.
///
/// Fails with [`TomoError::DegenerateMeasurement`] naming the first record
/// whose probability is at the floor.
pub fn r_operator(rho: &DensityMatrix, set: &MeasurementSet) -> Result<CMatrix> {
    let eval = set.evaluate(rho.matrix())?;
    if let Some(&index) = eval.floored.first() {
        return Err(TomoError::DegenerateMeasurement {
            index,
            probability: eval.probabilities[index],
        });
    }
    Ok(eval.r)
}

/// R(ρ) = Σ_j (f_j / pr_j) E_j over occupied bins, evaluated at bin centres.
pub fn r_operator_binned(rho: &DensityMatrix, hist: &BinnedHistogram, k_max: usize) -> Result<CMatrix> {
    let set = MeasurementSet::from_histogram(hist, rho.n_max(), hist.eta(), k_max)?;
    r_operator(rho, &set)
}

/// N[R ρ R], re-Hermitized.
pub fn iterate_once(rho: &DensityMatrix, r: &CMatrix) -> Result<DensityMatrix> {
    if r.nrows() != rho.dim() || r.ncols() != rho.dim() {
        return Err(TomoError::DimensionMismatch {
            expected: rho.dim(),
            found: r.nrows(),
        });
    }
    let sandwich = r * rho.matrix() * r;
    let mut m = hermitian_part(&sandwich);
    let tr = m.trace().re;
    if !(tr > TRACE_FLOOR) || !tr.is_finite() {
        return Err(TomoError::VanishingTrace(tr));
    }
    m /= Complex64::new(tr, 0.0);
    Ok(DensityMatrix::from_raw(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub n_max: usize,
    /// Detector efficiency used to build POVMs; `None` takes it from the data.
    pub eta: Option<f64>,
    /// Largest number of lost photons summed in the POVM; `None` means `n_max`.
    pub k_max: Option<usize>,
    pub max_iterations: usize,
    /// Stop when the per-iteration log-likelihood gain falls below
    /// `tolerance × N`.
    pub tolerance: f64,
    /// Starting point; `None` means the maximally mixed state.
    pub initial: Option<DensityMatrix>,
    /// Warn when the `k_max` cutoff discards more weight than this.
    pub dropped_weight_warning: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            n_max: 10,
            eta: None,
            k_max: None,
            max_iterations: 5000,
            tolerance: 1e-10,
            initial: None,
            dropped_weight_warning: 1e-6,
        }
    }
}

impl ReconstructionConfig {
    pub fn with_n_max(n_max: usize) -> Self {
        ReconstructionConfig {
            n_max,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(TomoError::param("n_max", "must be at least 1"));
        }
        if self.max_iterations < 1 {
            return Err(TomoError::param("max_iterations", "must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(TomoError::param("tolerance", "must be positive and finite"));
        }
        if let Some(eta) = self.eta {
            validate_eta(eta)?;
        }
        if let Some(init) = &self.initial {
            if init.n_max() != self.n_max {
                return Err(TomoError::DimensionMismatch {
                    expected: self.n_max + 1,
                    found: init.dim(),
                });
            }
        }
        Ok(())
    }
}

/// The configuration a reconstruction actually ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub n_max: usize,
    pub eta: f64,
    pub k_max: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub initial: String,
    pub binned: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub warnings: Vec<String>,
    /// Records with negligible probability under the final estimate.
    pub degenerate_records: Vec<usize>,
    /// Iterations in which some record's probability hit the floor.
    pub floored_iterations: usize,
    /// (iteration, change) for every log-likelihood drop beyond 1e-12·N.
    pub likelihood_decreases: Vec<(usize, f64)>,
    pub sample_weight: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    /// ln L of every iterate, starting with the initial state; the last entry
    /// belongs to `rho`.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub config: ResolvedConfig,
    pub diagnostics: Diagnostics,
}

/// Data accepted by [`reconstruct`].
#[derive(Debug, Clone, Copy)]
pub enum ReconstructionInput<'a> {
    Records(&'a QuadratureDataset),
    Binned(&'a BinnedHistogram),
}

impl<'a> From<&'a QuadratureDataset> for ReconstructionInput<'a> {
    fn from(d: &'a QuadratureDataset) -> Self {
        ReconstructionInput::Records(d)
    }
}

impl<'a> From<&'a BinnedHistogram> for ReconstructionInput<'a> {
    fn from(h: &'a BinnedHistogram) -> Self {
        ReconstructionInput::Binned(h)
    }
}

pub fn reconstruct<'a>(
    input: impl Into<ReconstructionInput<'a>>,
    config: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    let input = input.into();
    let k_max = config.k_max.unwrap_or(config.n_max);
    let (set, eta, binned) = match input {
        ReconstructionInput::Records(d) => {
            if d.is_empty() {
                return Err(TomoError::EmptyDataset);
            }
            let eta = config.eta.unwrap_or(d.eta());
            (MeasurementSet::from_dataset(d, config.n_max, eta, k_max)?, eta, false)
        }
        ReconstructionInput::Binned(h) => {
            if h.total() == 0 {
                return Err(TomoError::EmptyDataset);
            }
            let eta = config.eta.unwrap_or(h.eta());
            (MeasurementSet::from_histogram(h, config.n_max, eta, k_max)?, eta, true)
        }
    };
    let mut result = reconstruct_set(&set, config)?;
    result.config.binned = binned;
    result.config.eta = eta;
    Ok(result)
}

/// Runs the iteration on a prepared measurement set.
pub fn reconstruct_set(set: &MeasurementSet, config: &ReconstructionConfig) -> Result<ReconstructionResult> {
    config.validate()?;
    if set.n_max() != config.n_max {
        return Err(TomoError::DimensionMismatch {
            expected: config.n_max + 1,
            found: set.n_max() + 1,
        });
    }
    if set.is_empty() || set.total_weight() <= 0.0 {
        return Err(TomoError::EmptyDataset);
    }

    let (eta, k_max) = match set.kind() {
        MeasurementKind::IdealProjector => (1.0, config.k_max.unwrap_or(config.n_max)),
        MeasurementKind::LossPovm { eta, k_max } => (eta, k_max),
    };
    let n = set.total_weight();
    let mut diagnostics = Diagnostics {
        sample_weight: n,
        ..Default::default()
    };
    if let Some(ch) = set.channel() {
        let dropped = ch.dropped_weight();
        if dropped > config.dropped_weight_warning {
            diagnostics.warnings.push(format!(
                "k_max = {} discards up to {dropped:.3e} of the loss-channel weight",
                ch.k_max()
            ));
        }
    }
    let gap = crate::dataset::largest_phase_gap(set.points().iter().map(|p| p.theta()));
    if gap > PHASE_GAP_WARNING {
        diagnostics.warnings.push(format!(
            "phases leave a gap of {gap:.3} rad in [0, π); the reconstruction may be poorly constrained"
        ));
    }

    let mut rho = config
        .initial
        .clone()
        .unwrap_or_else(|| DensityMatrix::maximally_mixed(config.n_max));
    let threshold = config.tolerance * n;
    let slack = 1e-12 * n;

    let mut eval: Evaluation = set.evaluate(rho.matrix())?;
    let mut trace = vec![eval.log_likelihood];
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = 0;
    for k in 0..config.max_iterations {
        if !eval.floored.is_empty() {
            diagnostics.floored_iterations += 1;
        }
        let next = iterate_once(&rho, &eval.r)?;
        let next_eval = set.evaluate(next.matrix())?;
        let gain = next_eval.log_likelihood - eval.log_likelihood;
        trace.push(next_eval.log_likelihood);
        iterations += 1;
        if gain < -slack {
            diagnostics.likelihood_decreases.push((k + 1, gain));
        }
        rho = next;
        eval = next_eval;
        if gain < threshold {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    if let Some(&index) = eval.floored.first() {
        return Err(TomoError::DegenerateMeasurement {
            index,
            probability: eval.probabilities[index],
        });
    }
    diagnostics.degenerate_records = eval.degenerate_records();
    if !diagnostics.likelihood_decreases.is_empty() {
        diagnostics.warnings.push(format!(
            "log-likelihood decreased in {} iteration(s)",
            diagnostics.likelihood_decreases.len()
        ));
    }

    Ok(ReconstructionResult {
        rho,
        loglik_trace: trace,
        iterations,
        stop_reason,
        config: ResolvedConfig {
            n_max: config.n_max,
            eta,
            k_max,
            max_iterations: config.max_iterations,
            tolerance: config.tolerance,
            initial: if config.initial.is_some() {
                "custom".into()
            } else {
                "maximally-mixed".into()
            },
            binned: false,
        },
        diagnostics,
    })
}
