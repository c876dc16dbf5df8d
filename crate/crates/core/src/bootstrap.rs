//! Parametric bootstrap: simulate data from the estimate as if it were the true
//! state, reconstruct each replica, and average the elementwise deviations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Result, TomoError};
use crate::maxlik::{reconstruct, ReconstructionConfig};
use crate::simulate::{sample_quadratures, SimulationPlan, StateSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOptions {
    pub n_replicas: usize,
    /// Test hook: every replica reuses the template seed.
    pub identical_seeds: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            n_replicas: 50,
            identical_seeds: false,
        }
    }
}

impl BootstrapOptions {
    pub fn with_replicas(n_replicas: usize) -> Self {
        BootstrapOptions {
            n_replicas,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// ⟨|ρ_ML − ρ'_k|⟩_k, elementwise modulus.
    pub mean_abs_deviation: DMatrix<f64>,
    /// Elementwise standard deviation of the replica estimates.
    pub std_deviation: DMatrix<f64>,
    /// ⟨‖ρ_ML − ρ'_k‖₁⟩_k
    pub mean_trace_distance: f64,
    pub replica_seeds: Vec<u64>,
    pub replica_iterations: Vec<usize>,
}

/// SplitMix64 finalizer applied to (seed, replica index).
pub fn replica_seed(seed: u64, replica: usize) -> u64 {
    let mut z = seed ^ (replica as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn bootstrap_uncertainty(
    rho_ml: &DensityMatrix,
    template: &SimulationPlan,
    recon: &ReconstructionConfig,
    options: &BootstrapOptions,
) -> Result<BootstrapResult> {
    if options.n_replicas < 2 {
        return Err(TomoError::param("n_replicas", "at least 2 replicas are needed"));
    }
    template.validate()?;
    recon.validate()?;
    if recon.n_max != rho_ml.n_max() {
        return Err(TomoError::DimensionMismatch {
            expected: rho_ml.dim(),
            found: recon.n_max + 1,
        });
    }
    let state = StateSpec::explicit(rho_ml.clone());
    let seeds: Vec<u64> = (0..options.n_replicas)
        .map(|k| {
            if options.identical_seeds {
                template.seed
            } else {
                replica_seed(template.seed, k)
            }
        })
        .collect();

    let replicas: Vec<(DensityMatrix, usize)> = seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| {
            let plan = SimulationPlan {
                seed,
                ..template.clone()
            };
            let wrap = |e| TomoError::Replica {
                replica: k,
                source: Box::new(e),
            };
            let data = sample_quadratures(&state, &plan).map_err(wrap)?;
            let result = reconstruct(&data, recon).map_err(wrap)?;
            Ok((result.rho, result.iterations))
        })
        .collect::<Result<_>>()?;

    let dim = rho_ml.dim();
    let count = replicas.len() as f64;
    let reference = rho_ml.matrix();
    let mut abs_dev = DMatrix::<f64>::zeros(dim, dim);
    let mut mean = DMatrix::<Complex64>::zeros(dim, dim);
    let mut trace_distance = 0.0;
    for (rho, _) in &replicas {
        let m = rho.matrix();
        for j in 0..dim {
            for i in 0..dim {
                abs_dev[(i, j)] += (reference[(i, j)] - m[(i, j)]).norm();
                mean[(i, j)] += m[(i, j)];
            }
        }
        trace_distance += rho_ml.trace_norm_distance(rho)?;
    }
    abs_dev /= count;
    mean /= Complex64::new(count, 0.0);
    let mut var = DMatrix::<f64>::zeros(dim, dim);
    for (rho, _) in &replicas {
        let m = rho.matrix();
        for j in 0..dim {
            for i in 0..dim {
                var[(i, j)] += (m[(i, j)] - mean[(i, j)]).norm_sqr();
            }
        }
    }
    let std_deviation = var.map(|v| (v / (count - 1.0)).sqrt());

    Ok(BootstrapResult {
        mean_abs_deviation: abs_dev,
        std_deviation,
        mean_trace_distance: trace_distance / count,
        replica_seeds: seeds,
        replica_iterations: replicas.iter().map(|(_, it)| *it).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_replicas_give_zero_spread() {
        let rho = DensityMatrix::maximally_mixed(2);
        let plan = SimulationPlan::uniform(300, 1.0, 5);
        let recon = ReconstructionConfig {
            max_iterations: 50,
            ..ReconstructionConfig::with_n_max(2)
        };
        let opts = BootstrapOptions {
            n_replicas: 2,
            identical_seeds: true,
        };
        let out = bootstrap_uncertainty(&rho, &plan, &recon, &opts).unwrap();
        assert!(out.std_deviation.iter().all(|&v| v == 0.0));
        // deviations from ρ_ML are equal across replicas, so the mean is one of them
        assert_eq!(out.replica_seeds, vec![5, 5]);
    }

    #[test]
    fn rejects_too_few_replicas_and_mismatched_dims() {
        let rho = DensityMatrix::maximally_mixed(2);
        let plan = SimulationPlan::uniform(100, 1.0, 5);
        let recon = ReconstructionConfig::with_n_max(2);
        assert!(bootstrap_uncertainty(&rho, &plan, &recon, &BootstrapOptions::with_replicas(1)).is_err());
        let recon = ReconstructionConfig::with_n_max(3);
        assert!(bootstrap_uncertainty(&rho, &plan, &recon, &BootstrapOptions::with_replicas(2)).is_err());
    }

    #[test]
    fn replica_seeds_are_distinct() {
        let seeds: std::collections::HashSet<_> = (0..1000).map(|k| replica_seed(17, k)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
