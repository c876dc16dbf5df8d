//! Filtered back-projection (inverse Radon transform) straight from the
//! quadrature samples.
//!
//! Each sample contributes the band-limited ramp-filter kernel
//! `K(z) = ∫₀^{k_c} k cos(kz) dk` along its projection direction, and
//! `W(x, p) ≈ (1 / 2πN) Σ_i K(x cos θ_i + p sin θ_i − x_i)` for phases spread
//! uniformly over a half or full turn.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::QuadratureDataset;
use crate::error::{Result, TomoError};
use crate::maxlik::PHASE_GAP_WARNING;
use crate::wigner::{GridProvenance, WignerGrid, WignerGridSpec};

/// Filter cutoff used for the comparison reconstructions.
pub const DEFAULT_CUTOFF: f64 = 6.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackProjectionConfig {
    pub cutoff: f64,
    pub grid: WignerGridSpec,
}

impl BackProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(TomoError::param("cutoff", "must be positive and finite"));
        }
        self.grid.validate()
    }
}

/// `K(z) = [cos(k_c z) + k_c z sin(k_c z) − 1] / z²`, with `K(0) = k_c²/2`.
pub fn ramp_kernel(z: f64, cutoff: f64) -> f64 {
    let u = cutoff * z;
    if u.abs() < 0.5 {
        // k_c² Σ_j (−1)^j u^{2j} / ((2j)! (2j+2)); the closed form cancels badly here
        let u2 = u * u;
        let mut term = 1.0;
        let mut acc = 0.5;
        for j in 1..10 {
            let jf = j as f64;
            term *= -u2 / ((2.0 * jf - 1.0) * (2.0 * jf));
            acc += term / (2.0 * jf + 2.0);
        }
        cutoff * cutoff * acc
    } else {
        let (s, c) = u.sin_cos();
        (c + u * s - 1.0) / (z * z)
    }
}

/// (cos θ_i, sin θ_i, x_i) per record.
fn projections(dataset: &QuadratureDataset) -> Result<Vec<(f64, f64, f64)>> {
    if dataset.is_empty() {
        return Err(TomoError::EmptyDataset);
    }
    Ok(dataset
        .records()
        .iter()
        .map(|r| {
            let (s, c) = r.theta().sin_cos();
            (c, s, r.x())
        })
        .collect())
}

/// The back-projected Wigner function at a single phase-space point.
pub fn backproject_point(dataset: &QuadratureDataset, cutoff: f64, x: f64, p: f64) -> Result<f64> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(TomoError::param("cutoff", "must be positive and finite"));
    }
    let samples = projections(dataset)?;
    let sum: f64 = samples
        .iter()
        .map(|&(c, s, xi)| ramp_kernel(x * c + p * s - xi, cutoff))
        .sum();
    Ok(sum / (2.0 * PI * samples.len() as f64))
}

pub fn backproject(dataset: &QuadratureDataset, config: &BackProjectionConfig) -> Result<WignerGrid> {
    config.validate()?;
    let samples = projections(dataset)?;
    let norm = 1.0 / (2.0 * PI * samples.len() as f64);
    let cutoff = config.cutoff;
    let mut grid = WignerGrid::evaluate(
        config.grid,
        GridProvenance::FromBackProjection {
            cutoff,
            samples: samples.len(),
        },
        |x, p| {
            let sum: f64 = samples
                .iter()
                .map(|&(c, s, xi)| ramp_kernel(x * c + p * s - xi, cutoff))
                .sum();
            Ok(norm * sum)
        },
    )?;
    let gap = dataset.largest_phase_gap();
    if gap > PHASE_GAP_WARNING {
        grid.warnings.push(format!(
            "phases leave a gap of {gap:.3} rad in [0, π); back-projection will smear along it"
        ));
    }
    Ok(grid)
}
