//! Quadrature datasets and their binned histograms.

use std::f64::consts::TAU;

use crate::error::{Result, TomoError};
use crate::fock::{validate_eta, QuadraturePoint};

/// One homodyne measurement.
pub type QuadratureRecord = QuadraturePoint;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDataset {
    records: Vec<QuadratureRecord>,
    eta: f64,
    source: String,
}

impl QuadratureDataset {
    pub fn new(records: Vec<QuadratureRecord>, eta: f64, source: impl Into<String>) -> Result<Self> {
        validate_eta(eta)?;
        Ok(QuadratureDataset {
            records,
            eta,
            source: source.into(),
        })
    }

    /// Builds records from raw `(theta, x)` pairs, rejecting non-finite values.
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (f64, f64)>,
        eta: f64,
        source: impl Into<String>,
    ) -> Result<Self> {
        let records = pairs
            .into_iter()
            .map(|(t, x)| QuadraturePoint::new(t, x))
            .collect::<Result<Vec<_>>>()?;
        QuadratureDataset::new(records, eta, source)
    }

    pub fn records(&self) -> &[QuadratureRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        validate_eta(eta)?;
        self.eta = eta;
        Ok(self)
    }

    pub fn phases(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.theta()).collect()
    }

    /// Concatenates two datasets; efficiency and provenance come from `self`.
    pub fn concat(&self, other: &QuadratureDataset) -> QuadratureDataset {
        let mut records = self.records.clone();
        records.extend_from_slice(&other.records);
        QuadratureDataset {
            records,
            eta: self.eta,
            source: self.source.clone(),
        }
    }

    /// Largest gap between consecutive distinct phases folded into `[0, π)`,
    /// treating the interval as periodic. Values near π mean the phases do not
    /// cover enough directions for a faithful reconstruction.
    pub fn largest_phase_gap(&self) -> f64 {
        largest_phase_gap(self.records.iter().map(|r| r.theta()))
    }
}

pub(crate) fn largest_phase_gap(phases: impl Iterator<Item = f64>) -> f64 {
    let half = TAU / 2.0;
    let mut folded: Vec<f64> = phases.map(|t| t.rem_euclid(half)).collect();
    if folded.is_empty() {
        return half;
    }
    folded.sort_by(f64::total_cmp);
    folded.dedup();
    let wrap = folded[0] + half - folded[folded.len() - 1];
    folded
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap, f64::max)
}

/// Binning layout: `theta_bins` uniform bins over `[0, 2π)` and `x_bins`
/// uniform bins over `[x_min, x_max)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BinningSpec {
    pub theta_bins: usize,
    pub x_bins: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl BinningSpec {
    pub fn validate(&self) -> Result<()> {
        if self.theta_bins == 0 || self.x_bins == 0 {
            return Err(TomoError::param("binning", "bin counts must be positive"));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(TomoError::param("binning", "x range must be finite and increasing"));
        }
        Ok(())
    }
}

/// Event counts f_{θ,x} on a rectangular (θ, x) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedHistogram {
    theta_edges: Vec<f64>,
    x_edges: Vec<f64>,
    // counts[jt * x_bins + jx]
    counts: Vec<u64>,
    /// Records that fell outside the x range and were not binned.
    pub outside: usize,
    eta: f64,
}

impl BinnedHistogram {
    pub fn from_dataset(dataset: &QuadratureDataset, spec: &BinningSpec) -> Result<Self> {
        spec.validate()?;
        let theta_edges: Vec<f64> = (0..=spec.theta_bins)
            .map(|j| TAU * j as f64 / spec.theta_bins as f64)
            .collect();
        let dx = (spec.x_max - spec.x_min) / spec.x_bins as f64;
        let x_edges: Vec<f64> = (0..=spec.x_bins)
            .map(|j| spec.x_min + dx * j as f64)
            .collect();
        let mut counts = vec![0u64; spec.theta_bins * spec.x_bins];
        let mut outside = 0;
        for r in dataset.records() {
            let jt = ((r.theta() / TAU * spec.theta_bins as f64) as usize).min(spec.theta_bins - 1);
            let u = (r.x() - spec.x_min) / dx;
            if !(0.0..spec.x_bins as f64).contains(&u) {
                outside += 1;
                continue;
            }
            let jx = (u as usize).min(spec.x_bins - 1);
            counts[jt * spec.x_bins + jx] += 1;
        }
        Ok(BinnedHistogram {
            theta_edges,
            x_edges,
            counts,
            outside,
            eta: dataset.eta(),
        })
    }

    pub fn theta_edges(&self) -> &[f64] {
        &self.theta_edges
    }

    pub fn x_edges(&self) -> &[f64] {
        &self.x_edges
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn count(&self, theta_bin: usize, x_bin: usize) -> u64 {
        self.counts[theta_bin * (self.x_edges.len() - 1) + x_bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Non-empty bins as (bin centre, count), in row-major (θ, x) order.
    pub fn occupied_bins(&self) -> Vec<(QuadraturePoint, u64)> {
        let nx = self.x_edges.len() - 1;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(idx, &c)| {
                let (jt, jx) = (idx / nx, idx % nx);
                let theta = 0.5 * (self.theta_edges[jt] + self.theta_edges[jt + 1]);
                let x = 0.5 * (self.x_edges[jx] + self.x_edges[jx + 1]);
                (
                    QuadraturePoint::new(theta, x).expect("bin centres are finite"),
                    c,
                )
            })
            .collect()
    }

    /// The dataset obtained by moving every binned record to its bin centre.
    pub fn to_centred_dataset(&self) -> QuadratureDataset {
        let records = self
            .occupied_bins()
            .into_iter()
            .flat_map(|(p, c)| std::iter::repeat_n(p, c as usize))
            .collect();
        QuadratureDataset {
            records,
            eta: self.eta,
            source: "bin centres".into(),
        }
    }
}
