//! Per-record measurement cache for the likelihood iteration.
//!
//! Every ideal projector is rank one, `Π = v v†` with `v_n = e^{inθ} ψ_n(x)`,
//! so only ψ_n(x) and the phase powers e^{iΔθ} are stored. Loss POVMs are
//! never materialized: `Tr[E_η ρ] = Tr[Π B(ρ)]` and `Σ E_η/pr = B†(Σ Π/pr)`,
//! where `B` is the Bernoulli loss channel, so the per-record work is the same
//! as for ideal projectors.

use num_complex::Complex64;

use crate::dataset::{BinnedHistogram, QuadratureDataset};
use crate::density::CMatrix;
use crate::error::{Result, TomoError};
use crate::fock::{
    hermite_functions_into, ideal_projector, loss_povm_with, LossChannel, MeasurementKind,
    MeasurementOperator, QuadraturePoint,
};
use crate::reduce::{chunked_tree_reduce, pairwise_sum};

/// Probabilities are clamped here before taking logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Records with probability below this fraction of the largest one are
/// reported as degenerate.
pub const DEGENERATE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MeasurementSet {
    dim: usize,
    kind: MeasurementKind,
    channel: Option<LossChannel>,
    points: Vec<QuadraturePoint>,
    weights: Vec<f64>,
    // psi[i * dim + n] = ψ_n(x_i)
    psi: Vec<f64>,
    // phase[i * dim + d] = e^{i d θ_i}
    phase: Vec<Complex64>,
    total_weight: f64,
}

/// Likelihood quantities of one density matrix against a measurement set.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Σ_i w_i ln max(pr_i, floor)
    pub log_likelihood: f64,
    /// Σ_i w_i Π_i / pr_i (or E_i), skipping floored records.
    pub r: CMatrix,
    pub probabilities: Vec<f64>,
    /// Records whose probability hit [`PROBABILITY_FLOOR`].
    pub floored: Vec<usize>,
}

impl Evaluation {
    /// Records whose probability is negligible against the best-explained one.
    pub fn degenerate_records(&self) -> Vec<usize> {
        let max = self.probabilities.iter().copied().fold(0.0, f64::max);
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p < DEGENERATE_RATIO * max)
            .map(|(i, _)| i)
            .collect()
    }
}

struct Partial {
    lnl: f64,
    r: Vec<Complex64>,
    probabilities: Vec<f64>,
    floored: Vec<usize>,
}

impl MeasurementSet {
    /// Caches `points` with per-point weights (event counts, or 1 for raw records).
    pub fn from_weighted_points(
        points: Vec<QuadraturePoint>,
        weights: Vec<f64>,
        n_max: usize,
        kind: MeasurementKind,
    ) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(TomoError::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(TomoError::param("weights", "must be finite and non-negative"));
        }
        let channel = match kind {
            MeasurementKind::IdealProjector => None,
            MeasurementKind::LossPovm { eta, k_max } => Some(LossChannel::new(eta, n_max, k_max)?),
        };
        let kind = match &channel {
            Some(ch) => MeasurementKind::LossPovm {
                eta: ch.eta(),
                k_max: ch.k_max(),
            },
            None => kind,
        };
        let dim = n_max + 1;
        let mut psi = vec![0.0; points.len() * dim];
        let mut phase = vec![Complex64::new(0.0, 0.0); points.len() * dim];
        for (i, p) in points.iter().enumerate() {
            hermite_functions_into(p.x(), &mut psi[i * dim..(i + 1) * dim]);
            for d in 0..dim {
                phase[i * dim + d] = Complex64::from_polar(1.0, d as f64 * p.theta());
            }
        }
        let total_weight = pairwise_sum(&weights);
        Ok(MeasurementSet {
            dim,
            kind,
            channel,
            points,
            weights,
            psi,
            phase,
            total_weight,
        })
    }

    /// One unit-weight measurement per record; the kind follows `eta`.
    pub fn from_dataset(
        dataset: &QuadratureDataset,
        n_max: usize,
        eta: f64,
        k_max: usize,
    ) -> Result<Self> {
        let kind = MeasurementKind::for_efficiency(eta, k_max)?;
        let points = dataset.records().to_vec();
        let weights = vec![1.0; points.len()];
        MeasurementSet::from_weighted_points(points, weights, n_max, kind)
    }

    /// One measurement per occupied bin, at the bin centre, weighted by its count.
    pub fn from_histogram(
        hist: &BinnedHistogram,
        n_max: usize,
        eta: f64,
        k_max: usize,
    ) -> Result<Self> {
        let kind = MeasurementKind::for_efficiency(eta, k_max)?;
        let (points, weights) = hist
            .occupied_bins()
            .into_iter()
            .map(|(p, c)| (p, c as f64))
            .unzip();
        MeasurementSet::from_weighted_points(points, weights, n_max, kind)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.dim - 1
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn channel(&self) -> Option<&LossChannel> {
        self.channel.as_ref()
    }

    pub fn points(&self) -> &[QuadraturePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ_i w_i, the sample count N for unbinned data.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Materializes the full operator of record `i`.
    pub fn operator(&self, i: usize) -> MeasurementOperator {
        match &self.channel {
            None => ideal_projector(self.points[i], self.n_max()),
            Some(ch) => loss_povm_with(ch, self.points[i]),
        }
    }

    fn check_dim(&self, rho: &CMatrix) -> Result<()> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(TomoError::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        Ok(())
    }

    /// Probabilities, log-likelihood and R-operator of `rho` in a single pass.
    pub fn evaluate(&self, rho: &CMatrix) -> Result<Evaluation> {
        self.check_dim(rho)?;
        if self.is_empty() {
            return Err(TomoError::EmptyDataset);
        }
        let effective = match &self.channel {
            Some(ch) => ch.apply(rho)?,
            None => rho.clone(),
        };
        let dim = self.dim;
        let packed_len = dim * (dim + 1) / 2;
        // upper[off(Δ) + n] = ρ_{n, n+Δ}
        let mut upper = Vec::with_capacity(packed_len);
        for delta in 0..dim {
            for n in 0..dim - delta {
                upper.push(effective[(n, n + delta)]);
            }
        }

        let partial = chunked_tree_reduce(
            self.len(),
            |start, end| self.evaluate_chunk(&upper, start, end),
            |mut a, b| {
                a.lnl += b.lnl;
                for (x, y) in a.r.iter_mut().zip(&b.r) {
                    *x += y;
                }
                a.probabilities.extend(b.probabilities);
                a.floored.extend(b.floored);
                a
            },
        )
        .expect("non-empty set");

        // unpack lower[off(Δ) + n] = R_{n+Δ, n}
        let mut r = CMatrix::zeros(dim, dim);
        let mut idx = 0;
        for delta in 0..dim {
            for n in 0..dim - delta {
                let v = partial.r[idx];
                r[(n + delta, n)] = v;
                r[(n, n + delta)] = v.conj();
                idx += 1;
            }
        }
        for n in 0..dim {
            r[(n, n)].im = 0.0;
        }
        let r = match &self.channel {
            Some(ch) => ch.adjoint(&r)?,
            None => r,
        };
        Ok(Evaluation {
            log_likelihood: partial.lnl,
            r,
            probabilities: partial.probabilities,
            floored: partial.floored,
        })
    }

    fn evaluate_chunk(&self, upper: &[Complex64], start: usize, end: usize) -> Partial {
        let dim = self.dim;
        let packed_len = upper.len();
        let mut r = vec![Complex64::new(0.0, 0.0); packed_len];
        let mut products = vec![0.0; packed_len];
        let mut probabilities = Vec::with_capacity(end - start);
        let mut logs = Vec::with_capacity(end - start);
        let mut floored = Vec::new();

        for i in start..end {
            let psi = &self.psi[i * dim..(i + 1) * dim];
            let phase = &self.phase[i * dim..(i + 1) * dim];

            let mut idx = 0;
            let mut pr = 0.0;
            for delta in 0..dim {
                let mut s = Complex64::new(0.0, 0.0);
                for n in 0..dim - delta {
                    let pp = psi[n + delta] * psi[n];
                    products[idx] = pp;
                    s += upper[idx] * pp;
                    idx += 1;
                }
                let term = (phase[delta] * s).re;
                pr += if delta == 0 { term } else { 2.0 * term };
            }
            probabilities.push(pr);

            let w = self.weights[i];
            if pr <= PROBABILITY_FLOOR {
                floored.push(i);
                logs.push(w * PROBABILITY_FLOOR.ln());
                continue;
            }
            logs.push(w * pr.ln());

            let scale = w / pr;
            let mut idx = 0;
            for delta in 0..dim {
                let z = phase[delta] * scale;
                let len = dim - delta;
                for (acc, pp) in r[idx..idx + len].iter_mut().zip(&products[idx..idx + len]) {
                    *acc += z * pp;
                }
                idx += len;
            }
        }
        Partial {
            lnl: pairwise_sum(&logs),
            r,
            probabilities,
            floored,
        }
    }
}
