//! Fock-basis building blocks: number/quadrature overlaps, quadrature projectors
//! and the beam-splitter loss model.
//!
//! Quadratures follow the `[x̂, p̂] = i/2` convention, so the vacuum marginal is
//! `√(2/π)·exp(−2x²)` with variance 1/4.

use std::f64::consts::{FRAC_2_PI, TAU};

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::density::{CMatrix, DensityMatrix};
use crate::error::{Result, TomoError};

/// Measurement outcome of a balanced homodyne detector: local-oscillator
/// phase `theta` (radians, reduced to `[0, 2π)`) and quadrature value `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePoint {
    theta: f64,
    x: f64,
}

impl QuadraturePoint {
    pub fn new(theta: f64, x: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(TomoError::NonFinite("phase"));
        }
        if !x.is_finite() {
            return Err(TomoError::NonFinite("quadrature value"));
        }
        Ok(QuadraturePoint {
            theta: reduce_phase(theta),
            x,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn reduce_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid rounds up to exactly 2π for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Normalized oscillator eigenfunctions ψ_n(x), n = 0..out.len().
///
/// Uses the three-term recurrence on the normalized functions themselves, so
/// neither Hermite polynomials nor factorials are ever formed.
pub fn hermite_functions_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = FRAC_2_PI.sqrt().sqrt() * (-x * x).exp();
    if out.len() > 1 {
        out[1] = 2.0 * x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 * x * out[n] - nf.sqrt() * out[n - 1]) / (nf + 1.0).sqrt();
    }
}

pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    hermite_functions_into(x, &mut out);
    out
}

/// `⟨n|θ,x⟩` for n = 0..=n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapVector {
    point: QuadraturePoint,
    entries: Vec<Complex64>,
}

impl OverlapVector {
    pub fn point(&self) -> QuadraturePoint {
        self.point
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn n_max(&self) -> usize {
        self.entries.len() - 1
    }
}

pub fn fock_overlap(point: QuadraturePoint, n_max: usize) -> OverlapVector {
    let psi = hermite_functions(point.x, n_max);
    let entries = psi
        .iter()
        .enumerate()
        .map(|(n, &p)| Complex64::from_polar(1.0, n as f64 * point.theta) * p)
        .collect();
    OverlapVector { point, entries }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementKind {
    /// Projector onto a quadrature eigenstate (unit detector efficiency).
    IdealProjector,
    /// POVM element of a detector with efficiency `eta`, summing at most
    /// `k_max` lost photons.
    LossPovm { eta: f64, k_max: usize },
}

impl MeasurementKind {
    /// Picks the ideal projector for `eta == 1`, the loss POVM otherwise.
    pub fn for_efficiency(eta: f64, k_max: usize) -> Result<Self> {
        validate_eta(eta)?;
        Ok(if eta == 1.0 {
            MeasurementKind::IdealProjector
        } else {
            MeasurementKind::LossPovm { eta, k_max }
        })
    }
}

/// Fock-basis matrix of a single measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    pub matrix: CMatrix,
    pub kind: MeasurementKind,
}

impl MeasurementOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Π_{mn}(θ,x) = ⟨m|θ,x⟩⟨θ,x|n⟩
pub fn ideal_projector(point: QuadraturePoint, n_max: usize) -> MeasurementOperator {
    let v = fock_overlap(point, n_max);
    let e = v.entries();
    let d = n_max + 1;
    MeasurementOperator {
        matrix: CMatrix::from_fn(d, d, |m, n| e[m] * e[n].conj()),
        kind: MeasurementKind::IdealProjector,
    }
}

pub(crate) fn validate_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(TomoError::param(
            "eta",
            format!("detector efficiency must lie in (0, 1], got {eta}"),
        ))
    }
}

/// B_{n+k,n}(η) = √(C(n+k, n) ηⁿ (1−η)ᵏ), evaluated in log space.
pub fn bernoulli_coefficient(n: usize, k: usize, eta: f64) -> Result<f64> {
    validate_eta(eta)?;
    Ok(bernoulli_unchecked(n, k, eta))
}

fn bernoulli_unchecked(n: usize, k: usize, eta: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    if k == 0 {
        return eta.powf(0.5 * nf);
    }
    if eta == 1.0 {
        return 0.0;
    }
    if n == 0 {
        return (1.0 - eta).powf(0.5 * kf);
    }
    let ln_binom = ln_gamma(nf + kf + 1.0) - ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0);
    (0.5 * (ln_binom + nf * eta.ln() + kf * (-eta).ln_1p())).exp()
}

/// The generalized Bernoulli (beam-splitter loss) channel on a truncated Fock space.
///
/// Terms that would index Fock states above `n_max` are dropped, and at most
/// `k_max` lost photons are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct LossChannel {
    eta: f64,
    n_max: usize,
    k_max: usize,
    // coeff[n * (k_max + 1) + k] = B_{n+k,n}(η), zero where n + k > n_max
    coeff: Vec<f64>,
}

impl LossChannel {
    pub fn new(eta: f64, n_max: usize, k_max: usize) -> Result<Self> {
        validate_eta(eta)?;
        let k_max = k_max.min(n_max);
        let stride = k_max + 1;
        let mut coeff = vec![0.0; (n_max + 1) * stride];
        for n in 0..=n_max {
            for k in 0..=k_max.min(n_max - n) {
                coeff[n * stride + k] = bernoulli_unchecked(n, k, eta);
            }
        }
        Ok(LossChannel {
            eta,
            n_max,
            k_max,
            coeff,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    #[inline]
    pub fn coefficient(&self, n: usize, k: usize) -> f64 {
        if k > self.k_max || n + k > self.n_max {
            0.0
        } else {
            self.coeff[n * (self.k_max + 1) + k]
        }
    }

    /// Largest probability, over input photon numbers N ≤ n_max, of losing more
    /// than `k_max` photons; this is the weight the `k_max` cutoff discards.
    pub fn dropped_weight(&self) -> f64 {
        (0..=self.n_max)
            .map(|total| {
                let kept: f64 = (0..=self.k_max.min(total))
                    .map(|k| self.coefficient(total - k, k).powi(2))
                    .sum();
                (1.0 - kept).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// ⟨m|ρ_η|n⟩ = Σ_k B_{m+k,m} B_{n+k,n} ⟨m+k|ρ|n+k⟩
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.check_dim(rho)?;
        let d = self.n_max + 1;
        Ok(CMatrix::from_fn(d, d, |m, n| {
            let top = self.k_max.min(self.n_max - m.max(n));
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=top {
                acc += rho[(m + k, n + k)] * (self.coefficient(m, k) * self.coefficient(n, k));
            }
            acc
        }))
    }

    /// Adjoint map: Tr[adjoint(X)·ρ] = Tr[X·apply(ρ)].
    ///
    /// Turns a quadrature projector into the loss POVM element, and an
    /// R-operator built from projectors into its POVM counterpart.
    pub fn adjoint(&self, x: &CMatrix) -> Result<CMatrix> {
        self.check_dim(x)?;
        let d = self.n_max + 1;
        let mut out = CMatrix::zeros(d, d);
        for n in 0..d {
            for m in 0..d {
                let top = self.k_max.min(self.n_max - m.max(n));
                let src = x[(m, n)];
                for k in 0..=top {
                    out[(m + k, n + k)] += src * (self.coefficient(m, k) * self.coefficient(n, k));
                }
            }
        }
        Ok(out)
    }

    fn check_dim(&self, m: &CMatrix) -> Result<()> {
        let d = self.n_max + 1;
        if m.nrows() != d || m.ncols() != d {
            return Err(TomoError::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        Ok(())
    }
}

/// E_η(θ,x) = Σ_{m,n,k} B_{m+k,m} B_{n+k,n} ⟨n|θ,x⟩⟨θ,x|m⟩ |n+k⟩⟨m+k|
pub fn loss_povm(
    point: QuadraturePoint,
    eta: f64,
    n_max: usize,
    k_max: usize,
) -> Result<MeasurementOperator> {
    let channel = LossChannel::new(eta, n_max, k_max)?;
    Ok(loss_povm_with(&channel, point))
}

pub fn loss_povm_with(channel: &LossChannel, point: QuadraturePoint) -> MeasurementOperator {
    let projector = ideal_projector(point, channel.n_max());
    if channel.eta() == 1.0 {
        return projector;
    }
    MeasurementOperator {
        matrix: channel
            .adjoint(&projector.matrix)
            .expect("projector built with the channel dimension"),
        kind: MeasurementKind::LossPovm {
            eta: channel.eta(),
            k_max: channel.k_max(),
        },
    }
}

/// Applies the loss channel to a density matrix.
///
/// The trace is preserved except for the weight dropped by a `k_max` below
/// `n_max` (see [`LossChannel::dropped_weight`]).
pub fn bernoulli_transform(rho: &DensityMatrix, eta: f64, k_max: usize) -> Result<DensityMatrix> {
    let channel = LossChannel::new(eta, rho.n_max(), k_max)?;
    Ok(DensityMatrix::from_raw(channel.apply(rho.matrix())?))
}
