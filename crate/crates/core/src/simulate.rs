//! Synthetic homodyne data.
//!
//! Quadrature values are drawn by inverse-CDF lookup on a tabulated marginal
//! `pr_θ(x) = Tr[Π(θ,x) ρ_η]`, where ρ_η is the state after the detector's
//! Bernoulli loss. Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`
//! seeded with `seed_from_u64`), which gives identical streams on every platform.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::QuadratureDataset;
use crate::density::{coherent_amplitudes, CMatrix, DensityMatrix};
use crate::error::{Result, TomoError};
use crate::fock::{hermite_functions_into, validate_eta, LossChannel, QuadraturePoint};

/// Largest Fock-space tail a coherent state may lose to truncation.
pub const TAIL_LIMIT: f64 = 1e-6;
/// Nodes in each tabulated marginal.
pub const CDF_POINTS: usize = 4096;
/// Width of the phase buckets sharing one marginal under uniform phases.
pub const PHASE_BUCKET: f64 = PI / 512.0;
/// Phase quantum for caching marginals of a fixed phase set.
pub const PHASE_QUANTUM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Vacuum,
    Fock(usize),
    Coherent(Complex64),
    /// c0|0⟩ + c1|1⟩
    Superposition01 { c0: Complex64, c1: Complex64 },
    ExplicitMatrix(DensityMatrix),
}

/// A test ensemble together with its Fock truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    kind: StateKind,
    n_max: usize,
    rho: DensityMatrix,
}

impl StateSpec {
    pub fn new(kind: StateKind, n_max: usize) -> Result<Self> {
        let rho = match &kind {
            StateKind::Vacuum => DensityMatrix::vacuum(n_max),
            StateKind::Fock(n) => DensityMatrix::fock(*n, n_max)?,
            StateKind::Coherent(alpha) => {
                if !(alpha.re.is_finite() && alpha.im.is_finite()) {
                    return Err(TomoError::NonFinite("coherent amplitude"));
                }
                let (amps, tail) = coherent_amplitudes(*alpha, n_max);
                if tail >= TAIL_LIMIT {
                    return Err(TomoError::TruncationTail {
                        tail,
                        n_max,
                        limit: TAIL_LIMIT,
                    });
                }
                DensityMatrix::pure(&amps)?
            }
            StateKind::Superposition01 { c0, c1 } => {
                let norm = c0.norm_sqr() + c1.norm_sqr();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(TomoError::param(
                        "superposition",
                        format!("|c0|² + |c1|² = {norm}, expected 1"),
                    ));
                }
                if n_max < 1 {
                    return Err(TomoError::param("n_max", "superposition needs n_max ≥ 1"));
                }
                let mut psi = vec![Complex64::new(0.0, 0.0); n_max + 1];
                psi[0] = *c0;
                psi[1] = *c1;
                DensityMatrix::pure(&psi)?
            }
            StateKind::ExplicitMatrix(rho) => {
                if rho.n_max() != n_max {
                    return Err(TomoError::DimensionMismatch {
                        expected: n_max + 1,
                        found: rho.dim(),
                    });
                }
                rho.clone()
            }
        };
        Ok(StateSpec { kind, n_max, rho })
    }

    pub fn vacuum(n_max: usize) -> Self {
        StateSpec::new(StateKind::Vacuum, n_max).expect("vacuum is always valid")
    }

    pub fn explicit(rho: DensityMatrix) -> Self {
        let n_max = rho.n_max();
        StateSpec {
            kind: StateKind::ExplicitMatrix(rho.clone()),
            n_max,
            rho,
        }
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn density_matrix(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            StateKind::Vacuum => "vacuum".into(),
            StateKind::Fock(n) => format!("fock({n})"),
            StateKind::Coherent(a) => format!("coherent({}, {})", a.re, a.im),
            StateKind::Superposition01 { c0, c1 } => {
                format!("superposition({}, {}; {}, {})", c0.re, c0.im, c1.re, c1.im)
            }
            StateKind::ExplicitMatrix(_) => "explicit density matrix".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSchedule {
    /// Independent phases, uniform on `[0, 2π)`.
    UniformRandom,
    /// Sample `i` uses phase `set[i % set.len()]`.
    FixedSet(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub n_samples: usize,
    pub phase_schedule: PhaseSchedule,
    pub eta: f64,
    pub seed: u64,
}

impl SimulationPlan {
    pub fn uniform(n_samples: usize, eta: f64, seed: u64) -> Self {
        SimulationPlan {
            n_samples,
            phase_schedule: PhaseSchedule::UniformRandom,
            eta,
            seed,
        }
    }

    /// `count` equally spaced phases over `[0, π)`, cycled.
    pub fn equally_spaced(count: usize, n_samples: usize, eta: f64, seed: u64) -> Self {
        let set = (0..count).map(|k| PI * k as f64 / count as f64).collect();
        SimulationPlan {
            n_samples,
            phase_schedule: PhaseSchedule::FixedSet(set),
            eta,
            seed,
        }
    }

    /// Re-measures the phases of `dataset` one for one.
    pub fn replaying(dataset: &QuadratureDataset, seed: u64) -> Self {
        SimulationPlan {
            n_samples: dataset.len(),
            phase_schedule: PhaseSchedule::FixedSet(dataset.phases()),
            eta: dataset.eta(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(TomoError::param("n_samples", "must be at least 1"));
        }
        validate_eta(self.eta)?;
        if let PhaseSchedule::FixedSet(set) = &self.phase_schedule {
            if set.is_empty() {
                return Err(TomoError::param("phase_schedule", "fixed phase set is empty"));
            }
            if set.iter().any(|t| !t.is_finite()) {
                return Err(TomoError::NonFinite("phase set"));
            }
        }
        Ok(())
    }
}

/// Piecewise-linear inverse CDF on the sampler's x grid.
#[derive(Debug, Clone)]
struct Cdf {
    cumulative: Vec<f64>,
}

/// Draws quadrature values from the marginals of a fixed state.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    xs: Vec<f64>,
    // harmonics[Δ][j] = (Δ > 0 ? 2 : 1) Σ_n ψ_{n+Δ}(x_j) ψ_n(x_j) ρ_{n,n+Δ}
    harmonics: Vec<Vec<Complex64>>,
    fixed: HashMap<i64, Cdf>,
    buckets: HashMap<usize, Cdf>,
}

impl QuadratureSampler {
    /// Tabulates marginals of `rho` (already including any detector loss).
    pub fn new(rho: &DensityMatrix) -> Self {
        let dim = rho.dim();
        let m = rho.matrix();
        let half_width = 6.0 * max_quadrature_rms(m).max(0.5);
        let xs: Vec<f64> = (0..CDF_POINTS)
            .map(|j| -half_width + 2.0 * half_width * j as f64 / (CDF_POINTS - 1) as f64)
            .collect();
        let mut harmonics = vec![vec![Complex64::new(0.0, 0.0); CDF_POINTS]; dim];
        let mut psi = vec![0.0; dim];
        for (j, &x) in xs.iter().enumerate() {
            hermite_functions_into(x, &mut psi);
            for (delta, row) in harmonics.iter_mut().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for n in 0..dim - delta {
                    s += m[(n, n + delta)] * (psi[n + delta] * psi[n]);
                }
                row[j] = if delta == 0 { s } else { s * 2.0 };
            }
        }
        QuadratureSampler {
            xs,
            harmonics,
            fixed: HashMap::new(),
            buckets: HashMap::new(),
        }
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// pr_θ(x_j) on the grid.
    pub fn density_on_grid(&self, theta: f64) -> Vec<f64> {
        let phases: Vec<Complex64> = (0..self.harmonics.len())
            .map(|d| Complex64::from_polar(1.0, d as f64 * theta))
            .collect();
        (0..self.xs.len())
            .map(|j| {
                self.harmonics
                    .iter()
                    .zip(&phases)
                    .map(|(h, e)| (e * h[j]).re)
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect()
    }

    fn build_cdf(&self, theta: f64) -> Cdf {
        let density = self.density_on_grid(theta);
        let h = self.xs[1] - self.xs[0];
        let mut cumulative = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cumulative.push(acc);
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Cdf { cumulative }
    }

    fn invert(&self, cdf: &Cdf, u: f64) -> f64 {
        let c = &cdf.cumulative;
        // first node with cumulative > u
        let hi = c.partition_point(|&v| v <= u).clamp(1, c.len() - 1);
        let lo = hi - 1;
        let span = c[hi] - c[lo];
        let frac = if span > 0.0 { (u - c[lo]) / span } else { 0.5 };
        self.xs[lo] + frac * (self.xs[hi] - self.xs[lo])
    }

    /// Draws x at an exactly known phase (cached per quantized phase).
    pub fn draw_fixed(&mut self, theta: f64, u: f64) -> f64 {
        let key = (theta / PHASE_QUANTUM).round() as i64;
        if !self.fixed.contains_key(&key) {
            let cdf = self.build_cdf(theta);
            self.fixed.insert(key, cdf);
        }
        self.invert(&self.fixed[&key], u)
    }

    /// Draws x at a random phase, using the marginal at the centre of its bucket.
    pub fn draw_bucketed(&mut self, theta: f64, u: f64) -> f64 {
        let bucket = (theta / PHASE_BUCKET) as usize;
        if !self.buckets.contains_key(&bucket) {
            let centre = (bucket as f64 + 0.5) * PHASE_BUCKET;
            let cdf = self.build_cdf(centre);
            self.buckets.insert(bucket, cdf);
        }
        self.invert(&self.buckets[&bucket], u)
    }
}

/// max_θ ⟨X_θ²⟩^{1/2} = ((2|⟨a²⟩| + 2⟨n⟩ + 1) / 4)^{1/2}
fn max_quadrature_rms(m: &CMatrix) -> f64 {
    let dim = m.nrows();
    let mean_n: f64 = (0..dim).map(|n| n as f64 * m[(n, n)].re).sum();
    let a2: Complex64 = (2..dim)
        .map(|k| m[(k, k - 2)] * ((k * (k - 1)) as f64).sqrt())
        .sum();
    ((2.0 * a2.norm() + 2.0 * mean_n + 1.0) / 4.0).sqrt()
}

pub fn sample_quadratures(state: &StateSpec, plan: &SimulationPlan) -> Result<QuadratureDataset> {
    plan.validate()?;
    let rho = state.density_matrix();
    let degraded = if plan.eta < 1.0 {
        let channel = LossChannel::new(plan.eta, rho.n_max(), rho.n_max())?;
        DensityMatrix::from_raw(channel.apply(rho.matrix())?)
    } else {
        rho.clone()
    };
    let mut sampler = QuadratureSampler::new(&degraded);
    let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
    let mut records = Vec::with_capacity(plan.n_samples);
    for i in 0..plan.n_samples {
        let (theta, x) = match &plan.phase_schedule {
            PhaseSchedule::UniformRandom => {
                let theta = rng.random::<f64>() * TAU;
                let u: f64 = rng.random();
                (theta, sampler.draw_bucketed(theta, u))
            }
            PhaseSchedule::FixedSet(set) => {
                let theta = crate::fock::reduce_phase(set[i % set.len()]);
                let u: f64 = rng.random();
                (theta, sampler.draw_fixed(theta, u))
            }
        };
        records.push(QuadraturePoint::new(theta, x)?);
    }
    QuadratureDataset::new(
        records,
        plan.eta,
        format!(
            "simulated {} (n_max = {}), eta = {}, seed = {}",
            state.describe(),
            state.n_max(),
            plan.eta,
            plan.seed
        ),
    )
}
