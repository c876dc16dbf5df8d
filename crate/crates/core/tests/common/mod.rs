#![allow(dead_code)]

use hdtomo_core::{CMatrix, DensityMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Asymptotic Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS test of `samples` against `cdf`; returns (D, p).
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    (d, ks_p(d, n))
}

/// Two-sample KS test; returns (D, p).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na * nb) as f64 / (na + nb) as f64;
    (d, ks_p(d, n_eff))
}

/// Pearson χ² of `samples` against a density on `[lo, hi]` split into `bins`
/// equal-width bins; bins with expectation below 5 are pooled with the next.
/// Returns (χ², degrees of freedom, p).
pub fn chi_square(samples: &[f64], density: impl Fn(f64) -> f64, lo: f64, hi: f64, bins: usize) -> (f64, usize, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n = samples.len() as f64;
    let width = (hi - lo) / bins as f64;
    // Simpson probability of each bin, plus the two tails pooled into the end bins
    let mut probs: Vec<f64> = (0..bins)
        .map(|b| {
            let a = lo + b as f64 * width;
            let steps = 32;
            let h = width / steps as f64;
            let mut s = density(a) + density(a + width);
            for k in 1..steps {
                s += density(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        })
        .collect();
    let inside: f64 = probs.iter().sum();
    let tail = (1.0 - inside).max(0.0) / 2.0;
    probs[0] += tail;
    probs[bins - 1] += tail;
    let mut counts = vec![0.0; bins];
    for &x in samples {
        let b = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1.0;
    }
    let mut chi2 = 0.0;
    let mut cells = 0;
    let (mut obs, mut exp) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(&probs) {
        obs += c;
        exp += p * n;
        if exp >= 5.0 {
            chi2 += (obs - exp) * (obs - exp) / exp;
            cells += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 {
        chi2 += (obs - exp) * (obs - exp) / exp.max(1e-300);
        cells += 1;
    }
    let dof = cells - 1;
    let p = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi2);
    (chi2, dof, p)
}

/// Random full-rank state with photon-number weights decaying like e^{−n/scale}.
pub fn random_mixed_state(n_max: usize, scale: f64, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dim = n_max + 1;
    let g = CMatrix::from_fn(dim, dim, |i, _| {
        let decay = (-(i as f64) / scale).exp();
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * decay
    });
    DensityMatrix::normalized(&g * g.adjoint()).unwrap()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
