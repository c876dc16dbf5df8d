//! Wigner functions on rectangular phase-space grids.

use std::f64::consts::FRAC_2_PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Result, TomoError};

/// Largest imaginary residue tolerated when summing Fock kernels.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl WignerGridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        WignerGridSpec {
            x_min: -half_width,
            x_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nx: points,
            np: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(TomoError::param("grid", "needs at least 2 points per axis"));
        }
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.x_min, self.x_max) || !ok(self.p_min, self.p_max) {
            return Err(TomoError::param("grid", "axis ranges must be finite and increasing"));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (self.p_max - self.p_min) * j as f64 / (self.np - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum GridProvenance {
    FromDensityMatrix { n_max: usize },
    FromBackProjection { cutoff: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    /// `values[(i, j)]` is W(x_i, p_j).
    pub values: DMatrix<f64>,
    pub spec: WignerGridSpec,
    pub provenance: GridProvenance,
    pub warnings: Vec<String>,
}

impl WignerGrid {
    /// Fills a grid by evaluating `f(x, p)` at every node, in parallel over rows.
    pub(crate) fn evaluate<F>(spec: WignerGridSpec, provenance: GridProvenance, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<f64> + Sync,
    {
        spec.validate()?;
        let rows: Vec<Vec<f64>> = (0..spec.nx)
            .into_par_iter()
            .map(|i| (0..spec.np).map(|j| f(spec.x(i), spec.p(j))).collect())
            .collect::<Result<_>>()?;
        let values = DMatrix::from_fn(spec.nx, spec.np, |i, j| rows[i][j]);
        Ok(WignerGrid {
            values,
            spec,
            provenance,
            warnings: Vec::new(),
        })
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Trapezoidal ∫∫ W dx dp over the grid window.
    pub fn integral(&self) -> f64 {
        let (nx, np) = (self.spec.nx, self.spec.np);
        let mut acc = 0.0;
        for i in 0..nx {
            let wi = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
            for j in 0..np {
                let wj = if j == 0 || j == np - 1 { 0.5 } else { 1.0 };
                acc += wi * wj * self.values[(i, j)];
            }
        }
        acc * self.spec.dx() * self.spec.dp()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// W(x, p) = Σ_{m,n} ρ_{mn} W_{|m⟩⟨n|}(x, p) at a single point.
///
/// With α = x + ip and m = n + Δ ≥ n the Fock kernel is
/// `(2/π)(−1)ⁿ √(n!/m!) (2α*)^Δ e^{−2|α|²} L_n^{(Δ)}(4|α|²)`; the kernel of
/// |n⟩⟨m| is its complex conjugate.
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> Result<f64> {
    let dim = rho.dim();
    let alpha_conj = Complex64::new(x, -p);
    let r2 = x * x + p * p;
    let t = 4.0 * r2;
    let gauss = FRAC_2_PI * (-2.0 * r2).exp();
    let m = rho.matrix();

    let mut laguerre = vec![0.0; dim];
    // (2α*)^Δ / √(Δ!)
    let mut lead = Complex64::new(1.0, 0.0);
    let mut total = Complex64::new(0.0, 0.0);
    for delta in 0..dim {
        if delta > 0 {
            lead = lead * alpha_conj * (2.0 / (delta as f64).sqrt());
        }
        let len = dim - delta;
        let a = delta as f64;
        laguerre[0] = 1.0;
        if len > 1 {
            laguerre[1] = 1.0 + a - t;
        }
        for k in 1..len.saturating_sub(1) {
            let kf = k as f64;
            laguerre[k + 1] = ((2.0 * kf + 1.0 + a - t) * laguerre[k] - (kf + a) * laguerre[k - 1]) / (kf + 1.0);
        }
        // √(n!/(n+Δ)!)·√(Δ!) built up along n
        let mut ratio = 1.0;
        for n in 0..len {
            if n > 0 {
                ratio *= (n as f64 / (n + delta) as f64).sqrt();
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let kernel = lead * (sign * ratio * laguerre[n]);
            if delta == 0 {
                total += m[(n, n)] * kernel;
            } else {
                total += m[(n + delta, n)] * kernel + m[(n, n + delta)] * kernel.conj();
            }
        }
    }
    let w = total * gauss;
    if w.im.abs() > IMAG_RESIDUE_TOL * (1.0 + w.re.abs()) {
        return Err(TomoError::InvalidDensityMatrix(format!(
            "Wigner sum has imaginary residue {:e}",
            w.im
        )));
    }
    Ok(w.re)
}

pub fn wigner_from_rho(rho: &DensityMatrix, spec: &WignerGridSpec) -> Result<WignerGrid> {
    WignerGrid::evaluate(
        *spec,
        GridProvenance::FromDensityMatrix { n_max: rho.n_max() },
        |x, p| wigner_point(rho, x, p),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::coherent_amplitudes;
    use std::f64::consts::PI;

    #[test]
    fn vacuum_gaussian() {
        let rho = DensityMatrix::vacuum(4);
        assert!((wigner_point(&rho, 0.0, 0.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        for (x, p) in [(0.3f64, -0.2f64), (1.0, 0.5), (-0.7, 1.1)] {
            let expected = 2.0 / PI * (-2.0 * (x * x + p * p)).exp();
            assert!((wigner_point(&rho, x, p).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn single_photon_is_negative_at_origin() {
        let rho = DensityMatrix::fock(1, 3).unwrap();
        assert!((wigner_point(&rho, 0.0, 0.0).unwrap() + 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_alternating_sum() {
        for n_max in [5, 10, 31] {
            let rho = DensityMatrix::maximally_mixed(n_max);
            let expected = 2.0 / PI
                * (0..=n_max).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).sum::<f64>()
                / (n_max + 1) as f64;
            assert!((wigner_point(&rho, 0.0, 0.0).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn coherent_state_is_displaced_gaussian() {
        let alpha = Complex64::new(0.8, -0.5);
        let (amps, _) = coherent_amplitudes(alpha, 30);
        let rho = DensityMatrix::pure(&amps).unwrap();
        for (x, p) in [(0.8f64, -0.5f64), (0.0, 0.0), (1.5, 0.2)] {
            let d2 = (x - alpha.re).powi(2) + (p - alpha.im).powi(2);
            let expected = 2.0 / PI * (-2.0 * d2).exp();
            assert!((wigner_point(&rho, x, p).unwrap() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_bound_and_normalization() {
        let psi = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0)];
        let rho = DensityMatrix::pure(&psi).unwrap();
        let grid = wigner_from_rho(&rho, &WignerGridSpec::square(5.0, 101)).unwrap();
        assert!(grid.max_abs() <= 2.0 / PI + 1e-9);
        assert!((grid.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bad_grid_rejected() {
        let rho = DensityMatrix::vacuum(1);
        assert!(wigner_from_rho(&rho, &WignerGridSpec::square(1.0, 1)).is_err());
        let mut spec = WignerGridSpec::square(1.0, 5);
        spec.p_max = -2.0;
        assert!(wigner_from_rho(&rho, &spec).is_err());
    }
}
