//! Density matrices in the truncated Fock basis.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, TomoError};

pub type CMatrix = DMatrix<Complex64>;

/// Elementwise Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unit-trace tolerance.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const EIGEN_TOL: f64 = 1e-10;

/// A Hermitian, unit-trace, positive-semidefinite matrix on Fock states `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

/// Measured deviations from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl PhysicalityReport {
    pub fn is_physical(&self) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error <= HERMITIAN_TOL
            && self.min_eigenvalue >= -EIGEN_TOL
    }
}

impl DensityMatrix {
    /// Validates `matrix` against all invariants without modifying it.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(TomoError::InvalidDensityMatrix(format!(
                "shape {}x{} is not a non-empty square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TomoError::NonFinite("density matrix"));
        }
        let rho = DensityMatrix { matrix };
        let report = rho.physicality();
        if !report.is_physical() {
            return Err(TomoError::InvalidDensityMatrix(format!(
                "trace error {:e}, hermiticity error {:e}, min eigenvalue {:e}",
                report.trace_error, report.hermiticity_error, report.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// Hermitizes and trace-normalizes `matrix`, then validates positivity.
    pub fn normalized(matrix: CMatrix) -> Result<Self> {
        let mut m = hermitian_part(&matrix);
        let tr = m.trace().re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(TomoError::InvalidDensityMatrix(format!(
                "trace {tr:e} cannot be normalized"
            )));
        }
        m /= Complex64::new(tr, 0.0);
        DensityMatrix::new(m)
    }

    /// Used by the iteration, whose output is physical by construction.
    pub(crate) fn from_raw(matrix: CMatrix) -> Self {
        DensityMatrix { matrix }
    }

    /// N[1]: the maximally mixed state.
    pub fn maximally_mixed(n_max: usize) -> Self {
        let d = n_max + 1;
        let w = Complex64::new(1.0 / d as f64, 0.0);
        DensityMatrix {
            matrix: CMatrix::from_diagonal_element(d, d, w),
        }
    }

    pub fn fock(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(TomoError::param(
                "n",
                format!("Fock index {n} exceeds n_max = {n_max}"),
            ));
        }
        let d = n_max + 1;
        let mut matrix = CMatrix::zeros(d, d);
        matrix[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { matrix })
    }

    pub fn vacuum(n_max: usize) -> Self {
        DensityMatrix::fock(0, n_max).expect("vacuum is always representable")
    }

    /// |ψ⟩⟨ψ| for the (renormalized) amplitude vector `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if psi.is_empty() || !(norm2 > 0.0 && norm2.is_finite()) {
            return Err(TomoError::param("psi", "amplitudes must have positive finite norm"));
        }
        let d = psi.len();
        let matrix = CMatrix::from_fn(d, d, |m, n| psi[m] * psi[n].conj() / norm2);
        Ok(DensityMatrix { matrix })
    }

    /// Mixture Σ w_k ρ_k with non-negative weights summing to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| TomoError::param("parts", "empty mixture"))?;
        let d = first.1.dim();
        let mut matrix = CMatrix::zeros(d, d);
        for (w, rho) in parts {
            if rho.dim() != d {
                return Err(TomoError::DimensionMismatch {
                    expected: d,
                    found: rho.dim(),
                });
            }
            if *w < 0.0 {
                return Err(TomoError::param("weight", "mixture weights must be non-negative"));
            }
            matrix += &rho.matrix * Complex64::new(*w, 0.0);
        }
        DensityMatrix::normalized(matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// ⟨m|ρ|n⟩
    pub fn element(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn physicality(&self) -> PhysicalityReport {
        PhysicalityReport {
            trace_error: (self.trace() - 1.0).abs(),
            hermiticity_error: self.hermiticity_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.matrix[(n, n)].re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// ⟨ψ|ρ|ψ⟩ for a normalized amplitude vector of the same dimension.
    pub fn fidelity_with_pure(&self, psi: &[Complex64]) -> Result<f64> {
        if psi.len() != self.dim() {
            return Err(TomoError::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..self.dim() {
            for n in 0..self.dim() {
                acc += psi[m].conj() * self.matrix[(m, n)] * psi[n];
            }
        }
        Ok(acc.re)
    }

    /// e^{−iθn̂} ρ e^{iθn̂}: rotates the phase-space picture by θ.
    pub fn rotated(&self, theta: f64) -> Self {
        let d = self.dim();
        let matrix = CMatrix::from_fn(d, d, |m, n| {
            self.matrix[(m, n)] * Complex64::from_polar(1.0, -theta * (m as f64 - n as f64))
        });
        DensityMatrix { matrix }
    }

    /// Trace norm ‖ρ − σ‖₁ (sum of absolute eigenvalues of the difference).
    pub fn trace_norm_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(TomoError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        Ok(hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum())
    }
}

/// (M + M†)/2
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Fock amplitudes e^{−|α|²/2} αⁿ/√n! for n = 0..=n_max, plus the weight lost above n_max.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> (Vec<Complex64>, f64) {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    (amps, (1.0 - kept).max(0.0))
}
