//! Maximum-likelihood quantum state reconstruction from balanced homodyne data.
//!
//! The density matrix is estimated in a truncated Fock basis by iterating
//! `ρ ← N[R(ρ) ρ R(ρ)]` with `R(ρ) = Σ_i E_i / pr_i`, where `E_i` is either the
//! projector onto the measured quadrature eigenstate or, for detectors of
//! efficiency η < 1, the corresponding loss POVM element. Around the estimator
//! sit a filtered back-projection baseline, Wigner-function evaluation, a
//! homodyne data simulator and a parametric bootstrap for uncertainties.
//!
//! All quadratures use the `[x̂, p̂] = i/2` convention.

pub mod bootstrap;
pub mod dataset;
pub mod density;
pub mod error;
pub mod fock;
pub mod io;
pub mod maxlik;
pub mod measurement;
pub mod radon;
pub mod reduce;
pub mod simulate;
pub mod wigner;

pub use bootstrap::{bootstrap_uncertainty, BootstrapOptions, BootstrapResult};
pub use dataset::{BinnedHistogram, BinningSpec, QuadratureDataset, QuadratureRecord};
pub use density::{CMatrix, DensityMatrix, PhysicalityReport};
pub use error::{ErrorClass, Result, TomoError};
pub use fock::{
    bernoulli_coefficient, bernoulli_transform, fock_overlap, ideal_projector, loss_povm,
    LossChannel, MeasurementKind, MeasurementOperator, OverlapVector, QuadraturePoint,
};
pub use maxlik::{
    iterate_once, log_likelihood, probability, r_operator, r_operator_binned, reconstruct,
    reconstruct_set, Diagnostics, ReconstructionConfig, ReconstructionInput, ReconstructionResult,
    ResolvedConfig, StopReason,
};
pub use measurement::MeasurementSet;
pub use radon::{backproject, backproject_point, BackProjectionConfig};
pub use simulate::{sample_quadratures, PhaseSchedule, SimulationPlan, StateSpec};
pub use wigner::{wigner_from_rho, GridProvenance, WignerGrid, WignerGridSpec};
