//! Boundary-element tools for δ-interactions supported on closed surfaces:
//! critical couplings, capacities, equilibrium charge densities, bound states
//! and the small-deformation series for radially perturbed spheres.
//!
//! Discrete conventions used throughout: densities are piecewise constant on
//! flat panels and collocated at panel centroids. The single-layer matrix
//! `G_ij = (1/4π) ∫_{T_j} e^{-κ|c_i - y|} / |c_i - y| dA(y)` acts on density
//! values; areas live inside the matrix. Its symmetric form in `L²(dν)` is
//! `Ĝ = A^{1/2} G A^{-1/2}`, with the area-weighted part `A G` replaced by
//! its symmetric half.

pub mod bs_operator;
pub mod capacity;
pub mod error;
pub mod extrapolate;
pub mod geometry;
pub mod harmonics;
pub mod perturbation;
pub mod quadrature;
pub mod singular;
pub mod spectrum;
pub mod study;

pub use error::{Error, Result};
pub use bs_operator::{
    critical_strength, gamma_inf_norm, lambda_max, BsAssembler, BsOperator, CriticalityReport, DensityWeight,
};
pub use capacity::{gauss_energy, solve_equilibrium, spheroid_capacity, verify_capacity_bounds, CapacityResult};
pub use geometry::{build_mesh, surface_radius, SurfaceMesh, SurfaceSpec};
pub use harmonics::HarmonicCoeffs;
pub use perturbation::{fourth_order_n1, predict, series_from_profile, PerturbationSeries};
pub use spectrum::{certificate, classify, ground_state, SpectralVerdict};
