//! Orthogonal-series (projection) estimation of the mixing density of a
//! continuous mixture `π_f(x) = ∫ f(t) π_t(x) dt`.
//!
//! The mixing density is expanded in an orthonormal system `ψ_k = T⁻¹ p_k`,
//! where `p_k` are normalized Legendre polynomials on a target interval and
//! `T` is a family-specific isometry carrying the moment functions
//! `φ_k(t) = π_t(g_k)` onto monomials. Coefficients are estimated by empirical
//! means of `Σ_j Q_{k,j} g_j(X_i)`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! runner and the command line live in the `mixdens` crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod density;
pub mod error;
pub mod estimator;
pub mod ext;
pub mod family;
pub mod gamma_table;
pub mod interval;
pub mod legendre;
pub mod quadrature;
pub mod simulation;
pub mod smoothness;
pub mod stats;

pub use density::{DensityShape, MixingDensity};
pub use error::{Error, Result};
pub use estimator::{
    estimate_coefficients, postprocess_density, project_exact, select_m, ExactProjection,
    MomentAccumulator, PostProcess, ProjectionEstimate, Regime, SelectionRule,
};
pub use family::{FamilyKind, MixtureFamily, ScaleKernel, ScaleShape, VarianceCondition};
pub use gamma_table::{gamma_coeff_table, GammaCoeffTable};
pub use interval::Interval;
pub use legendre::{build_basis, gauss_nodes, LegendreBasis, DEFAULT_PRECISION_DIGITS};
pub use smoothness::{
    certify_class, certify_query, symmetric_difference, weighted_modulus, ClassCertificate,
    ModulusQuery, Verdict, Violation,
};
