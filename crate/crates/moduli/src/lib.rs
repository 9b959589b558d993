//! Reconstruction of the two spatially varying eigenvalues `(alpha, beta)` of
//! an isotropic elasticity tensor from two full-field, possibly noisy,
//! displacement measurements.
//!
//! The pipeline, end to end:
//!
//! 1. [`forward`] synthesizes measurement data by solving the time-harmonic
//!    momentum equation with prescribed Dirichlet data on a fine
//!    spectral-element grid, for closed-form moduli distributions.
//! 2. [`measure`] adds a deterministic, reproducible noise field and
//!    persists displacement fields to disk.
//! 3. [`differentiate`] regularizes: element-local L^2 projections onto
//!    coarse high-order broken spaces, differentiated analytically, give
//!    strain and hessian data that stay stable under noise.
//! 4. [`pointwise`] turns strains and hessians into the coefficients of a
//!    first-order gradient system for `(alpha, beta)` via an explicit block
//!    inversion.
//! 5. [`reconstruct`] solves the least-squares normal equations of that
//!    system on the conforming fine space (boundary values of the moduli
//!    assumed known), or integrates the system as an ODE along curves.
//! 6. [`experiment`] orchestrates the scenario presets, the mesh-size and
//!    noise-level sweeps, and CSV emission.
//!
//! Numerical conventions: 2D only, the unit square in the experiments,
//! fifth-order nodal elements on Gauss-Lobatto points, Gauss-Lobatto
//! collocation for finite element matrices and Gauss quadrature for local
//! projections and error norms.

pub mod error;
pub mod fem;
pub mod linalg;

pub mod differentiate;
pub mod pointwise;
pub mod reconstruct;
pub mod experiment;
pub mod forward;
pub mod measure;

pub use error::{Error, Result};
