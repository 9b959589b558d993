//! Structured spectral-element infrastructure: meshes, Gauss-Lobatto nodal
//! bases, quadrature, fields and assembly kernels.

pub mod assemble;
pub mod gll;
pub mod mesh;
pub mod space;

pub use gll::{gauss_rule, gll_basis, gll_rule, legendre_table, NodalBasis, Rule1d};
pub use mesh::{MeshSpec, Rect};
pub use space::{Continuity, FeSpace, ScalarField, VectorField};
