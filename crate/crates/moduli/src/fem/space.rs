//! Finite element spaces on structured quad meshes and the fields living on
//! them.
//!
//! Two flavours are used:
//!
//! - conforming `Q_r` with Gauss-Lobatto nodes, a subspace of `H^1`; global
//!   degrees of freedom sit on the `(r nx + 1) x (r ny + 1)` node grid,
//!   numbered lexicographically (x fastest);
//! - broken `L_h^r`, element-wise polynomials with no continuity constraint,
//!   represented by Legendre modal coefficients (see `differentiate`).
//!
//! A conforming space of order 5 on a 120x120 mesh has 601^2 scalar degrees
//! of freedom.

use super::gll::{gll_basis, NodalBasis};
use super::mesh::MeshSpec;
use crate::error::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Continuity {
    /// Globally continuous nodal space, subspace of `H^1`.
    Conforming,
    /// Element-wise polynomials, subspace of `L^2` only.
    Broken,
}

/// Descriptor of a nodal finite element space.
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub mesh: MeshSpec,
    pub r: usize,
    pub continuity: Continuity,
    pub basis: NodalBasis,
    /// GLL quadrature weights matching `basis.nodes`.
    pub weights: Vec<f64>,
}

impl FeSpace {
    pub fn new(mesh: MeshSpec, r: usize, continuity: Continuity) -> Result<Self> {
        let (basis, weights) = gll_basis(r)?;
        Ok(FeSpace { mesh, r, continuity, basis, weights })
    }

    pub fn conforming(mesh: MeshSpec, r: usize) -> Result<Self> {
        Self::new(mesh, r, Continuity::Conforming)
    }

    /// Nodes per axis of the global grid.
    pub fn nodes_x(&self) -> usize {
        match self.continuity {
            Continuity::Conforming => self.r * self.mesh.nx + 1,
            Continuity::Broken => (self.r + 1) * self.mesh.nx,
        }
    }

    pub fn nodes_y(&self) -> usize {
        match self.continuity {
            Continuity::Conforming => self.r * self.mesh.ny + 1,
            Continuity::Broken => (self.r + 1) * self.mesh.ny,
        }
    }

    /// Scalar degrees of freedom.
    pub fn dof_count(&self) -> usize {
        self.nodes_x() * self.nodes_y()
    }

    /// Local nodes per element per axis.
    pub fn n1(&self) -> usize {
        self.r + 1
    }

    /// Local nodes per element.
    pub fn n_loc(&self) -> usize {
        self.n1() * self.n1()
    }

    /// Global index of local node `(i, j)` of element `(ex, ey)`.
    /// Lexicographic numbering, x fastest.
    #[inline]
    pub fn global_index(&self, ex: usize, ey: usize, i: usize, j: usize) -> usize {
        match self.continuity {
            Continuity::Conforming => {
                let gx = self.r * ex + i;
                let gy = self.r * ey + j;
                gy * self.nodes_x() + gx
            }
            Continuity::Broken => {
                let gx = self.n1() * ex + i;
                let gy = self.n1() * ey + j;
                gy * self.nodes_x() + gx
            }
        }
    }

    /// Physical coordinates of global node `(gx, gy)` (conforming numbering).
    pub fn node_coords(&self, gx: usize, gy: usize) -> (f64, f64) {
        debug_assert_eq!(self.continuity, Continuity::Conforming);
        let (ex, i) = if gx == self.r * self.mesh.nx {
            (self.mesh.nx - 1, self.r)
        } else {
            (gx / self.r, gx % self.r)
        };
        let (ey, j) = if gy == self.r * self.mesh.ny {
            (self.mesh.ny - 1, self.r)
        } else {
            (gy / self.r, gy % self.r)
        };
        let (ox, oy) = self.mesh.element_origin(ex, ey);
        (
            ox + 0.5 * (self.basis.nodes[i] + 1.0) * self.mesh.hx,
            oy + 0.5 * (self.basis.nodes[j] + 1.0) * self.mesh.hy,
        )
    }

    /// True if global node `(gx, gy)` lies on the domain boundary.
    #[inline]
    pub fn is_boundary_node(&self, gx: usize, gy: usize) -> bool {
        gx == 0 || gy == 0 || gx == self.nodes_x() - 1 || gy == self.nodes_y() - 1
    }

    /// Boundary mask over all scalar dofs, lexicographic order.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let (nx, ny) = (self.nodes_x(), self.nodes_y());
        let mut mask = vec![false; nx * ny];
        for gy in 0..ny {
            for gx in 0..nx {
                mask[gy * nx + gx] = self.is_boundary_node(gx, gy);
            }
        }
        mask
    }

    /// Nodal interpolation of a scalar function.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let (nx, ny) = (self.nodes_x(), self.nodes_y());
        let mut values = vec![0.0; nx * ny];
        for gy in 0..ny {
            for gx in 0..nx {
                let (x, y) = self.node_coords(gx, gy);
                values[gy * nx + gx] = f(x, y);
            }
        }
        ScalarField { space: self.clone(), values }
    }

    /// Nodal interpolation of a vector function.
    pub fn interpolate_vector(&self, f: impl Fn(f64, f64) -> (f64, f64)) -> VectorField {
        let fx = self.interpolate(|x, y| f(x, y).0);
        let fy = self.interpolate(|x, y| f(x, y).1);
        VectorField { space: self.clone(), x: fx.values, y: fy.values }
    }
}

/// Scalar coefficient field over a nodal space.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub space: FeSpace,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(space: &FeSpace) -> Self {
        ScalarField { space: space.clone(), values: vec![0.0; space.dof_count()] }
    }

    pub fn constant(space: &FeSpace, c: f64) -> Self {
        ScalarField { space: space.clone(), values: vec![c; space.dof_count()] }
    }

    /// Local nodal values of element `(ex, ey)`, row index i (x), column j (y).
    pub fn element_values(&self, ex: usize, ey: usize) -> Vec<f64> {
        let n1 = self.space.n1();
        let mut out = vec![0.0; n1 * n1];
        for i in 0..n1 {
            for j in 0..n1 {
                out[i * n1 + j] = self.values[self.space.global_index(ex, ey, i, j)];
            }
        }
        out
    }

    /// Evaluate the field (and optionally its gradient) at a point.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let (v, _, _) = self.eval_with_grad(x, y)?;
        Ok(v)
    }

    pub fn eval_with_grad(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let mesh = &self.space.mesh;
        let (ex, ey) = mesh.element_of(x, y)?;
        let (xi, eta) = mesh.to_reference(ex, ey, x, y);
        let (bx, dbx) = self.space.basis.values_and_derivs(xi);
        let (by, dby) = self.space.basis.values_and_derivs(eta);
        let n1 = self.space.n1();
        let local = self.element_values(ex, ey);
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for i in 0..n1 {
            for j in 0..n1 {
                let c = local[i * n1 + j];
                v += c * bx[i] * by[j];
                gx += c * dbx[i] * by[j];
                gy += c * bx[i] * dby[j];
            }
        }
        Ok((v, gx * 2.0 / mesh.hx, gy * 2.0 / mesh.hy))
    }

    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }
}

/// Two-component displacement field over a nodal space, stored as separate
/// component vectors in the same lexicographic node order.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub space: FeSpace,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(space: &FeSpace) -> Self {
        let n = space.dof_count();
        VectorField { space: space.clone(), x: vec![0.0; n], y: vec![0.0; n] }
    }

    pub fn component(&self, c: usize) -> &[f64] {
        match c {
            0 => &self.x,
            _ => &self.y,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let sx = ScalarField { space: self.space.clone(), values: self.x.clone() };
        let sy = ScalarField { space: self.space.clone(), values: self.y.clone() };
        Ok((sx.eval(x, y)?, sy.eval(x, y)?))
    }

    /// Max-abs over all nodes and components.
    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
