//! Generic assembly of element-local bilinear forms into global sparse
//! matrices, plus the small dense element kernels shared by the solvers.
//!
//! Local scalar dofs are laid out as `i * (r+1) + j` with `i` the x index.
//! Multi-component problems use a block layout: dof `c * N + node` with `N`
//! the scalar dof count. Assembly iterates elements in lexicographic order,
//! so the result is bit-reproducible.

use super::space::FeSpace;
use crate::linalg::Csr;

/// Assemble a global sparse matrix from a per-element dense kernel.
///
/// `blocks` is the number of field components; the kernel must return a
/// symmetric `(blocks * n_loc)^2` row-major matrix whose local dof `b * n_loc
/// + loc` maps to global `b * N + global(loc)`.
pub fn assemble_bilinear<F>(space: &FeSpace, blocks: usize, kernel: F) -> Csr
where
    F: Fn(usize, usize) -> Vec<f64>,
{
    let n1 = space.n1();
    let n_loc = space.n_loc();
    let n_scalar = space.dof_count();
    let dim = blocks * n_scalar;
    let mut triplets = Vec::new();
    for ex in 0..space.mesh.nx {
        for ey in 0..space.mesh.ny {
            let ke = kernel(ex, ey);
            let ldim = blocks * n_loc;
            debug_assert_eq!(ke.len(), ldim * ldim);
            let gmap: Vec<u32> = (0..n_loc)
                .map(|l| space.global_index(ex, ey, l / n1, l % n1) as u32)
                .collect();
            for a in 0..ldim {
                let ga = (a / n_loc) * n_scalar + gmap[a % n_loc] as usize;
                for b in 0..ldim {
                    let v = ke[a * ldim + b];
                    if v != 0.0 {
                        let gb = (b / n_loc) * n_scalar + gmap[b % n_loc] as usize;
                        triplets.push((ga as u32, gb as u32, v));
                    }
                }
            }
        }
    }
    Csr::from_triplets(dim, triplets)
}

/// Quadrature weight of local point `(i, j)` on the physical element.
#[inline]
pub fn gll_weight(space: &FeSpace, i: usize, j: usize) -> f64 {
    space.weights[i] * space.weights[j] * 0.25 * space.mesh.hx * space.mesh.hy
}

/// All `n_loc` physical GLL weights of an element, local layout.
pub fn gll_weights(space: &FeSpace) -> Vec<f64> {
    let n1 = space.n1();
    let mut w = vec![0.0; n1 * n1];
    for i in 0..n1 {
        for j in 0..n1 {
            w[i * n1 + j] = gll_weight(space, i, j);
        }
    }
    w
}

/// Physical coordinates of the GLL points of element `(ex, ey)`, local layout.
pub fn gll_points(space: &FeSpace, ex: usize, ey: usize) -> Vec<(f64, f64)> {
    let n1 = space.n1();
    let (ox, oy) = space.mesh.element_origin(ex, ey);
    let mut pts = vec![(0.0, 0.0); n1 * n1];
    for i in 0..n1 {
        let x = ox + 0.5 * (space.basis.nodes[i] + 1.0) * space.mesh.hx;
        for j in 0..n1 {
            let y = oy + 0.5 * (space.basis.nodes[j] + 1.0) * space.mesh.hy;
            pts[i * n1 + j] = (x, y);
        }
    }
    pts
}

/// `out_dx`, `out_dy` = physical gradient of the local nodal values at the
/// GLL points (which coincide with the nodes).
pub fn local_gradient(
    space: &FeSpace,
    local: &[f64],
    out_dx: &mut [f64],
    out_dy: &mut [f64],
) {
    let n1 = space.n1();
    let d = &space.basis.diff;
    let sx = 2.0 / space.mesh.hx;
    let sy = 2.0 / space.mesh.hy;
    for p in 0..n1 {
        for q in 0..n1 {
            let mut gx = 0.0;
            for i in 0..n1 {
                gx += d[p * n1 + i] * local[i * n1 + q];
            }
            let mut gy = 0.0;
            for j in 0..n1 {
                gy += d[q * n1 + j] * local[p * n1 + j];
            }
            out_dx[p * n1 + q] = gx * sx;
            out_dy[p * n1 + q] = gy * sy;
        }
    }
}

/// Adjoint of [`local_gradient`]: accumulate `sum_q w[q] * d(phi_loc)/dx (q)`
/// into `out` for every local basis function.
pub fn local_gradient_adjoint(
    space: &FeSpace,
    wx: &[f64],
    wy: &[f64],
    out: &mut [f64],
) {
    let n1 = space.n1();
    let d = &space.basis.diff;
    let sx = 2.0 / space.mesh.hx;
    let sy = 2.0 / space.mesh.hy;
    for i in 0..n1 {
        for q in 0..n1 {
            let mut acc = 0.0;
            for p in 0..n1 {
                acc += d[p * n1 + i] * wx[p * n1 + q];
            }
            out[i * n1 + q] += acc * sx;
        }
    }
    for p in 0..n1 {
        for j in 0..n1 {
            let mut acc = 0.0;
            for q in 0..n1 {
                acc += d[q * n1 + j] * wy[p * n1 + q];
            }
            out[p * n1 + j] += acc * sy;
        }
    }
}

/// Element mass kernel under GLL collocation (diagonal).
pub fn mass_kernel(space: &FeSpace) -> impl Fn(usize, usize) -> Vec<f64> + '_ {
    let n_loc = space.n_loc();
    let w = gll_weights(space);
    move |_ex, _ey| {
        let mut ke = vec![0.0; n_loc * n_loc];
        for q in 0..n_loc {
            ke[q * n_loc + q] = w[q];
        }
        ke
    }
}

/// Element stiffness kernel (scalar Laplacian) under GLL collocation.
pub fn stiffness_kernel(space: &FeSpace) -> impl Fn(usize, usize) -> Vec<f64> + '_ {
    let n1 = space.n1();
    let n_loc = space.n_loc();
    let w = gll_weights(space);
    let d = space.basis.diff.clone();
    let sx = 2.0 / space.mesh.hx;
    let sy = 2.0 / space.mesh.hy;
    move |_ex, _ey| {
        let mut ke = vec![0.0; n_loc * n_loc];
        // grad(phi_{ij}) at point (p,q): dx = D[p][i] delta_{jq} sx, dy = delta_{ip} D[q][j] sy
        for a in 0..n_loc {
            let (ai, aj) = (a / n1, a % n1);
            for b in 0..n_loc {
                let (bi, bj) = (b / n1, b % n1);
                let mut acc = 0.0;
                if aj == bj {
                    for p in 0..n1 {
                        acc += w[p * n1 + aj] * d[p * n1 + ai] * d[p * n1 + bi] * sx * sx;
                    }
                }
                if ai == bi {
                    for q in 0..n1 {
                        acc += w[ai * n1 + q] * d[q * n1 + aj] * d[q * n1 + bj] * sy * sy;
                    }
                }
                ke[a * n_loc + b] = acc;
            }
        }
        ke
    }
}
