//! Regularizing differentiation of noisy displacement fields.
//!
//! Each component of a measurement is projected, element by element, onto a
//! broken polynomial space `L_h^r` living on a coarser mesh whose size is an
//! integer multiple `k` of the fine size (`k` divides the fine element
//! count, so the coarse mesh is exactly nested). The projected polynomials
//! are then differentiated analytically and sampled at the quadrature points
//! of the fine space. Derivatives never touch the raw data: all
//! amplification of noise is controlled by the coarse mesh size.
//!
//! The broken-space basis is the tensor Legendre basis scaled to the coarse
//! element, so the local mass matrix is diagonal, and the pairing integrals
//! are computed exactly with a Gauss rule per fine sub-element.

use crate::error::{Error, Result};
use crate::fem::gll::{gauss_rule, legendre_table};
use crate::fem::space::{FeSpace, VectorField};

/// Plan for projecting fine-space fields onto a coarse broken space.
#[derive(Clone, Debug)]
pub struct ProjectionPlan {
    pub fine: FeSpace,
    /// Coarsening factor; the coarse mesh has `nx / k` by `ny / k` elements.
    pub k: usize,
    /// Polynomial order of the broken space.
    pub r: usize,
    /// Fine-basis values at the Gauss points, `[gauss][node]`.
    basis_at_gauss: Vec<f64>,
    gauss_nodes: Vec<f64>,
    gauss_weights: Vec<f64>,
    /// Per sub-cell index `0..k`: Legendre values at the Gauss points in
    /// coarse reference coordinates, `[mode][gauss]`.
    leg_gauss: Vec<Vec<Vec<f64>>>,
    /// Per sub-cell index: Legendre (value, d1, d2) at the fine GLL points in
    /// coarse reference coordinates, `[mode][gll]`, unscaled.
    leg_gll: Vec<[Vec<f64>; 3]>,
}

impl ProjectionPlan {
    pub fn new(fine: &FeSpace, k: usize, r: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPlan("coarsening factor must be >= 1".into()));
        }
        if fine.mesh.nx % k != 0 || fine.mesh.ny % k != 0 {
            return Err(Error::InvalidPlan(format!(
                "coarsening factor {k} must divide the fine grid {}x{}",
                fine.mesh.nx, fine.mesh.ny
            )));
        }
        let n1 = fine.n1();
        let gauss = gauss_rule(fine.r + 1);
        let mut basis_at_gauss = vec![0.0; gauss.nodes.len() * n1];
        for (p, &xg) in gauss.nodes.iter().enumerate() {
            let vals = fine.basis.values(xg);
            basis_at_gauss[p * n1..(p + 1) * n1].copy_from_slice(&vals);
        }
        let to_coarse = |ix: usize, xi: f64| (2.0 * ix as f64 + (xi + 1.0)) / k as f64 - 1.0;
        let mut leg_gauss = Vec::with_capacity(k);
        let mut leg_gll = Vec::with_capacity(k);
        for ix in 0..k {
            let mut lg = vec![vec![0.0; gauss.nodes.len()]; r + 1];
            for (p, &xg) in gauss.nodes.iter().enumerate() {
                let (vals, _, _) = legendre_table(r, to_coarse(ix, xg));
                for m in 0..=r {
                    lg[m][p] = vals[m];
                }
            }
            leg_gauss.push(lg);
            // leg_gll[ix][deriv][m * n1 + p]
            let mut v0 = vec![0.0; (r + 1) * n1];
            let mut v1 = vec![0.0; (r + 1) * n1];
            let mut v2 = vec![0.0; (r + 1) * n1];
            for (p, &xn) in fine.basis.nodes.iter().enumerate() {
                let (a, b, c) = legendre_table(r, to_coarse(ix, xn));
                for m in 0..=r {
                    v0[m * n1 + p] = a[m];
                    v1[m * n1 + p] = b[m];
                    v2[m * n1 + p] = c[m];
                }
            }
            leg_gll.push([v0, v1, v2]);
        }
        Ok(ProjectionPlan {
            fine: fine.clone(),
            k,
            r,
            basis_at_gauss,
            gauss_nodes: gauss.nodes,
            gauss_weights: gauss.weights,
            leg_gauss,
            leg_gll,
        })
    }

    pub fn coarse_nx(&self) -> usize {
        self.fine.mesh.nx / self.k
    }

    pub fn coarse_ny(&self) -> usize {
        self.fine.mesh.ny / self.k
    }

    /// Coarse element size per axis.
    pub fn coarse_h(&self) -> (f64, f64) {
        (self.k as f64 * self.fine.mesh.hx, self.k as f64 * self.fine.mesh.hy)
    }

    fn modes(&self) -> usize {
        self.r + 1
    }
}

/// Element-wise polynomial field: tensor Legendre coefficients per coarse
/// element, `coeffs[ce * modes^2 + m * modes + n]` with `ce = cex * coarse_ny
/// + cey`.
#[derive(Clone, Debug)]
pub struct BrokenField {
    pub plan: ProjectionPlan,
    pub coeffs: Vec<f64>,
}

impl BrokenField {
    /// Evaluate a mixed derivative at a point; derivative orders up to 2.
    pub fn eval_deriv(&self, x: f64, y: f64, dx: usize, dy: usize) -> Result<f64> {
        let plan = &self.plan;
        let mesh = &plan.fine.mesh;
        if !mesh.domain.contains(x, y) {
            return Err(Error::OutOfDomain { x, y });
        }
        let (hx, hy) = plan.coarse_h();
        let cex = (((x - mesh.domain.x0) / hx).floor() as isize)
            .clamp(0, plan.coarse_nx() as isize - 1) as usize;
        let cey = (((y - mesh.domain.y0) / hy).floor() as isize)
            .clamp(0, plan.coarse_ny() as isize - 1) as usize;
        let xi = 2.0 * (x - mesh.domain.x0 - cex as f64 * hx) / hx - 1.0;
        let eta = 2.0 * (y - mesh.domain.y0 - cey as f64 * hy) / hy - 1.0;
        let tx = legendre_table(plan.r, xi);
        let ty = legendre_table(plan.r, eta);
        let px = [&tx.0, &tx.1, &tx.2][dx];
        let py = [&ty.0, &ty.1, &ty.2][dy];
        let modes = plan.modes();
        let ce = cex * plan.coarse_ny() + cey;
        let c = &self.coeffs[ce * modes * modes..(ce + 1) * modes * modes];
        let mut acc = 0.0;
        for m in 0..modes {
            let mut row = 0.0;
            for n in 0..modes {
                row += c[m * modes + n] * py[n];
            }
            acc += px[m] * row;
        }
        let scale = (2.0 / hx).powi(dx as i32) * (2.0 / hy).powi(dy as i32);
        Ok(acc * scale)
    }

    /// Tabulate a mixed derivative at the GLL points of fine element
    /// `(ex, ey)` into `out` (local layout `i * n1 + j`).
    pub fn tabulate_deriv(&self, ex: usize, ey: usize, dx: usize, dy: usize, out: &mut [f64]) {
        let plan = &self.plan;
        let n1 = plan.fine.n1();
        let modes = plan.modes();
        let k = plan.k;
        let (cex, ix) = (ex / k, ex % k);
        let (cey, iy) = (ey / k, ey % k);
        let (hx, hy) = plan.coarse_h();
        let px = &plan.leg_gll[ix][dx];
        let py = &plan.leg_gll[iy][dy];
        let ce = cex * plan.coarse_ny() + cey;
        let c = &self.coeffs[ce * modes * modes..(ce + 1) * modes * modes];
        let scale = (2.0 / hx).powi(dx as i32) * (2.0 / hy).powi(dy as i32);
        for p in 0..n1 {
            for q in 0..n1 {
                let mut acc = 0.0;
                for m in 0..modes {
                    let pm = px[m * n1 + p];
                    if pm == 0.0 {
                        continue;
                    }
                    let mut row = 0.0;
                    for n in 0..modes {
                        row += c[m * modes + n] * py[n * n1 + q];
                    }
                    acc += pm * row;
                }
                out[p * n1 + q] = acc * scale;
            }
        }
    }
}

/// Local orthogonal L^2 projection of a scalar fine-space field onto the
/// coarse broken space of the plan.
///
/// Per coarse element the result is the unique polynomial matching the
/// source against all tensor Legendre test functions; with the diagonal
/// Legendre mass this reduces to weighted Gauss sums over the nested fine
/// elements, which integrate the pairings exactly.
pub fn l2_project(values: &[f64], plan: &ProjectionPlan) -> BrokenField {
    let fine = plan.fine.clone();
    let n1 = fine.n1();
    let ng = plan.gauss_nodes.len();
    let mut local = vec![0.0; n1 * n1];
    let mut tmp = vec![0.0; ng * n1];
    project_impl(plan, move |ex, ey, plan, at_gauss| {
        for i in 0..n1 {
            for j in 0..n1 {
                local[i * n1 + j] = values[fine.global_index(ex, ey, i, j)];
            }
        }
        // values at the Gauss grid: B * local * B^T
        for p in 0..ng {
            for j in 0..n1 {
                let mut a = 0.0;
                for i in 0..n1 {
                    a += plan.basis_at_gauss[p * n1 + i] * local[i * n1 + j];
                }
                tmp[p * n1 + j] = a;
            }
        }
        for p in 0..ng {
            for q in 0..ng {
                let mut a = 0.0;
                for j in 0..n1 {
                    a += tmp[p * n1 + j] * plan.basis_at_gauss[q * n1 + j];
                }
                at_gauss[p * ng + q] = a;
            }
        }
    })
}

/// Project an arbitrary function, sampled at the Gauss points of each fine
/// element. The pairings are exact only up to the quadrature degree, which
/// suffices for broken-space members and for the pipeline's fields.
pub fn l2_project_fn(f: impl Fn(f64, f64) -> f64, plan: &ProjectionPlan) -> BrokenField {
    let fine = plan.fine.clone();
    let ng = plan.gauss_nodes.len();
    let nodes = plan.gauss_nodes.clone();
    project_impl(plan, move |ex, ey, _plan, at_gauss| {
        let (ox, oy) = fine.mesh.element_origin(ex, ey);
        for (p, &gx) in nodes.iter().enumerate() {
            let x = ox + 0.5 * (gx + 1.0) * fine.mesh.hx;
            for (q, &gy) in nodes.iter().enumerate() {
                let y = oy + 0.5 * (gy + 1.0) * fine.mesh.hy;
                at_gauss[p * ng + q] = f(x, y);
            }
        }
    })
}

fn project_impl(
    plan: &ProjectionPlan,
    mut fill_gauss: impl FnMut(usize, usize, &ProjectionPlan, &mut [f64]),
) -> BrokenField {
    let fine = &plan.fine;
    let ng = plan.gauss_nodes.len();
    let modes = plan.modes();
    let k = plan.k;
    let (mx, my) = (plan.coarse_nx(), plan.coarse_ny());
    let (hx_c, hy_c) = plan.coarse_h();
    let jac = 0.25 * fine.mesh.hx * fine.mesh.hy;

    // 1D norms: int P_m^2 over the coarse element edge
    let norm_x: Vec<f64> = (0..modes).map(|m| 0.5 * hx_c * 2.0 / (2.0 * m as f64 + 1.0)).collect();
    let norm_y: Vec<f64> = (0..modes).map(|m| 0.5 * hy_c * 2.0 / (2.0 * m as f64 + 1.0)).collect();

    let mut coeffs = vec![0.0; mx * my * modes * modes];
    let mut at_gauss = vec![0.0; ng * ng];

    for cex in 0..mx {
        for cey in 0..my {
            let ce = cex * my + cey;
            let acc = &mut coeffs[ce * modes * modes..(ce + 1) * modes * modes];
            for ix in 0..k {
                let ex = cex * k + ix;
                for iy in 0..k {
                    let ey = cey * k + iy;
                    fill_gauss(ex, ey, plan, &mut at_gauss);
                    let lx = &plan.leg_gauss[ix];
                    let ly = &plan.leg_gauss[iy];
                    for m in 0..modes {
                        for n in 0..modes {
                            let mut a = 0.0;
                            for p in 0..ng {
                                let wp = plan.gauss_weights[p] * lx[m][p];
                                if wp == 0.0 {
                                    continue;
                                }
                                let mut row = 0.0;
                                for q in 0..ng {
                                    row += plan.gauss_weights[q]
                                        * ly[n][q]
                                        * at_gauss[p * ng + q];
                                }
                                a += wp * row;
                            }
                            acc[m * modes + n] += a * jac;
                        }
                    }
                }
            }
            for m in 0..modes {
                for n in 0..modes {
                    acc[m * modes + n] /= norm_x[m] * norm_y[n];
                }
            }
        }
    }
    BrokenField { plan: plan.clone(), coeffs }
}

/// Projections of both components of a displacement measurement.
#[derive(Clone, Debug)]
pub struct ProjectedDisplacement {
    pub px: BrokenField,
    pub py: BrokenField,
}

pub fn project_displacement(u: &VectorField, plan: &ProjectionPlan) -> ProjectedDisplacement {
    ProjectedDisplacement { px: l2_project(&u.x, plan), py: l2_project(&u.y, plan) }
}

/// Symmetric strain data at the fine quadrature points, 3 components per
/// point (`xx`, `yy`, `xy`), element-major layout.
#[derive(Clone, Debug)]
pub struct StrainField {
    pub space: FeSpace,
    pub k: usize,
    pub r: usize,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
}

/// Hessian data at the fine quadrature points: slice `k` holds the second
/// derivatives of component `k`, each slice symmetric by construction.
#[derive(Clone, Debug)]
pub struct HessianField {
    pub space: FeSpace,
    pub k: usize,
    pub r: usize,
    /// Slices [component][entry]; entries are `xx`, `yy`, `xy` arrays.
    pub slices: [[Vec<f64>; 3]; 2],
}

/// Symmetric gradient of the projected displacement, sampled at all fine
/// GLL points.
pub fn strain_from_projection(u: &VectorField, plan: &ProjectionPlan) -> (StrainField, ProjectedDisplacement) {
    let proj = project_displacement(u, plan);
    let strain = strain_of_projection(&proj);
    (strain, proj)
}

pub fn strain_of_projection(proj: &ProjectedDisplacement) -> StrainField {
    let plan = &proj.px.plan;
    let fine = &plan.fine;
    let n_loc = fine.n_loc();
    let n_elem = fine.mesh.n_elements();
    let mut xx = vec![0.0; n_elem * n_loc];
    let mut yy = vec![0.0; n_elem * n_loc];
    let mut xy = vec![0.0; n_elem * n_loc];
    let mut dx_ux = vec![0.0; n_loc];
    let mut dy_ux = vec![0.0; n_loc];
    let mut dx_uy = vec![0.0; n_loc];
    let mut dy_uy = vec![0.0; n_loc];
    for ex in 0..fine.mesh.nx {
        for ey in 0..fine.mesh.ny {
            let e = ex * fine.mesh.ny + ey;
            proj.px.tabulate_deriv(ex, ey, 1, 0, &mut dx_ux);
            proj.px.tabulate_deriv(ex, ey, 0, 1, &mut dy_ux);
            proj.py.tabulate_deriv(ex, ey, 1, 0, &mut dx_uy);
            proj.py.tabulate_deriv(ex, ey, 0, 1, &mut dy_uy);
            for q in 0..n_loc {
                xx[e * n_loc + q] = dx_ux[q];
                yy[e * n_loc + q] = dy_uy[q];
                xy[e * n_loc + q] = 0.5 * (dy_ux[q] + dx_uy[q]);
            }
        }
    }
    StrainField { space: fine.clone(), k: plan.k, r: plan.r, xx, yy, xy }
}

/// Second derivatives of the projected displacement at all fine GLL points.
/// Requires `r >= 2`; with lower order the data would be identically zero.
pub fn hessian_from_projection(u: &VectorField, plan: &ProjectionPlan) -> Result<(HessianField, ProjectedDisplacement)> {
    if plan.r < 2 {
        return Err(Error::InvalidOrder(
            "hessian extraction needs projection order r >= 2".into(),
        ));
    }
    let proj = project_displacement(u, plan);
    let hess = hessian_of_projection(&proj)?;
    Ok((hess, proj))
}

pub fn hessian_of_projection(proj: &ProjectedDisplacement) -> Result<HessianField> {
    let plan = &proj.px.plan;
    if plan.r < 2 {
        return Err(Error::InvalidOrder(
            "hessian extraction needs projection order r >= 2".into(),
        ));
    }
    let fine = &plan.fine;
    let n_loc = fine.n_loc();
    let n_elem = fine.mesh.n_elements();
    let mut slices: [[Vec<f64>; 3]; 2] = [
        [vec![0.0; n_elem * n_loc], vec![0.0; n_elem * n_loc], vec![0.0; n_elem * n_loc]],
        [vec![0.0; n_elem * n_loc], vec![0.0; n_elem * n_loc], vec![0.0; n_elem * n_loc]],
    ];
    let mut buf = vec![0.0; n_loc];
    for (c, comp) in [&proj.px, &proj.py].into_iter().enumerate() {
        for ex in 0..fine.mesh.nx {
            for ey in 0..fine.mesh.ny {
                let e = ex * fine.mesh.ny + ey;
                for (entry, (dx, dy)) in [(2, 0), (0, 2), (1, 1)].into_iter().enumerate() {
                    comp.tabulate_deriv(ex, ey, dx, dy, &mut buf);
                    slices[c][entry][e * n_loc..(e + 1) * n_loc].copy_from_slice(&buf);
                }
            }
        }
    }
    Ok(HessianField { space: fine.clone(), k: plan.k, r: plan.r, slices })
}

/// Mesh sizes prescribed by the noise-level rule, with snapping to the
/// admissible grid.
#[derive(Clone, Copy, Debug)]
pub struct MeshSizeChoice {
    pub h1_ideal: f64,
    pub h2_ideal: f64,
    pub k1: usize,
    pub k2: usize,
    pub h1: f64,
    pub h2: f64,
    /// Set when an ideal size fell outside `[h0, 1]` and was clamped.
    pub clamped: bool,
}

/// Apply the rule `h1 = delta^(1/(ell - d/2))`, `h2 = delta^(1/ell)` and snap
/// each to the nearest admissible coarse size `k * h0` with `k` a divisor of
/// the fine grid.
pub fn choose_mesh_sizes(delta: f64, ell: usize, d: usize, fine: &FeSpace) -> Result<MeshSizeChoice> {
    if delta <= 0.0 {
        return Err(Error::InvalidConfig("mesh-size rule needs delta > 0".into()));
    }
    if ell < 3 {
        return Err(Error::InvalidConfig("mesh-size rule needs ell >= 3".into()));
    }
    let h1_ideal = delta.powf(1.0 / (ell as f64 - d as f64 / 2.0));
    let h2_ideal = delta.powf(1.0 / ell as f64);
    let nx = fine.mesh.nx.min(fine.mesh.ny);
    let h0 = fine.mesh.h();
    let divisors: Vec<usize> = (1..=nx).filter(|k| fine.mesh.nx % k == 0 && fine.mesh.ny % k == 0).collect();
    let snap = |ideal: f64| -> (usize, bool) {
        let k_ideal = ideal / h0;
        let k = *divisors
            .iter()
            .min_by(|a, b| {
                let da = (**a as f64 - k_ideal).abs();
                let db = (**b as f64 - k_ideal).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        (k, k_ideal < 1.0 || k_ideal > nx as f64)
    };
    let (k1, c1) = snap(h1_ideal);
    let (k2, c2) = snap(h2_ideal);
    Ok(MeshSizeChoice {
        h1_ideal,
        h2_ideal,
        k1,
        k2,
        h1: k1 as f64 * h0,
        h2: k2 as f64 * h0,
        clamped: c1 || c2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::MeshSpec;

    fn space(n: usize, r: usize) -> FeSpace {
        FeSpace::conforming(MeshSpec::unit_square(n).unwrap(), r).unwrap()
    }

    #[test]
    fn plan_requires_nesting() {
        let s = space(10, 5);
        assert!(ProjectionPlan::new(&s, 3, 5).is_err());
        assert!(ProjectionPlan::new(&s, 0, 5).is_err());
        assert!(ProjectionPlan::new(&s, 5, 5).is_ok());
    }

    #[test]
    fn projection_is_idempotent() {
        let s = space(8, 5);
        let plan = ProjectionPlan::new(&s, 4, 5).unwrap();
        let f = s.interpolate(|x, y| (2.9 * x).sin() * (1.7 * y + 0.3).cos());
        let p1 = l2_project(&f.values, &plan);
        // project the projection: P(P u) = P u
        let p2 = l2_project_fn(|x, y| p1.eval_deriv(x, y, 0, 0).unwrap(), &plan);
        let worst = p1
            .coeffs
            .iter()
            .zip(&p2.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-11, "idempotence violated by {worst}");
    }

    #[test]
    fn global_polynomials_are_reproduced() {
        let s = space(6, 5);
        let plan = ProjectionPlan::new(&s, 2, 5).unwrap();
        let f = s.interpolate(|x, y| x.powi(5) - 3.0 * x * x * y * y * y + y + 1.0);
        let p = l2_project(&f.values, &plan);
        for &(x, y) in &[(0.03f64, 0.97f64), (0.5, 0.5), (0.31, 0.62), (1.0, 0.0)] {
            let exact = x.powi(5) - 3.0 * x * x * y.powi(3) + y + 1.0;
            assert!((p.eval_deriv(x, y, 0, 0).unwrap() - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn projection_is_linear() {
        let s = space(4, 4);
        let plan = ProjectionPlan::new(&s, 2, 4).unwrap();
        let f = s.interpolate(|x, y| (x * 3.0).sin() + y);
        let g = s.interpolate(|x, y| x - (y * 2.0).cos());
        let mut combo = f.clone();
        combo.axpy(2.5, &g);
        let pf = l2_project(&f.values, &plan);
        let pg = l2_project(&g.values, &plan);
        let pc = l2_project(&combo.values, &plan);
        for i in 0..pc.coeffs.len() {
            let lin = pf.coeffs[i] + 2.5 * pg.coeffs[i];
            assert!((pc.coeffs[i] - lin).abs() < 1e-11);
        }
    }

    #[test]
    fn l2_stability_of_projection() {
        // Parseval on the Legendre coefficients versus the source norm
        let s = space(8, 5);
        let plan = ProjectionPlan::new(&s, 4, 5).unwrap();
        let f = s.interpolate(|x, y| (7.3 * x).sin() * (5.1 * y).cos() + 0.2);
        let p = l2_project(&f.values, &plan);
        let modes = plan.r + 1;
        let (hx, hy) = plan.coarse_h();
        let mut proj_norm_sq = 0.0;
        for ce in 0..plan.coarse_nx() * plan.coarse_ny() {
            for m in 0..modes {
                for n in 0..modes {
                    let c = p.coeffs[ce * modes * modes + m * modes + n];
                    let nm = 0.5 * hx * 2.0 / (2.0 * m as f64 + 1.0);
                    let nn = 0.5 * hy * 2.0 / (2.0 * n as f64 + 1.0);
                    proj_norm_sq += c * c * nm * nn;
                }
            }
        }
        // source L2 norm via fine quadrature
        let gauss = gauss_rule(6);
        let mut src_norm_sq = 0.0;
        for ex in 0..s.mesh.nx {
            for ey in 0..s.mesh.ny {
                let (ox, oy) = s.mesh.element_origin(ex, ey);
                for (p1, &gx) in gauss.nodes.iter().enumerate() {
                    for (q1, &gy) in gauss.nodes.iter().enumerate() {
                        let x = ox + 0.5 * (gx + 1.0) * s.mesh.hx;
                        let y = oy + 0.5 * (gy + 1.0) * s.mesh.hy;
                        let v = f.eval(x, y).unwrap();
                        src_norm_sq += gauss.weights[p1] * gauss.weights[q1] * v * v;
                    }
                }
            }
        }
        src_norm_sq *= 0.25 * s.mesh.hx * s.mesh.hy;
        assert!(proj_norm_sq.sqrt() <= src_norm_sq.sqrt() + 1e-12);
    }

    #[test]
    fn strain_of_identity_map_is_identity() {
        let s = space(6, 5);
        let plan = ProjectionPlan::new(&s, 3, 5).unwrap();
        let u = s.interpolate_vector(|x, y| (x, y));
        let (eps, _) = strain_from_projection(&u, &plan);
        for q in 0..eps.xx.len() {
            assert!((eps.xx[q] - 1.0).abs() < 1e-11);
            assert!((eps.yy[q] - 1.0).abs() < 1e-11);
            assert!(eps.xy[q].abs() < 1e-11);
        }
    }

    #[test]
    fn strain_of_swap_map_is_off_diagonal() {
        let s = space(4, 5);
        let plan = ProjectionPlan::new(&s, 2, 5).unwrap();
        let u = s.interpolate_vector(|x, y| (y, x));
        let (eps, _) = strain_from_projection(&u, &plan);
        for q in 0..eps.xx.len() {
            assert!(eps.xx[q].abs() < 1e-11);
            assert!(eps.yy[q].abs() < 1e-11);
            assert!((eps.xy[q] - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn hessian_of_quadratic_is_exact() {
        let s = space(4, 5);
        let plan = ProjectionPlan::new(&s, 2, 5).unwrap();
        let u = s.interpolate_vector(|x, _y| (x * x, 0.0));
        let (h, _) = hessian_from_projection(&u, &plan).unwrap();
        for q in 0..h.slices[0][0].len() {
            assert!((h.slices[0][0][q] - 2.0).abs() < 1e-10); // (H^1)_xx = 2
            assert!(h.slices[0][1][q].abs() < 1e-10);
            assert!(h.slices[0][2][q].abs() < 1e-10);
            for e in 0..3 {
                assert!(h.slices[1][e][q].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hessian_of_linear_fields_vanishes() {
        let s = space(4, 5);
        let plan = ProjectionPlan::new(&s, 4, 5).unwrap();
        let u = s.interpolate_vector(|x, y| (y + 1.0, x - 2.0));
        let (h, _) = hessian_from_projection(&u, &plan).unwrap();
        for c in 0..2 {
            for e in 0..3 {
                for q in 0..h.slices[c][e].len() {
                    assert!(h.slices[c][e][q].abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn hessian_rejects_low_order() {
        let s = space(4, 1);
        let plan = ProjectionPlan::new(&s, 2, 1).unwrap();
        let u = VectorField::zeros(&s);
        assert!(hessian_from_projection(&u, &plan).is_err());
    }

    #[test]
    fn mesh_size_rule_values() {
        // delta = 1e-6, ell = 3, d = 2: h1 = delta^(1/2) = 1e-3, h2 = delta^(1/3) = 1e-2
        let s = space(40, 5);
        let c = choose_mesh_sizes(1e-6, 3, 2, &s).unwrap();
        assert!((c.h1_ideal - 1e-3).abs() < 1e-15);
        assert!((c.h2_ideal - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn mesh_size_rule_clamps_below_fine_grid() {
        // paper-scale example: delta = 1e-7 on the 1/120 grid snaps h2 to k = 1
        let s = space(120, 5);
        let c = choose_mesh_sizes(1e-7, 3, 2, &s).unwrap();
        assert_eq!(c.k2, 1);
        assert!(c.clamped);
        assert!((c.h2_ideal - 1e-7f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn mesh_sizes_monotone_in_delta() {
        let s = space(40, 5);
        let mut last = (0.0, 0.0);
        for &d in &[1e-9, 1e-7, 1e-5, 1e-3, 1e-1] {
            let c = choose_mesh_sizes(d, 3, 2, &s).unwrap();
            assert!(c.h1_ideal >= last.0 && c.h2_ideal >= last.1);
            last = (c.h1_ideal, c.h2_ideal);
        }
    }

    #[test]
    fn noisy_constant_strain_bound() {
        // regression bound: ||eps||_inf <= C delta / h1 with C frozen at 800
        // (measured max 633 over this grid)
        let s = space(40, 5);
        let base = s.interpolate_vector(|_, _| (3.0, -1.0));
        for &delta in &[1e-4, 1e-6] {
            let (noisy, _) = crate::measure::add_noise(&base, delta, 20).unwrap();
            for &k in &[1usize, 2, 4] {
                let plan = ProjectionPlan::new(&s, k, 5).unwrap();
                let (eps, _) = strain_from_projection(&noisy, &plan);
                let sup = eps
                    .xx
                    .iter()
                    .chain(&eps.yy)
                    .chain(&eps.xy)
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                let h1 = k as f64 * s.mesh.hx;
                assert!(
                    sup <= 800.0 * delta / h1,
                    "delta={delta} k={k}: sup={sup} bound={}",
                    800.0 * delta / h1
                );
            }
        }
    }
}
