//! Pointwise algebra of the inversion.
//!
//! At every evaluation point the two measured strains define the block matrix
//! `A = [A_1; A_2]` with `A_n = [(t_n/d) I, eps_n^D]`, and the hessians define
//! `B = [B_1; B_2]` with `B_n = [grad(t_n)/d, div(eps_n^D)]`. Whenever the
//! tensor `E = t_1 eps_2^D - t_2 eps_1^D` is invertible, `A` has the explicit
//! block inverse
//!
//! ```text
//! A^-1 = [ d eps_2^D, -d eps_1^D ]   [ E^-1   0  ]
//!        [ -t_2 I,     t_1 I     ] . [  0   E^-1 ]
//! ```
//!
//! and the moduli satisfy the gradient system `grad(alpha, beta) + M (alpha,
//! beta) = f` with `M = A^-1 B` and `f = -A^-1 (rho w_1^2 u_1, rho w_2^2
//! u_2)`. In 2D, `E` is symmetric trace-free, so `det E = -(a^2 + b^2) <= 0`
//! and invertibility fails exactly when `E = 0`, i.e. when `t_1 eps_2 = t_2
//! eps_1`.
//!
//! Symmetric 2x2 tensors are stored as `[xx, yy, xy]`.

use crate::differentiate::{BrokenField, HessianField, ProjectedDisplacement, StrainField};
use crate::error::{Error, Result};
use crate::fem::space::{FeSpace, VectorField};
use serde::{Deserialize, Serialize};

/// Trace and deviatoric split of a symmetric tensor: `eps = eps_D + (t/d) I`.
pub fn trace_deviatoric(eps: [f64; 3], d: f64) -> (f64, [f64; 3]) {
    let t = eps[0] + eps[1];
    (t, [eps[0] - t / d, eps[1] - t / d, eps[2]])
}

/// The data-richness tensor `E = t_1 eps_2^D - t_2 eps_1^D` and its
/// determinant. `E` is symmetric and trace-free; in 2D `det E <= 0` always.
pub fn build_e(eps1: [f64; 3], eps2: [f64; 3]) -> ([f64; 3], f64) {
    let (t1, d1) = trace_deviatoric(eps1, 2.0);
    let (t2, d2) = trace_deviatoric(eps2, 2.0);
    let e = [
        t1 * d2[0] - t2 * d1[0],
        t1 * d2[1] - t2 * d1[1],
        t1 * d2[2] - t2 * d1[2],
    ];
    // E = [[a, b], [b, -a]]: det = -(a^2 + b^2)
    (e, -(e[0] * e[0] + e[2] * e[2]))
}

/// Explicit inverse of the 4x4 block matrix `A`, valid wherever
/// `|det E| >= c0`. Row-major 4x4.
pub fn invert_a(eps1: [f64; 3], eps2: [f64; 3], c0: f64) -> Result<[[f64; 4]; 4]> {
    let (e, det_e) = build_e(eps1, eps2);
    if det_e.abs() < c0 {
        return Err(Error::DetETooSmall { x: f64::NAN, y: f64::NAN, value: det_e, threshold: c0 });
    }
    let (t1, d1) = trace_deviatoric(eps1, 2.0);
    let (t2, d2) = trace_deviatoric(eps2, 2.0);
    // E^-1 = adj(E) / det(E); adj([[a, b], [b, -a]]) = [[-a, -b], [-b, a]]
    let ei = [[-e[0] / det_e, -e[2] / det_e], [-e[2] / det_e, e[0] / det_e]];
    let d = 2.0;
    // left factor rows: [d eps2D, -d eps1D; -t2 I, t1 I]
    let left = [
        [d * d2[0], d * d2[2], -d * d1[0], -d * d1[2]],
        [d * d2[2], d * d2[1], -d * d1[2], -d * d1[1]],
        [-t2, 0.0, t1, 0.0],
        [0.0, -t2, 0.0, t1],
    ];
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            // right factor is block-diagonal with E^-1
            let block = j / 2;
            let jj = j % 2;
            let mut acc = 0.0;
            for kk in 0..2 {
                acc += left[i][2 * block + kk] * ei[kk][jj];
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

/// Assemble `A` itself (for oracle comparisons): `A = [(t1/d) I, eps1^D;
/// (t2/d) I, eps2^D]`.
pub fn build_a(eps1: [f64; 3], eps2: [f64; 3]) -> [[f64; 4]; 4] {
    let (t1, d1) = trace_deviatoric(eps1, 2.0);
    let (t2, d2) = trace_deviatoric(eps2, 2.0);
    [
        [t1 / 2.0, 0.0, d1[0], d1[2]],
        [0.0, t1 / 2.0, d1[2], d1[1]],
        [t2 / 2.0, 0.0, d2[0], d2[2]],
        [0.0, t2 / 2.0, d2[2], d2[1]],
    ]
}

/// Columns of `B_n` from the hessian slices of measurement `n`:
/// column 1 is `grad(t_n)/d`, column 2 the deviatoric divergence
/// `sum_j [ ((d-2)/(2d)) (H^j)_ij + 1/2 (H^i)_jj ] e_i` (the first
/// coefficient vanishes for d = 2). Returns `[[c1_x, c2_x], [c1_y, c2_y]]`.
pub fn build_b(hess: &[[f64; 3]; 2], d: f64) -> [[f64; 2]; 2] {
    let [h1, h2] = hess; // slices: second derivatives of u.e1, u.e2; [xx, yy, xy]
    let grad_t = [h1[0] + h2[2], h1[2] + h2[1]];
    let cc = (d - 2.0) / (2.0 * d);
    let div_dev = [
        cc * grad_t[0] + 0.5 * (h1[0] + h1[1]),
        cc * grad_t[1] + 0.5 * (h2[0] + h2[1]),
    ];
    [
        [grad_t[0] / d, div_dev[0]],
        [grad_t[1] / d, div_dev[1]],
    ]
}

/// The gradient-system coefficients at one point: `M = [a b; c d]` with each
/// entry a 2-vector, and the right-hand side `f = (f1, f2)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PointSystem {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
    pub f1: [f64; 2],
    pub f2: [f64; 2],
    pub det_e: f64,
}

/// Everything the per-point assembly needs.
#[derive(Clone, Copy, Debug)]
pub struct PointKinematics {
    pub eps1: [f64; 3],
    pub eps2: [f64; 3],
    pub hess1: [[f64; 3]; 2],
    pub hess2: [[f64; 3]; 2],
    pub u1: [f64; 2],
    pub u2: [f64; 2],
}

/// Frequencies, density and the invertibility threshold.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub rho: f64,
    pub c0: f64,
}

impl SystemParams {
    pub fn static_case(rho: f64, c0: f64) -> Self {
        SystemParams { omega1: 0.0, omega2: 0.0, rho, c0 }
    }
}

/// Build the point system by the explicit block inversion. Fails when
/// `|det E|` is below the threshold.
pub fn build_point_system(kin: &PointKinematics, params: &SystemParams) -> Result<PointSystem> {
    let (e, det_e) = build_e(kin.eps1, kin.eps2);
    if det_e.abs() < params.c0 {
        return Err(Error::DetETooSmall {
            x: f64::NAN,
            y: f64::NAN,
            value: det_e,
            threshold: params.c0,
        });
    }
    let (t1, d1) = trace_deviatoric(kin.eps1, 2.0);
    let (t2, d2) = trace_deviatoric(kin.eps2, 2.0);
    let ei = [[-e[0] / det_e, -e[2] / det_e], [-e[2] / det_e, e[0] / det_e]];
    let d = 2.0;
    // apply A^-1 to a stacked pair of 2-vectors
    let apply = |r1: [f64; 2], r2: [f64; 2]| -> ([f64; 2], [f64; 2]) {
        let q1 = [ei[0][0] * r1[0] + ei[0][1] * r1[1], ei[1][0] * r1[0] + ei[1][1] * r1[1]];
        let q2 = [ei[0][0] * r2[0] + ei[0][1] * r2[1], ei[1][0] * r2[0] + ei[1][1] * r2[1]];
        let s1 = [
            d * (d2[0] * q1[0] + d2[2] * q1[1]) - d * (d1[0] * q2[0] + d1[2] * q2[1]),
            d * (d2[2] * q1[0] + d2[1] * q1[1]) - d * (d1[2] * q2[0] + d1[1] * q2[1]),
        ];
        let s2 = [-t2 * q1[0] + t1 * q2[0], -t2 * q1[1] + t1 * q2[1]];
        (s1, s2)
    };
    let b1 = build_b(&kin.hess1, d);
    let b2 = build_b(&kin.hess2, d);
    // columns of M = A^-1 B
    let (a, c) = apply([b1[0][0], b1[1][0]], [b2[0][0], b2[1][0]]);
    let (b, dd) = apply([b1[0][1], b1[1][1]], [b2[0][1], b2[1][1]]);
    let s1 = params.rho * params.omega1 * params.omega1;
    let s2 = params.rho * params.omega2 * params.omega2;
    let (f1, f2) = apply(
        [-s1 * kin.u1[0], -s1 * kin.u1[1]],
        [-s2 * kin.u2[0], -s2 * kin.u2[1]],
    );
    Ok(PointSystem { a, b, c, d: dd, f1, f2, det_e })
}

/// What to do at points violating the invertibility margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegeneracyPolicy {
    /// Fail the whole assembly, reporting the first offending location.
    Abort,
    /// Zero the system data at offending points and count them.
    Mask,
}

/// Summary of the invertibility margin over a point set.
#[derive(Clone, Copy, Debug)]
pub struct InvertibilityReport {
    pub min_abs_det_e: f64,
    pub location: (f64, f64),
    pub below_threshold: usize,
    pub total: usize,
    pub c0: f64,
}

/// Gradient-system data tabulated at every fine quadrature point,
/// element-major (`e * n_loc + q`).
#[derive(Clone, Debug)]
pub struct GradientSystemData {
    pub space: FeSpace,
    pub params: SystemParams,
    pub a_x: Vec<f64>,
    pub a_y: Vec<f64>,
    pub b_x: Vec<f64>,
    pub b_y: Vec<f64>,
    pub c_x: Vec<f64>,
    pub c_y: Vec<f64>,
    pub d_x: Vec<f64>,
    pub d_y: Vec<f64>,
    pub f1_x: Vec<f64>,
    pub f1_y: Vec<f64>,
    pub f2_x: Vec<f64>,
    pub f2_y: Vec<f64>,
    pub det_e: Vec<f64>,
    pub report: InvertibilityReport,
}

/// Tabulate displacement values at all fine GLL points, element-major.
pub fn tabulate_at_gll(u: &VectorField) -> (Vec<f64>, Vec<f64>) {
    let space = &u.space;
    let n1 = space.n1();
    let n_loc = space.n_loc();
    let n_elem = space.mesh.n_elements();
    let mut ux = vec![0.0; n_elem * n_loc];
    let mut uy = vec![0.0; n_elem * n_loc];
    for ex in 0..space.mesh.nx {
        for ey in 0..space.mesh.ny {
            let e = ex * space.mesh.ny + ey;
            for i in 0..n1 {
                for j in 0..n1 {
                    let g = space.global_index(ex, ey, i, j);
                    ux[e * n_loc + i * n1 + j] = u.x[g];
                    uy[e * n_loc + i * n1 + j] = u.y[g];
                }
            }
        }
    }
    (ux, uy)
}

/// Build the full tabulated gradient system from strain, hessian and
/// displacement data of both measurements.
pub fn build_gradient_system(
    strain1: &StrainField,
    strain2: &StrainField,
    hess1: &HessianField,
    hess2: &HessianField,
    u1: &VectorField,
    u2: &VectorField,
    params: &SystemParams,
    policy: DegeneracyPolicy,
) -> Result<GradientSystemData> {
    let space = strain1.space.clone();
    let n_loc = space.n_loc();

    let n = space.mesh.n_elements() * n_loc;
    let (u1x, u1y) = tabulate_at_gll(u1);
    let (u2x, u2y) = tabulate_at_gll(u2);

    let mut data = GradientSystemData {
        space: space.clone(),
        params: *params,
        a_x: vec![0.0; n],
        a_y: vec![0.0; n],
        b_x: vec![0.0; n],
        b_y: vec![0.0; n],
        c_x: vec![0.0; n],
        c_y: vec![0.0; n],
        d_x: vec![0.0; n],
        d_y: vec![0.0; n],
        f1_x: vec![0.0; n],
        f1_y: vec![0.0; n],
        f2_x: vec![0.0; n],
        f2_y: vec![0.0; n],
        det_e: vec![0.0; n],
        report: InvertibilityReport {
            min_abs_det_e: f64::INFINITY,
            location: (f64::NAN, f64::NAN),
            below_threshold: 0,
            total: n,
            c0: params.c0,
        },
    };

    for ex in 0..space.mesh.nx {
        for ey in 0..space.mesh.ny {
            let e = ex * space.mesh.ny + ey;
            let pts = crate::fem::assemble::gll_points(&space, ex, ey);
            for q in 0..n_loc {
                let idx = e * n_loc + q;
                let kin = PointKinematics {
                    eps1: [strain1.xx[idx], strain1.yy[idx], strain1.xy[idx]],
                    eps2: [strain2.xx[idx], strain2.yy[idx], strain2.xy[idx]],
                    hess1: [
                        [hess1.slices[0][0][idx], hess1.slices[0][1][idx], hess1.slices[0][2][idx]],
                        [hess1.slices[1][0][idx], hess1.slices[1][1][idx], hess1.slices[1][2][idx]],
                    ],
                    hess2: [
                        [hess2.slices[0][0][idx], hess2.slices[0][1][idx], hess2.slices[0][2][idx]],
                        [hess2.slices[1][0][idx], hess2.slices[1][1][idx], hess2.slices[1][2][idx]],
                    ],
                    u1: [u1x[idx], u1y[idx]],
                    u2: [u2x[idx], u2y[idx]],
                };
                let (_, det_e) = build_e(kin.eps1, kin.eps2);
                data.det_e[idx] = det_e;
                if det_e.abs() < data.report.min_abs_det_e {
                    data.report.min_abs_det_e = det_e.abs();
                    data.report.location = pts[q];
                }
                if det_e.abs() < params.c0 {
                    data.report.below_threshold += 1;
                    match policy {
                        DegeneracyPolicy::Abort => {
                            return Err(Error::DetETooSmall {
                                x: pts[q].0,
                                y: pts[q].1,
                                value: det_e,
                                threshold: params.c0,
                            });
                        }
                        DegeneracyPolicy::Mask => continue, // leave zeros
                    }
                }
                let sys = build_point_system(&kin, params)?;
                data.a_x[idx] = sys.a[0];
                data.a_y[idx] = sys.a[1];
                data.b_x[idx] = sys.b[0];
                data.b_y[idx] = sys.b[1];
                data.c_x[idx] = sys.c[0];
                data.c_y[idx] = sys.c[1];
                data.d_x[idx] = sys.d[0];
                data.d_y[idx] = sys.d[1];
                data.f1_x[idx] = sys.f1[0];
                data.f1_y[idx] = sys.f1[1];
                data.f2_x[idx] = sys.f2[0];
                data.f2_y[idx] = sys.f2[1];
            }

        }
    }
    Ok(data)
}

/// Max absolute value over all M coefficients (diagnostic for the
/// boundedness the analysis assumes).
impl GradientSystemData {
    pub fn coefficient_sup(&self) -> f64 {
        self.a_x
            .iter()
            .chain(&self.a_y)
            .chain(&self.b_x)
            .chain(&self.b_y)
            .chain(&self.c_x)
            .chain(&self.c_y)
            .chain(&self.d_x)
            .chain(&self.d_y)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn rhs_sup(&self) -> f64 {
        self.f1_x
            .iter()
            .chain(&self.f1_y)
            .chain(&self.f2_x)
            .chain(&self.f2_y)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Point-wise evaluator over the projected data, for integration along
/// curves: strains from the `h1` projections, hessians from the `h2`
/// projections, displacements from the fine fields.
pub struct PointEvaluator {
    pub strain_proj: [ProjectedDisplacement; 2],
    pub hessian_proj: [ProjectedDisplacement; 2],
    pub u: [VectorField; 2],
    pub params: SystemParams,
}

impl PointEvaluator {
    pub fn system_at(&self, x: f64, y: f64) -> Result<PointSystem> {
        let strain = |p: &ProjectedDisplacement| -> Result<[f64; 3]> {
            let dxx = p.px.eval_deriv(x, y, 1, 0)?;
            let dxy = p.px.eval_deriv(x, y, 0, 1)?;
            let dyx = p.py.eval_deriv(x, y, 1, 0)?;
            let dyy = p.py.eval_deriv(x, y, 0, 1)?;
            Ok([dxx, dyy, 0.5 * (dxy + dyx)])
        };
        let hess = |b: &BrokenField| -> Result<[f64; 3]> {
            Ok([
                b.eval_deriv(x, y, 2, 0)?,
                b.eval_deriv(x, y, 0, 2)?,
                b.eval_deriv(x, y, 1, 1)?,
            ])
        };
        let (u1x, u1y) = self.u[0].eval(x, y)?;
        let (u2x, u2y) = self.u[1].eval(x, y)?;
        let kin = PointKinematics {
            eps1: strain(&self.strain_proj[0])?,
            eps2: strain(&self.strain_proj[1])?,
            hess1: [hess(&self.hessian_proj[0].px)?, hess(&self.hessian_proj[0].py)?],
            hess2: [hess(&self.hessian_proj[1].px)?, hess(&self.hessian_proj[1].py)?],
            u1: [u1x, u1y],
            u2: [u2x, u2y],
        };
        build_point_system(&kin, &self.params).map_err(|e| match e {
            Error::DetETooSmall { value, threshold, .. } => {
                Error::DetETooSmall { x, y, value, threshold }
            }
            other => other,
        })
    }
}
