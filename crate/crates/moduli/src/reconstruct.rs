//! Recovery of `(alpha, beta)` from gradient-system data.
//!
//! The variational route minimizes `|| L(alpha, beta) - f ||_{L^2}` over the
//! conforming fine space, with the boundary values of the moduli assumed
//! known and carried by a lifting so the unknowns have zero trace. The
//! normal equations are symmetric positive definite on the zero-trace
//! subspace (a Poincare-Friedrichs-type inequality holds for bounded
//! coefficients) and are solved with conjugate gradients.
//!
//! The direct route integrates the same system as an ODE along curves: along
//! `t -> xi(t)` the moduli satisfy `phi' + M_gamma phi = f_gamma` with
//! `M_gamma`, `f_gamma` the contractions of the coefficient fields against
//! the curve velocity. It is exact for compatible data but has no built-in
//! stability against noise, which is precisely the failure the variational
//! formulation avoids; the pair of routes is kept for diagnostics.

use crate::error::{Error, Result};
use crate::fem::assemble::{gll_weights, local_gradient, local_gradient_adjoint};
use crate::fem::gll::gauss_rule;
use crate::fem::space::{FeSpace, ScalarField};
use crate::linalg::{conjugate_gradient, smallest_ritz_value, CgOutcome, LinearOperator};
use crate::pointwise::{GradientSystemData, PointEvaluator};

/// Conforming fields carrying the known boundary trace of the moduli; zero
/// at every interior node.
#[derive(Clone, Debug)]
pub struct LiftingPair {
    pub alpha: ScalarField,
    pub beta: ScalarField,
}

/// Nodal lifting of boundary traces: boundary nodes take the trace values,
/// interior nodes are zero.
pub fn build_lifting(
    trace_alpha: impl Fn(f64, f64) -> f64,
    trace_beta: impl Fn(f64, f64) -> f64,
    space: &FeSpace,
) -> LiftingPair {
    let (nx, ny) = (space.nodes_x(), space.nodes_y());
    let mut alpha = ScalarField::zeros(space);
    let mut beta = ScalarField::zeros(space);
    for gy in 0..ny {
        for gx in 0..nx {
            if space.is_boundary_node(gx, gy) {
                let (x, y) = space.node_coords(gx, gy);
                alpha.values[gy * nx + gx] = trace_alpha(x, y);
                beta.values[gy * nx + gx] = trace_beta(x, y);
            }
        }
    }
    LiftingPair { alpha, beta }
}

/// Matrix-free Galerkin operator of the normal equations on the zero-trace
/// subspace (boundary rows replaced by identity). Unknowns are stacked
/// `[alpha; beta]` in scalar node order.
pub struct NormalOperator<'a> {
    space: FeSpace,
    data: &'a GradientSystemData,
    mask: Vec<bool>,
    w: Vec<f64>,
}

impl<'a> NormalOperator<'a> {
    pub fn new(data: &'a GradientSystemData) -> Self {
        let space = data.space.clone();
        let scalar_mask = space.boundary_mask();
        let mut mask = scalar_mask.clone();
        mask.extend_from_slice(&scalar_mask);
        let w = gll_weights(&space);
        NormalOperator { space, data, mask, w }
    }

    fn n_scalar(&self) -> usize {
        self.space.dof_count()
    }

    /// `y += K x` without boundary masking.
    pub fn apply_raw(&self, x: &[f64], y: &mut [f64]) {
        let space = &self.space;
        let n1 = space.n1();
        let n_loc = space.n_loc();
        let n = self.n_scalar();
        let (al, be) = x.split_at(n);
        let d = self.data;

        let mut la = vec![0.0; n_loc];
        let mut lb = vec![0.0; n_loc];
        let mut dxa = vec![0.0; n_loc];
        let mut dya = vec![0.0; n_loc];
        let mut dxb = vec![0.0; n_loc];
        let mut dyb = vec![0.0; n_loc];
        let mut l1x = vec![0.0; n_loc];
        let mut l1y = vec![0.0; n_loc];
        let mut l2x = vec![0.0; n_loc];
        let mut l2y = vec![0.0; n_loc];
        let mut outa = vec![0.0; n_loc];
        let mut outb = vec![0.0; n_loc];

        for ex in 0..space.mesh.nx {
            for ey in 0..space.mesh.ny {
                let e = ex * space.mesh.ny + ey;
                let base = e * n_loc;
                for i in 0..n1 {
                    for j in 0..n1 {
                        let g = space.global_index(ex, ey, i, j);
                        la[i * n1 + j] = al[g];
                        lb[i * n1 + j] = be[g];
                    }
                }
                local_gradient(space, &la, &mut dxa, &mut dya);
                local_gradient(space, &lb, &mut dxb, &mut dyb);
                for q in 0..n_loc {
                    let w = self.w[q];
                    // L1 = grad(alpha) + a alpha + b beta
                    l1x[q] = w * (dxa[q] + d.a_x[base + q] * la[q] + d.b_x[base + q] * lb[q]);
                    l1y[q] = w * (dya[q] + d.a_y[base + q] * la[q] + d.b_y[base + q] * lb[q]);
                    // L2 = grad(beta) + c alpha + d beta
                    l2x[q] = w * (dxb[q] + d.c_x[base + q] * la[q] + d.d_x[base + q] * lb[q]);
                    l2y[q] = w * (dyb[q] + d.c_y[base + q] * la[q] + d.d_y[base + q] * lb[q]);
                }
                outa.fill(0.0);
                outb.fill(0.0);
                local_gradient_adjoint(space, &l1x, &l1y, &mut outa);
                local_gradient_adjoint(space, &l2x, &l2y, &mut outb);
                for q in 0..n_loc {
                    outa[q] += d.a_x[base + q] * l1x[q]
                        + d.a_y[base + q] * l1y[q]
                        + d.c_x[base + q] * l2x[q]
                        + d.c_y[base + q] * l2y[q];
                    outb[q] += d.b_x[base + q] * l1x[q]
                        + d.b_y[base + q] * l1y[q]
                        + d.d_x[base + q] * l2x[q]
                        + d.d_y[base + q] * l2y[q];
                }
                for i in 0..n1 {
                    for j in 0..n1 {
                        let g = space.global_index(ex, ey, i, j);
                        y[g] += outa[i * n1 + j];
                        y[g + n] += outb[i * n1 + j];
                    }
                }
            }
        }
    }

    /// Quadratic form `x^T K x` (unmasked), for property checks.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply_raw(x, &mut y);
        crate::linalg::dot(x, &y)
    }
}

impl<'a> LinearOperator for NormalOperator<'a> {
    fn dim(&self) -> usize {
        2 * self.n_scalar()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut xm = x.to_vec();
        for (v, &m) in xm.iter_mut().zip(&self.mask) {
            if m {
                *v = 0.0;
            }
        }
        y.fill(0.0);
        self.apply_raw(&xm, y);
        for i in 0..y.len() {
            if self.mask[i] {
                y[i] = x[i];
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let space = &self.space;
        let n1 = space.n1();
        let n_loc = space.n_loc();
        let n = self.n_scalar();
        let dm = &space.basis.diff;
        let sx = 2.0 / space.mesh.hx;
        let sy = 2.0 / space.mesh.hy;
        let d = self.data;
        let mut diag = vec![0.0; 2 * n];
        for ex in 0..space.mesh.nx {
            for ey in 0..space.mesh.ny {
                let e = ex * space.mesh.ny + ey;
                let base = e * n_loc;
                for i in 0..n1 {
                    for j in 0..n1 {
                        let g = space.global_index(ex, ey, i, j);
                        let me = i * n1 + j;
                        // gradient part: same for both fields
                        let mut grad_part = 0.0;
                        for p in 0..n1 {
                            let w = self.w[p * n1 + j];
                            let gx = dm[p * n1 + i] * sx;
                            grad_part += w * gx * gx;
                        }
                        for q in 0..n1 {
                            let w = self.w[i * n1 + q];
                            let gy = dm[q * n1 + j] * sy;
                            grad_part += w * gy * gy;
                        }
                        let w = self.w[me];
                        // cross terms between grad(phi) and the zero-order
                        // part act only at the node itself
                        let dxx = dm[i * n1 + i] * sx;
                        let dyy = dm[j * n1 + j] * sy;
                        let a_al = grad_part
                            + 2.0 * w * (d.a_x[base + me] * dxx + d.a_y[base + me] * dyy)
                            + w * (d.a_x[base + me] * d.a_x[base + me]
                                + d.a_y[base + me] * d.a_y[base + me]
                                + d.c_x[base + me] * d.c_x[base + me]
                                + d.c_y[base + me] * d.c_y[base + me]);
                        let a_be = grad_part
                            + 2.0 * w * (d.d_x[base + me] * dxx + d.d_y[base + me] * dyy)
                            + w * (d.b_x[base + me] * d.b_x[base + me]
                                + d.b_y[base + me] * d.b_y[base + me]
                                + d.d_x[base + me] * d.d_x[base + me]
                                + d.d_y[base + me] * d.d_y[base + me]);
                        diag[g] += a_al;
                        diag[g + n] += a_be;
                    }
                }
            }
        }
        for i in 0..diag.len() {
            if self.mask[i] {
                diag[i] = 1.0;
            }
        }
        diag
    }
}

/// Assembled normal system: operator, right-hand side, lifting.
pub struct NormalSystem<'a> {
    pub op: NormalOperator<'a>,
    pub rhs: Vec<f64>,
    pub lifting: LiftingPair,
}

/// Galerkin right-hand side `<f - L(lift), L(test)>` over zero-trace tests.
pub fn assemble_normal_system<'a>(
    data: &'a GradientSystemData,
    lifting: LiftingPair,
) -> NormalSystem<'a> {
    let op = NormalOperator::new(data);
    let space = &data.space;
    let n1 = space.n1();
    let n_loc = space.n_loc();
    let n = space.dof_count();
    let w = gll_weights(space);

    let mut rhs = vec![0.0; 2 * n];
    let mut la = vec![0.0; n_loc];
    let mut lb = vec![0.0; n_loc];
    let mut dxa = vec![0.0; n_loc];
    let mut dya = vec![0.0; n_loc];
    let mut dxb = vec![0.0; n_loc];
    let mut dyb = vec![0.0; n_loc];
    let mut r1x = vec![0.0; n_loc];
    let mut r1y = vec![0.0; n_loc];
    let mut r2x = vec![0.0; n_loc];
    let mut r2y = vec![0.0; n_loc];
    let mut outa = vec![0.0; n_loc];
    let mut outb = vec![0.0; n_loc];

    for ex in 0..space.mesh.nx {
        for ey in 0..space.mesh.ny {
            let e = ex * space.mesh.ny + ey;
            let base = e * n_loc;
            for i in 0..n1 {
                for j in 0..n1 {
                    let g = space.global_index(ex, ey, i, j);
                    la[i * n1 + j] = lifting.alpha.values[g];
                    lb[i * n1 + j] = lifting.beta.values[g];
                }
            }
            local_gradient(space, &la, &mut dxa, &mut dya);
            local_gradient(space, &lb, &mut dxb, &mut dyb);
            for q in 0..n_loc {
                let wq = w[q];
                // residual r = f - L(lift), weighted
                r1x[q] = wq
                    * (data.f1_x[base + q]
                        - (dxa[q] + data.a_x[base + q] * la[q] + data.b_x[base + q] * lb[q]));
                r1y[q] = wq
                    * (data.f1_y[base + q]
                        - (dya[q] + data.a_y[base + q] * la[q] + data.b_y[base + q] * lb[q]));
                r2x[q] = wq
                    * (data.f2_x[base + q]
                        - (dxb[q] + data.c_x[base + q] * la[q] + data.d_x[base + q] * lb[q]));
                r2y[q] = wq
                    * (data.f2_y[base + q]
                        - (dyb[q] + data.c_y[base + q] * la[q] + data.d_y[base + q] * lb[q]));
            }
            outa.fill(0.0);
            outb.fill(0.0);
            local_gradient_adjoint(space, &r1x, &r1y, &mut outa);
            local_gradient_adjoint(space, &r2x, &r2y, &mut outb);
            for q in 0..n_loc {
                outa[q] += data.a_x[base + q] * r1x[q]
                    + data.a_y[base + q] * r1y[q]
                    + data.c_x[base + q] * r2x[q]
                    + data.c_y[base + q] * r2y[q];
                outb[q] += data.b_x[base + q] * r1x[q]
                    + data.b_y[base + q] * r1y[q]
                    + data.d_x[base + q] * r2x[q]
                    + data.d_y[base + q] * r2y[q];
            }
            for i in 0..n1 {
                for j in 0..n1 {
                    let g = space.global_index(ex, ey, i, j);
                    rhs[g] += outa[i * n1 + j];
                    rhs[g + n] += outb[i * n1 + j];
                }
            }
        }
    }
    // zero-trace test space
    let scalar_mask = space.boundary_mask();
    for (i, &m) in scalar_mask.iter().enumerate() {
        if m {
            rhs[i] = 0.0;
            rhs[i + n] = 0.0;
        }
    }
    NormalSystem { op, rhs, lifting }
}

/// Result of a least-squares reconstruction.
pub struct Reconstruction {
    pub alpha: ScalarField,
    pub beta: ScalarField,
    pub cg: CgOutcome,
}

/// Solve the normal system by CG (plain by default, Jacobi optional) and add
/// back the lifting.
pub fn solve_least_squares(
    system: &NormalSystem,
    cg_tol: f64,
    max_iter: usize,
    jacobi: bool,
) -> Result<Reconstruction> {
    let n = system.lifting.alpha.values.len();
    let mut x = vec![0.0; 2 * n];
    let diag;
    let pre = if jacobi {
        diag = system.op.diagonal();
        Some(diag.as_slice())
    } else {
        None
    };
    let cg = conjugate_gradient(&system.op, &system.rhs, &mut x, cg_tol, max_iter, pre)?;
    let space = &system.lifting.alpha.space;
    let mut alpha = ScalarField { space: space.clone(), values: x[..n].to_vec() };
    let mut beta = ScalarField { space: space.clone(), values: x[n..].to_vec() };
    for i in 0..n {
        alpha.values[i] += system.lifting.alpha.values[i];
        beta.values[i] += system.lifting.beta.values[i];
    }
    Ok(Reconstruction { alpha, beta, cg })
}

/// Smallest Ritz value of the normal operator after `steps` Lanczos
/// iterations; positive for every well-posed assembled system.
pub fn smallest_ritz(data: &GradientSystemData, steps: usize, seed: u64) -> f64 {
    let op = NormalOperator::new(data);
    smallest_ritz_value(&op, steps, seed)
}

/// Squared H^1 norm of a scalar field, by Gauss quadrature (exact for the
/// polynomial integrand).
pub fn h1_norm_sq(f: &ScalarField) -> f64 {
    let space = &f.space;
    let n1 = space.n1();
    let rule = gauss_rule(n1);
    let ng = rule.nodes.len();
    // basis values and derivatives at the Gauss points
    let mut bv = vec![0.0; ng * n1];
    let mut bd = vec![0.0; ng * n1];
    for (p, &xg) in rule.nodes.iter().enumerate() {
        let (v, dv) = space.basis.values_and_derivs(xg);
        bv[p * n1..(p + 1) * n1].copy_from_slice(&v);
        bd[p * n1..(p + 1) * n1].copy_from_slice(&dv);
    }
    let sx = 2.0 / space.mesh.hx;
    let sy = 2.0 / space.mesh.hy;
    let jac = 0.25 * space.mesh.hx * space.mesh.hy;
    let mut local = vec![0.0; n1 * n1];
    let mut total = 0.0;
    for ex in 0..space.mesh.nx {
        for ey in 0..space.mesh.ny {
            for i in 0..n1 {
                for j in 0..n1 {
                    local[i * n1 + j] = f.values[space.global_index(ex, ey, i, j)];
                }
            }
            for p in 0..ng {
                for q in 0..ng {
                    let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
                    for i in 0..n1 {
                        for j in 0..n1 {
                            let c = local[i * n1 + j];
                            v += c * bv[p * n1 + i] * bv[q * n1 + j];
                            gx += c * bd[p * n1 + i] * bv[q * n1 + j];
                            gy += c * bv[p * n1 + i] * bd[q * n1 + j];
                        }
                    }
                    gx *= sx;
                    gy *= sy;
                    total += rule.weights[p] * rule.weights[q] * jac * (v * v + gx * gx + gy * gy);
                }
            }
        }
    }
    total
}

/// Relative H^1 error of a reconstructed pair against exact fields on the
/// same space: combined over both parameters, norm-weighted.
pub fn h1_relative_error(
    rec_alpha: &ScalarField,
    rec_beta: &ScalarField,
    exact_alpha: &ScalarField,
    exact_beta: &ScalarField,
) -> Result<f64> {
    let den = h1_norm_sq(exact_alpha) + h1_norm_sq(exact_beta);
    if den == 0.0 {
        return Err(Error::InvalidConfig("exact fields are identically zero".into()));
    }
    let mut da = rec_alpha.clone();
    da.axpy(-1.0, exact_alpha);
    let mut db = rec_beta.clone();
    db.axpy(-1.0, exact_beta);
    let num = h1_norm_sq(&da) + h1_norm_sq(&db);
    Ok((num / den).sqrt())
}

/// Per-parameter relative H^1 error.
pub fn h1_relative_error_single(rec: &ScalarField, exact: &ScalarField) -> Result<f64> {
    let den = h1_norm_sq(exact);
    if den == 0.0 {
        return Err(Error::InvalidConfig("exact field is identically zero".into()));
    }
    let mut d = rec.clone();
    d.axpy(-1.0, exact);
    Ok((h1_norm_sq(&d) / den).sqrt())
}

/// Polyline in the closed domain along which the gradient system is
/// integrated.
#[derive(Clone, Debug)]
pub struct CurveSpec {
    pub points: Vec<(f64, f64)>,
}

impl CurveSpec {
    pub fn segment(a: (f64, f64), b: (f64, f64)) -> Self {
        CurveSpec { points: vec![a, b] }
    }

    pub fn polyline(points: Vec<(f64, f64)>) -> Self {
        CurveSpec { points }
    }

    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .sum()
    }
}

/// Trajectory of the moduli along a curve.
#[derive(Clone, Debug)]
pub struct OdeTrajectory {
    /// `(alpha, beta)` at the end of every RK4 step (first entry is the
    /// initial value).
    pub values: Vec<(f64, f64)>,
    pub endpoint: (f64, f64),
    /// Endpoint difference against a run with halved steps.
    pub halving_gap: f64,
}

/// Integrate `phi' + M_gamma phi = f_gamma` along the polyline with
/// fixed-step RK4, `step` being the target spatial step length.
///
/// Fails if the curve leaves the domain or if the step-halving disagreement
/// at the endpoint exceeds `halving_tol` (pass `f64::INFINITY` to skip the
/// check).
pub fn integrate_ode(
    eval: &PointEvaluator,
    curve: &CurveSpec,
    initial: (f64, f64),
    step: f64,
    halving_tol: f64,
) -> Result<OdeTrajectory> {
    if curve.points.len() < 2 {
        return Err(Error::InvalidConfig("curve needs at least two points".into()));
    }
    for &(x, y) in &curve.points {
        if !eval.u[0].space.mesh.domain.contains(x, y) {
            return Err(Error::CurveOutsideDomain { x, y });
        }
    }
    let run = |substeps: usize| -> Result<Vec<(f64, f64)>> {
        let mut phi = [initial.0, initial.1];
        let mut values = vec![initial];
        for w in curve.points.windows(2) {
            let (p0, p1) = (w[0], w[1]);
            let dxi = (p1.0 - p0.0, p1.1 - p0.1);
            let seg_len = (dxi.0 * dxi.0 + dxi.1 * dxi.1).sqrt();
            let n_steps = ((seg_len / step).ceil() as usize).max(1) * substeps;
            let h = 1.0 / n_steps as f64;
            let clamp = |v: f64| v.clamp(0.0, 1.0);
            let rhs = |t: f64, phi: &[f64; 2]| -> Result<[f64; 2]> {
                let x = clamp(p0.0 + t * dxi.0);
                let y = clamp(p0.1 + t * dxi.1);
                let sys = eval.system_at(x, y)?;
                let m = [
                    [dxi.0 * sys.a[0] + dxi.1 * sys.a[1], dxi.0 * sys.b[0] + dxi.1 * sys.b[1]],
                    [dxi.0 * sys.c[0] + dxi.1 * sys.c[1], dxi.0 * sys.d[0] + dxi.1 * sys.d[1]],
                ];
                let f = [
                    dxi.0 * sys.f1[0] + dxi.1 * sys.f1[1],
                    dxi.0 * sys.f2[0] + dxi.1 * sys.f2[1],
                ];
                Ok([
                    f[0] - m[0][0] * phi[0] - m[0][1] * phi[1],
                    f[1] - m[1][0] * phi[0] - m[1][1] * phi[1],
                ])
            };
            let mut t = 0.0;
            for _ in 0..n_steps {
                let k1 = rhs(t, &phi)?;
                let p2 = [phi[0] + 0.5 * h * k1[0], phi[1] + 0.5 * h * k1[1]];
                let k2 = rhs(t + 0.5 * h, &p2)?;
                let p3 = [phi[0] + 0.5 * h * k2[0], phi[1] + 0.5 * h * k2[1]];
                let k3 = rhs(t + 0.5 * h, &p3)?;
                let p4 = [phi[0] + h * k3[0], phi[1] + h * k3[1]];
                let k4 = rhs(t + h, &p4)?;
                for i in 0..2 {
                    phi[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                t += h;
                values.push((phi[0], phi[1]));
            }
        }
        Ok(values)
    };
    let coarse = run(1)?;
    let fine = run(2)?;
    let end_c = *coarse.last().unwrap();
    let end_f = *fine.last().unwrap();
    let gap = ((end_c.0 - end_f.0).powi(2) + (end_c.1 - end_f.1).powi(2)).sqrt();
    if gap > halving_tol {
        return Err(Error::InvalidConfig(format!(
            "ODE step too large: halving changes the endpoint by {gap:.3e}"
        )));
    }
    Ok(OdeTrajectory { values: coarse, endpoint: end_c, halving_gap: gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::differentiate::{hessian_from_projection, strain_from_projection, ProjectionPlan};
    use crate::fem::mesh::MeshSpec;
    use crate::forward::{synthesize_moduli, DirichletBc, ModuliSpec};
    use crate::linalg::dot;
    use crate::pointwise::{build_gradient_system, DegeneracyPolicy, SystemParams};

    fn space(n: usize, r: usize) -> FeSpace {
        FeSpace::conforming(MeshSpec::unit_square(n).unwrap(), r).unwrap()
    }

    /// Gradient system data from the analytic prototype pair on a given
    /// space (static case, constant moduli): M and f vanish identically.
    fn prototype_data(s: &FeSpace) -> GradientSystemData {
        let u1 = s.interpolate_vector(|x, y| (1.0 + y, 1.0 + x));
        let u2 = s.interpolate_vector(|x, y| (1.0 + x, 1.0 + y));
        let plan = ProjectionPlan::new(s, 1, s.r).unwrap();
        let (e1, _) = strain_from_projection(&u1, &plan);
        let (e2, _) = strain_from_projection(&u2, &plan);
        let (h1, _) = hessian_from_projection(&u1, &plan).unwrap();
        let (h2, _) = hessian_from_projection(&u2, &plan).unwrap();
        build_gradient_system(
            &e1,
            &e2,
            &h1,
            &h2,
            &u1,
            &u2,
            &SystemParams::static_case(1.0, 1e-8),
            DegeneracyPolicy::Abort,
        )
        .unwrap()
    }

    #[test]
    fn prototype_data_vanishes() {
        let s = space(4, 5);
        let d = prototype_data(&s);
        // the projection route leaves second-derivative round-off of order
        // eps * (2 nx)^2 * max|P''_r| in the hessian data (measured 2.3e-11
        // on this grid); the exact-strain route in `pointwise` is identically
        // zero
        assert!(d.coefficient_sup() <= 1e-9);
        assert!(d.rhs_sup() <= 1e-15);
        assert!((d.report.min_abs_det_e - 4.0).abs() < 1e-10);
    }

    #[test]
    fn lifting_matches_trace_exactly() {
        let s = space(5, 4);
        let lift = build_lifting(|x, y| 22.0 + x * y, |_, _| 2.0, &s);
        let (nx, ny) = (s.nodes_x(), s.nodes_y());
        for gy in 0..ny {
            for gx in 0..nx {
                let (x, y) = s.node_coords(gx, gy);
                let expect = if s.is_boundary_node(gx, gy) { 22.0 + x * y } else { 0.0 };
                assert_eq!(lift.alpha.values[gy * nx + gx], expect);
            }
        }
    }

    #[test]
    fn zero_data_constant_trace_reconstructs_constant() {
        // with M = 0, f = 0 the normal system is a pair of Dirichlet
        // Laplacians; the harmonic extension of a constant is the constant
        let s = space(4, 5);
        let d = prototype_data(&s);
        let lift = build_lifting(|_, _| 22.0, |_, _| 2.0, &s);
        let sys = assemble_normal_system(&d, lift);
        let rec = solve_least_squares(&sys, 1e-12, 10_000, false).unwrap();
        for v in &rec.alpha.values {
            assert!((v - 22.0).abs() < 1e-9);
        }
        for v in &rec.beta.values {
            assert!((v - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normal_operator_is_self_adjoint_and_psd() {
        let s = space(3, 5);
        let d = prototype_data(&s);
        let op = NormalOperator::new(&d);
        let n = op.dim();
        let x: Vec<f64> = (0..n).map(|i| ((i * 29 % 97) as f64 - 48.0) / 48.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 43 % 83) as f64 - 41.0) / 41.0).collect();
        let mut ax = vec![0.0; n];
        let mut ay = vec![0.0; n];
        op.apply(&x, &mut ax);
        op.apply(&y, &mut ay);
        let asym = (dot(&ax, &y) - dot(&x, &ay)).abs() / dot(&ax, &y).abs().max(1e-30);
        assert!(asym < 1e-12, "asymmetry {asym}");
        assert!(dot(&ax, &x) > 0.0);
    }

    #[test]
    fn quadratic_form_matches_independent_quadrature() {
        // <L(ta, tb), L(ta, tb)> via the operator vs a direct loop over
        // quadrature points with field evaluation
        let s = space(3, 5);
        let mut d = prototype_data(&s);
        // make the data nontrivial but known: set a = (1, 0), d = (0, 2)
        for v in d.a_x.iter_mut() {
            *v = 1.0;
        }
        for v in d.d_y.iter_mut() {
            *v = 2.0;
        }
        let ta = s.interpolate(|x, y| x * (1.0 - x) * y);
        let tb = s.interpolate(|x, y| (x + 0.3) * (y * y - y));
        let op = NormalOperator::new(&d);
        let mut x = ta.values.clone();
        x.extend_from_slice(&tb.values);
        let form = op.quadratic_form(&x);

        // independent: at every GLL point of every element compute
        // |grad ta + a ta + b tb|^2 + |grad tb + c ta + d tb|^2
        let w = gll_weights(&s);
        let n1 = s.n1();
        let mut brute = 0.0;
        for ex in 0..s.mesh.nx {
            for ey in 0..s.mesh.ny {
                let pts = crate::fem::assemble::gll_points(&s, ex, ey);
                for (q, &(x, y)) in pts.iter().enumerate() {
                    let (va, gax, gay) = ta.eval_with_grad(x, y).unwrap();
                    let (vb, gbx, gby) = tb.eval_with_grad(x, y).unwrap();
                    let l1 = [gax + 1.0 * va, gay];
                    let l2 = [gbx, gby + 2.0 * vb];
                    brute += w[q] * (l1[0] * l1[0] + l1[1] * l1[1] + l2[0] * l2[0] + l2[1] * l2[1]);
                }
            }
        }
        // eval_with_grad on element boundaries picks one owner; GLL edge
        // points are shared but the fields are continuous, so values agree
        assert!(
            (form - brute).abs() <= 1e-10 * brute.abs(),
            "form {form} vs brute {brute}"
        );
    }

    #[test]
    fn h1_error_of_identical_fields_is_zero() {
        let s = space(3, 5);
        let f = s.interpolate(|x, y| 1.0 + x + y * y);
        assert_eq!(h1_relative_error(&f, &f, &f, &f).unwrap(), 0.0);
    }

    #[test]
    fn h1_error_homogeneity() {
        let s = space(4, 5);
        let a = s.interpolate(|x, y| 22.0 + (x * 2.0).sin() * y);
        let b = s.interpolate(|x, y| 2.0 + x * y);
        let mut ra = a.clone();
        let mut rb = b.clone();
        for v in ra.values.iter_mut() {
            *v *= 1.1;
        }
        for v in rb.values.iter_mut() {
            *v *= 1.1;
        }
        let err = h1_relative_error(&ra, &rb, &a, &b).unwrap();
        assert!((err - 0.1).abs() < 1e-12);
    }

    #[test]
    fn h1_error_rejects_zero_exact() {
        let s = space(2, 3);
        let z = ScalarField::zeros(&s);
        assert!(h1_relative_error(&z, &z, &z, &z).is_err());
    }

    #[test]
    fn ritz_value_positive_for_prototype_system() {
        let s = space(3, 5);
        let d = prototype_data(&s);
        let ritz = smallest_ritz(&d, 20, 12345);
        assert!(ritz > 0.0, "ritz = {ritz}");
    }

    #[test]
    fn ode_constant_data_keeps_initial_values() {
        // M = 0, f = 0: phi stays at its initial value along any curve
        let s = space(4, 5);
        let u1 = s.interpolate_vector(|x, y| (1.0 + y, 1.0 + x));
        let u2 = s.interpolate_vector(|x, y| (1.0 + x, 1.0 + y));
        let plan = ProjectionPlan::new(&s, 1, 5).unwrap();
        let eval = PointEvaluator {
            strain_proj: [
                crate::differentiate::project_displacement(&u1, &plan),
                crate::differentiate::project_displacement(&u2, &plan),
            ],
            hessian_proj: [
                crate::differentiate::project_displacement(&u1, &plan),
                crate::differentiate::project_displacement(&u2, &plan),
            ],
            u: [u1, u2],
            params: SystemParams::static_case(1.0, 1e-8),
        };
        let curve = CurveSpec::polyline(vec![(0.1, 0.1), (0.9, 0.2), (0.5, 0.8)]);
        let traj = integrate_ode(&eval, &curve, (22.0, 2.0), 1.0 / 16.0, 1e-8).unwrap();
        assert!((traj.endpoint.0 - 22.0).abs() < 1e-10);
        assert!((traj.endpoint.1 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ode_rejects_curves_leaving_domain() {
        let s = space(2, 3);
        let u = s.interpolate_vector(|x, y| (x, y));
        let plan = ProjectionPlan::new(&s, 1, 3).unwrap();
        let proj = crate::differentiate::project_displacement(&u, &plan);
        let eval = PointEvaluator {
            strain_proj: [proj.clone(), proj.clone()],
            hessian_proj: [proj.clone(), proj],
            u: [u.clone(), u],
            params: SystemParams::static_case(1.0, 1e-8),
        };
        let curve = CurveSpec::segment((0.5, 0.5), (1.5, 0.5));
        assert!(integrate_ode(&eval, &curve, (1.0, 1.0), 0.1, 1e30).is_err());
    }

    #[test]
    fn reconstruction_floor_with_exact_prototype_data() {
        // exact data, constant boundary trace: constants recovered to 1e-9
        let s = space(6, 5);
        let d = prototype_data(&s);
        let lift = build_lifting(|_, _| 7.0, |_, _| 3.0, &s);
        let sys = assemble_normal_system(&d, lift);
        let rec = solve_least_squares(&sys, 1e-12, 20_000, false).unwrap();
        let ea = ScalarField::constant(&s, 7.0);
        let eb = ScalarField::constant(&s, 3.0);
        let err = h1_relative_error(&rec.alpha, &rec.beta, &ea, &eb).unwrap();
        assert!(err < 1e-9, "floor {err}");
    }

    #[test]
    fn forward_plus_reconstruction_smoke() {
        // tiny end-to-end: constant moduli, static BCs, exact recovery of
        // the constants through the whole pipeline
        let s = space(4, 5);
        let moduli = ModuliSpec::constant(22.0, 2.0).resolve().unwrap();
        let mat = synthesize_moduli(&moduli, &s, 1.0).unwrap();
        let (u1, _) = crate::forward::solve_forward(&mat, 0.0, DirichletBc::ShearLinear, &s, 1e-12).unwrap();
        let (u2, _) = crate::forward::solve_forward(&mat, 0.0, DirichletBc::DilationLinear, &s, 1e-12).unwrap();
        let plan = ProjectionPlan::new(&s, 2, 5).unwrap();
        let (e1, _) = strain_from_projection(&u1, &plan);
        let (e2, _) = strain_from_projection(&u2, &plan);
        let (h1, _) = hessian_from_projection(&u1, &plan).unwrap();
        let (h2, _) = hessian_from_projection(&u2, &plan).unwrap();
        let d = build_gradient_system(
            &e1,
            &e2,
            &h1,
            &h2,
            &u1,
            &u2,
            &SystemParams::static_case(1.0, 1e-8),
            DegeneracyPolicy::Abort,
        )
        .unwrap();
        let lift = build_lifting(|_, _| 22.0, |_, _| 2.0, &s);
        let sys = assemble_normal_system(&d, lift);
        let rec = solve_least_squares(&sys, 1e-12, 20_000, false).unwrap();
        let ea = ScalarField::constant(&s, 22.0);
        let eb = ScalarField::constant(&s, 2.0);
        let err = h1_relative_error(&rec.alpha, &rec.beta, &ea, &eb).unwrap();
        assert!(err < 1e-7, "end-to-end constant error {err}");
    }
}
