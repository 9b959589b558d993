//! Forward elasticity solver and synthetic data generation.
//!
//! Solves the time-harmonic momentum balance for an isotropic body whose
//! elasticity tensor is parameterized by its two eigenvalues `(alpha, beta)`:
//! the weak form of
//!
//! ```text
//! div( (alpha/d) tr(eps(u)) I + beta eps_D(u) ) + rho omega^2 u = 0,
//! u = g on the boundary,
//! ```
//!
//! discretized with continuous nodal elements, Gauss-Lobatto collocation and
//! conjugate gradients after Dirichlet elimination. The module also provides
//! the closed-form moduli distributions (base value plus radial bumps) and the
//! linear prototype displacement pair used in degenerate-case checks.

use crate::error::{Error, Result};
use crate::fem::assemble::{gll_weights, local_gradient, local_gradient_adjoint};
use crate::fem::space::{FeSpace, ScalarField, VectorField};
use crate::linalg::{conjugate_gradient, CgOutcome, LinearOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Radial cutoff: 1 inside `r_minus`, 0 outside `r_plus`, cubic blend
/// `(1 - s)^2 (1 + 2 s)` in between. C^1 across both junctions.
pub fn cutoff(rad: f64, r_minus: f64, r_plus: f64) -> Result<f64> {
    if r_minus >= r_plus {
        return Err(Error::InvalidCutoff { r_minus, r_plus });
    }
    Ok(if rad < r_minus {
        1.0
    } else if rad > r_plus {
        0.0
    } else {
        let s = (rad - r_minus) / (r_plus - r_minus);
        (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s)
    })
}

/// One radial inclusion of a modulus field.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: (f64, f64),
    pub r_minus: f64,
    pub r_plus: f64,
}

impl Bump {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let rad = ((x - self.center.0).powi(2) + (y - self.center.1).powi(2)).sqrt();
        self.amplitude
            * cutoff(rad, self.r_minus, self.r_plus).expect("validated bump")
    }

    fn validate(&self) -> Result<()> {
        if self.r_minus >= self.r_plus {
            return Err(Error::InvalidCutoff { r_minus: self.r_minus, r_plus: self.r_plus });
        }
        Ok(())
    }
}

/// Generator for a cloud of random bumps with uniform distributions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomBumps {
    pub count: usize,
    pub amplitude: (f64, f64),
    /// Inner radius range; the outer radius is `r_minus + width`.
    pub r_minus: (f64, f64),
    pub width: (f64, f64),
}

/// Closed-form description of the two moduli distributions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuliSpec {
    pub alpha0: f64,
    pub beta0: f64,
    #[serde(default)]
    pub alpha_bumps: Vec<Bump>,
    #[serde(default)]
    pub beta_bumps: Vec<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_alpha: Option<RandomBumps>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_beta: Option<RandomBumps>,
    #[serde(default)]
    pub seed: u64,
}

impl ModuliSpec {
    pub fn constant(alpha0: f64, beta0: f64) -> Self {
        ModuliSpec {
            alpha0,
            beta0,
            alpha_bumps: Vec::new(),
            beta_bumps: Vec::new(),
            random_alpha: None,
            random_beta: None,
            seed: 0,
        }
    }

    /// Materialize random bumps (if any) into explicit bump lists.
    /// Deterministic for a fixed seed.
    pub fn resolve(&self) -> Result<ResolvedModuli> {
        let mut alpha_bumps = self.alpha_bumps.clone();
        let mut beta_bumps = self.beta_bumps.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = |gen: &RandomBumps, out: &mut Vec<Bump>| {
            for _ in 0..gen.count {
                let cx = rng.gen_range(0.0..1.0);
                let cy = rng.gen_range(0.0..1.0);
                let amplitude = rng.gen_range(gen.amplitude.0..gen.amplitude.1);
                let r_minus = rng.gen_range(gen.r_minus.0..gen.r_minus.1);
                let width = rng.gen_range(gen.width.0..gen.width.1);
                out.push(Bump { amplitude, center: (cx, cy), r_minus, r_plus: r_minus + width });
            }
        };
        if let Some(gen) = &self.random_alpha {
            draw(gen, &mut alpha_bumps);
        }
        if let Some(gen) = &self.random_beta {
            draw(gen, &mut beta_bumps);
        }
        for b in alpha_bumps.iter().chain(&beta_bumps) {
            b.validate()?;
        }
        Ok(ResolvedModuli { alpha0: self.alpha0, beta0: self.beta0, alpha_bumps, beta_bumps })
    }
}

/// Moduli with all bumps explicit; supports pointwise evaluation.
#[derive(Clone, Debug)]
pub struct ResolvedModuli {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha_bumps: Vec<Bump>,
    pub beta_bumps: Vec<Bump>,
}

impl ResolvedModuli {
    pub fn alpha(&self, x: f64, y: f64) -> f64 {
        self.alpha0 + self.alpha_bumps.iter().map(|b| b.eval(x, y)).sum::<f64>()
    }

    pub fn beta(&self, x: f64, y: f64) -> f64 {
        self.beta0 + self.beta_bumps.iter().map(|b| b.eval(x, y)).sum::<f64>()
    }
}

/// Nodal moduli fields plus the mass density.
#[derive(Clone, Debug)]
pub struct MaterialField {
    pub alpha: ScalarField,
    pub beta: ScalarField,
    pub rho: f64,
}

/// Interpolate the closed-form moduli onto a conforming space, checking
/// positivity at the nodes.
pub fn synthesize_moduli(moduli: &ResolvedModuli, space: &FeSpace, rho: f64) -> Result<MaterialField> {
    let alpha = space.interpolate(|x, y| moduli.alpha(x, y));
    let beta = space.interpolate(|x, y| moduli.beta(x, y));
    let amin = alpha.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let bmin = beta.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if amin <= 0.0 || bmin <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "moduli must stay positive; min alpha = {amin}, min beta = {bmin}"
        )));
    }
    Ok(MaterialField { alpha, beta, rho })
}

/// The linear displacement pair with constant strains: `u1 . e_j = sum_{i != j}
/// x_i` and `u2 = x`. Then `eps1` is the all-ones matrix minus identity
/// (trace 0), `eps2 = I` (trace d), and `E = -t2 eps1` is nowhere singular.
#[derive(Clone, Copy, Debug)]
pub struct PrototypeFields {
    pub d: usize,
}

pub fn prototype_fields(d: usize) -> PrototypeFields {
    PrototypeFields { d }
}

impl PrototypeFields {
    pub fn u1(&self, x: &[f64]) -> Vec<f64> {
        let sum: f64 = x.iter().sum();
        x.iter().map(|xi| sum - xi).collect()
    }

    pub fn u2(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    /// Constant strain of `u1`: ones matrix minus identity.
    pub fn strain1(&self) -> Vec<f64> {
        let d = self.d;
        let mut e = vec![1.0; d * d];
        for i in 0..d {
            e[i * d + i] = 0.0;
        }
        e
    }

    /// Constant strain of `u2`: identity.
    pub fn strain2(&self) -> Vec<f64> {
        let d = self.d;
        let mut e = vec![0.0; d * d];
        for i in 0..d {
            e[i * d + i] = 1.0;
        }
        e
    }

    pub fn trace1(&self) -> f64 {
        0.0
    }

    pub fn trace2(&self) -> f64 {
        self.d as f64
    }

    pub fn det_strain1(&self) -> f64 {
        let d = self.d as i32;
        (-1.0f64).powi(d - 1) * (d as f64 - 1.0)
    }
}

/// Dirichlet boundary data, one closed-form vector function per measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirichletBc {
    /// `(1 + y, 1 + x)`: trace-free strain, the first static-case datum.
    ShearLinear,
    /// `(1 + x, 1 + y)`: identity strain, the second static-case datum.
    DilationLinear,
    /// `(1 + x + y) (e1 - e2)`: trace-free datum of the frequency case.
    SkewLinear,
    /// Identically zero.
    Zero,
}

impl DirichletBc {
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            DirichletBc::ShearLinear => (1.0 + y, 1.0 + x),
            DirichletBc::DilationLinear => (1.0 + x, 1.0 + y),
            DirichletBc::SkewLinear => (1.0 + x + y, -(1.0 + x + y)),
            DirichletBc::Zero => (0.0, 0.0),
        }
    }
}

/// Matrix-free discrete elasticity operator with Dirichlet rows replaced by
/// identity. Element kernels are pure; the element loop runs in lexicographic
/// order so results are bit-reproducible.
pub struct ElasticOperator {
    pub space: FeSpace,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    rho_om2: f64,
    mask: Vec<bool>,
    w: Vec<f64>,
}

impl ElasticOperator {
    pub fn new(material: &MaterialField, omega: f64, space: &FeSpace) -> Self {
        let scalar_mask = space.boundary_mask();
        let mut mask = scalar_mask.clone();
        mask.extend_from_slice(&scalar_mask);
        ElasticOperator {
            space: space.clone(),
            alpha: material.alpha.values.clone(),
            beta: material.beta.values.clone(),
            rho_om2: material.rho * omega * omega,
            mask,
            w: gll_weights(space),
        }
    }

    fn n_scalar(&self) -> usize {
        self.space.dof_count()
    }

    /// `y += A x` without boundary masking.
    pub fn apply_raw(&self, x: &[f64], y: &mut [f64]) {
        let space = &self.space;
        let n1 = space.n1();
        let n_loc = space.n_loc();
        let n = self.n_scalar();
        let (ux, uy) = x.split_at(n);

        let mut lx = vec![0.0; n_loc];
        let mut ly = vec![0.0; n_loc];
        let mut la = vec![0.0; n_loc];
        let mut lb = vec![0.0; n_loc];
        let mut dxux = vec![0.0; n_loc];
        let mut dyux = vec![0.0; n_loc];
        let mut dxuy = vec![0.0; n_loc];
        let mut dyuy = vec![0.0; n_loc];
        let mut sxx = vec![0.0; n_loc];
        let mut syy = vec![0.0; n_loc];
        let mut sxy = vec![0.0; n_loc];
        let mut outx = vec![0.0; n_loc];
        let mut outy = vec![0.0; n_loc];

        for ex in 0..space.mesh.nx {
            for ey in 0..space.mesh.ny {
                for i in 0..n1 {
                    for j in 0..n1 {
                        let g = space.global_index(ex, ey, i, j);
                        let l = i * n1 + j;
                        lx[l] = ux[g];
                        ly[l] = uy[g];
                        la[l] = self.alpha[g];
                        lb[l] = self.beta[g];
                    }
                }
                local_gradient(space, &lx, &mut dxux, &mut dyux);
                local_gradient(space, &ly, &mut dxuy, &mut dyuy);
                for q in 0..n_loc {
                    let exx = dxux[q];
                    let eyy = dyuy[q];
                    let exy = 0.5 * (dyux[q] + dxuy[q]);
                    let t = exx + eyy;
                    // sigma = (alpha/2) t I + beta eps_D in 2D
                    let hydro = 0.5 * la[q] * t;
                    let w = self.w[q];
                    sxx[q] = w * (hydro + lb[q] * (exx - 0.5 * t));
                    syy[q] = w * (hydro + lb[q] * (eyy - 0.5 * t));
                    sxy[q] = w * lb[q] * exy;
                }
                outx.fill(0.0);
                outy.fill(0.0);
                local_gradient_adjoint(space, &sxx, &sxy, &mut outx);
                local_gradient_adjoint(space, &sxy, &syy, &mut outy);
                if self.rho_om2 != 0.0 {
                    for q in 0..n_loc {
                        let wm = self.rho_om2 * self.w[q];
                        outx[q] -= wm * lx[q];
                        outy[q] -= wm * ly[q];
                    }
                }
                for i in 0..n1 {
                    for j in 0..n1 {
                        let g = space.global_index(ex, ey, i, j);
                        let l = i * n1 + j;
                        y[g] += outx[l];
                        y[g + n] += outy[l];
                    }
                }
            }
        }
    }
}

impl LinearOperator for ElasticOperator {
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
        let n = self.n_scalar();
        let d = &space.basis.diff;
        let sx = 2.0 / space.mesh.hx;
        let sy = 2.0 / space.mesh.hy;
        let mut diag = vec![0.0; 2 * n];
        for ex in 0..space.mesh.nx {
            for ey in 0..space.mesh.ny {
                for i in 0..n1 {
                    for j in 0..n1 {
                        let g = space.global_index(ex, ey, i, j);
                        // a(phi, phi) for the x-component basis at (i, j):
                        // exx = D[p][i] delta_{jq} sx at points (p, j),
                        // exy = 0.5 D[q][j] sy at points (i, q)
                        let mut acc_x = 0.0;
                        let mut acc_y = 0.0;
                        for p in 0..n1 {
                            let gp = space.global_index(ex, ey, p, j);
                            let w = self.w[p * n1 + j];
                            let gx = d[p * n1 + i] * sx;
                            // t = gx, dev = diag(gx/2, -gx/2)
                            acc_x += w * 0.5 * (self.alpha[gp] + self.beta[gp]) * gx * gx;
                        }
                        for q in 0..n1 {
                            let gq = space.global_index(ex, ey, i, q);
                            let w = self.w[i * n1 + q];
                            let gy = d[q * n1 + j] * sy;
                            acc_x += w * self.beta[gq] * 0.5 * gy * gy;
                            acc_y += w * 0.5 * (self.alpha[gq] + self.beta[gq]) * gy * gy;
                        }
                        for p in 0..n1 {
                            let gp = space.global_index(ex, ey, p, j);
                            let w = self.w[p * n1 + j];
                            let gx = d[p * n1 + i] * sx;
                            acc_y += w * self.beta[gp] * 0.5 * gx * gx;
                        }
                        let wm = self.rho_om2 * self.w[i * n1 + j];
                        diag[g] += acc_x - wm;
                        diag[g + n] += acc_y - wm;
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

/// Outcome of a forward solve.
#[derive(Clone, Copy, Debug)]
pub struct ForwardReport {
    pub cg: CgOutcome,
}

/// Galerkin solution of the forward problem with Dirichlet data `g`.
///
/// Boundary values are imposed by nodal interpolation and lifted; the
/// interior block stays symmetric positive definite for `rho omega^2` below
/// the first Dirichlet eigenvalue, and indefiniteness is detected at run time
/// by the CG recurrence.
pub fn solve_forward(
    material: &MaterialField,
    omega: f64,
    bc: DirichletBc,
    space: &FeSpace,
    cg_tol: f64,
) -> Result<(VectorField, ForwardReport)> {
    solve_forward_with(material, omega, |x, y| bc.eval(x, y), space, cg_tol)
}

/// Same as [`solve_forward`] with an arbitrary boundary function.
pub fn solve_forward_with(
    material: &MaterialField,
    omega: f64,
    g: impl Fn(f64, f64) -> (f64, f64),
    space: &FeSpace,
    cg_tol: f64,
) -> Result<(VectorField, ForwardReport)> {
    let op = ElasticOperator::new(material, omega, space);
    let n = space.dof_count();
    let (nx, ny) = (space.nodes_x(), space.nodes_y());

    // boundary lifting
    let mut lift = vec![0.0; 2 * n];
    for gy in 0..ny {
        for gx in 0..nx {
            if space.is_boundary_node(gx, gy) {
                let (x, y) = space.node_coords(gx, gy);
                let (vx, vy) = g(x, y);
                lift[gy * nx + gx] = vx;
                lift[gy * nx + gx + n] = vy;
            }
        }
    }

    let mut b = vec![0.0; 2 * n];
    op.apply_raw(&lift, &mut b);
    for (bi, &m) in b.iter_mut().zip(&op.mask) {
        *bi = if m { 0.0 } else { -*bi };
    }

    let mut u0 = vec![0.0; 2 * n];
    let cg = conjugate_gradient(&op, &b, &mut u0, cg_tol, 200_000, None)?;

    let mut x_vals = vec![0.0; n];
    let mut y_vals = vec![0.0; n];
    for i in 0..n {
        x_vals[i] = u0[i] + lift[i];
        y_vals[i] = u0[i + n] + lift[i + n];
    }
    Ok((
        VectorField { space: space.clone(), x: x_vals, y: y_vals },
        ForwardReport { cg },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::MeshSpec;
    use crate::linalg::dot;

    fn space(n: usize, r: usize) -> FeSpace {
        FeSpace::conforming(MeshSpec::unit_square(n).unwrap(), r).unwrap()
    }

    #[test]
    fn cutoff_plateau_and_tail() {
        assert_eq!(cutoff(0.05, 0.1, 0.2).unwrap(), 1.0);
        assert_eq!(cutoff(0.3, 0.1, 0.2).unwrap(), 0.0);
        // blend midpoint: (1 - 1/2)^2 (1 + 1) = 1/2
        assert!((cutoff(0.15, 0.1, 0.2).unwrap() - 0.5).abs() < 1e-15);
        assert!(cutoff(0.1, 0.2, 0.2).is_err());
    }

    #[test]
    fn cutoff_is_c1_at_junctions() {
        let h = 1e-9;
        for r in [0.1, 0.2] {
            let d = (cutoff(r + h, 0.1, 0.2).unwrap() - cutoff(r - h, 0.1, 0.2).unwrap()) / (2.0 * h);
            assert!(d.abs() < 1e-6, "slope {d} at junction {r}");
        }
    }

    #[test]
    fn constant_spec_interpolates_to_constants() {
        let s = space(4, 5);
        let m = synthesize_moduli(&ModuliSpec::constant(22.0, 2.0).resolve().unwrap(), &s, 1.0).unwrap();
        assert!(m.alpha.values.iter().all(|&v| (v - 22.0).abs() < 1e-14));
        assert!(m.beta.values.iter().all(|&v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn static_bump_values() {
        // alpha(center) = 22 + 18, alpha at corners = 22
        let s = space(8, 5);
        let mut spec = ModuliSpec::constant(22.0, 2.0);
        spec.alpha_bumps.push(Bump { amplitude: 18.0, center: (0.5, 0.5), r_minus: 0.1, r_plus: 0.2 });
        let m = synthesize_moduli(&spec.resolve().unwrap(), &s, 1.0).unwrap();
        assert!((m.alpha.eval(0.5, 0.5).unwrap() - 40.0).abs() < 1e-12);
        for &(x, y) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            assert!((m.alpha.eval(x, y).unwrap() - 22.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_spec_is_deterministic() {
        let mut spec = ModuliSpec::constant(22.0, 2.0);
        spec.random_alpha = Some(RandomBumps {
            count: 1000,
            amplitude: (-2.0, 2.0),
            r_minus: (0.01, 0.025),
            width: (0.01, 0.025),
        });
        spec.seed = 42;
        let a = spec.resolve().unwrap();
        let b = spec.resolve().unwrap();
        assert_eq!(a.alpha_bumps.len(), 1000);
        for (x, y) in a.alpha_bumps.iter().zip(&b.alpha_bumps) {
            assert_eq!(x.amplitude, y.amplitude);
            assert_eq!(x.center, y.center);
        }
    }

    #[test]
    fn prototype_constants() {
        let p = prototype_fields(2);
        assert_eq!(p.strain1(), vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(p.trace2(), 2.0);
        assert_eq!(p.det_strain1(), -1.0);
        // det E = det(-t2 eps1) = 4 * det(eps1) = -4
        let det_e = p.trace2().powi(2) * p.det_strain1();
        assert_eq!(det_e, -4.0);
        let p3 = prototype_fields(3);
        assert_eq!(p3.det_strain1(), 2.0);
        assert_eq!(p3.u1(&[1.0, 2.0, 3.0]), vec![5.0, 4.0, 3.0]);
    }

    #[test]
    fn operator_is_self_adjoint() {
        let s = space(3, 5);
        let m = synthesize_moduli(&ModuliSpec::constant(3.0, 1.5).resolve().unwrap(), &s, 1.0).unwrap();
        let op = ElasticOperator::new(&m, 0.7, &s);
        let n = op.dim();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 61 % 89) as f64 - 44.0) / 44.0).collect();
        let mut ax = vec![0.0; n];
        let mut ay = vec![0.0; n];
        op.apply(&x, &mut ax);
        op.apply(&y, &mut ay);
        let lhs = dot(&ax, &y);
        let rhs = dot(&x, &ay);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn diagonal_matches_operator_action() {
        let s = space(2, 3);
        let m = synthesize_moduli(&ModuliSpec::constant(5.0, 2.0).resolve().unwrap(), &s, 1.0).unwrap();
        let op = ElasticOperator::new(&m, 0.4, &s);
        let n = op.dim();
        let diag = op.diagonal();
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for i in (0..n).step_by(7) {
            e.fill(0.0);
            e[i] = 1.0;
            op.apply(&e, &mut col);
            assert!(
                (col[i] - diag[i]).abs() <= 1e-12 * diag[i].abs().max(1.0),
                "diag mismatch at {i}: {} vs {}",
                col[i],
                diag[i]
            );
        }
    }

    #[test]
    fn reproduces_linear_solutions_exactly() {
        let s = space(4, 5);
        let m = synthesize_moduli(&ModuliSpec::constant(22.0, 2.0).resolve().unwrap(), &s, 1.0).unwrap();
        let (u, _) = solve_forward(&m, 0.0, DirichletBc::ShearLinear, &s, 1e-12).unwrap();
        let exact = s.interpolate_vector(|x, y| (1.0 + y, 1.0 + x));
        assert!(u.max_abs_diff(&exact) < 1e-9);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let s = space(3, 4);
        let m = synthesize_moduli(&ModuliSpec::constant(4.0, 1.0).resolve().unwrap(), &s, 1.0).unwrap();
        let (u, _) = solve_forward(&m, 0.0, DirichletBc::Zero, &s, 1e-12).unwrap();
        let zero = VectorField::zeros(&s);
        assert!(u.max_abs_diff(&zero) == 0.0);
    }

    #[test]
    fn solution_invariant_under_moduli_scaling_at_omega_zero() {
        let s = space(3, 5);
        let mut spec = ModuliSpec::constant(22.0, 2.0);
        spec.alpha_bumps.push(Bump { amplitude: 6.0, center: (0.4, 0.6), r_minus: 0.1, r_plus: 0.3 });
        let res = spec.resolve().unwrap();
        let m1 = synthesize_moduli(&res, &s, 1.0).unwrap();
        let mut m2 = m1.clone();
        for v in m2.alpha.values.iter_mut().chain(m2.beta.values.iter_mut()) {
            *v *= 3.5;
        }
        let (u1, _) = solve_forward(&m1, 0.0, DirichletBc::DilationLinear, &s, 1e-13).unwrap();
        let (u2, _) = solve_forward(&m2, 0.0, DirichletBc::DilationLinear, &s, 1e-13).unwrap();
        assert!(u1.max_abs_diff(&u2) < 1e-9);
    }
}
