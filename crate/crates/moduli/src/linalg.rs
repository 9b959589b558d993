//! Sparse symmetric linear algebra: CSR storage, conjugate gradients and a
//! Lanczos estimate of the smallest Ritz value.
//!
//! Operators are abstracted behind [`LinearOperator`] so that solvers work
//! both with assembled matrices and with matrix-free element-wise kernels.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Matrix diagonal, used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from triplets, summing duplicates. Deterministic: triplets are
    /// sorted by (row, col) with a stable sort before merging.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> Csr {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                last = Some((r, c));
            }
            indptr[r as usize + 1] = indices.len();
        }
        // prefix-max to make indptr monotone over empty rows
        for i in 1..=n {
            if indptr[i] < indptr[i - 1] {
                indptr[i] = indptr[i - 1];
            }
        }
        Csr { n, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        match self.indices[lo..hi].binary_search(&(c as u32)) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k] as usize;
                if c > r {
                    worst = worst.max((self.values[k] - self.get(c, r)).abs());
                }
            }
        }
        worst / scale
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.values[self.indptr[r]..self.indptr[r + 1]].iter().sum()
    }
}

impl LinearOperator for Csr {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            y[r] = acc;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }
}

/// Outcome of a converged CG solve.
#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for symmetric positive definite
/// operators. `x` holds the initial guess on entry and the solution on exit.
///
/// Stops when `||r|| <= tol * ||b||`. Negative curvature is reported as
/// [`Error::IndefiniteOperator`] with the iteration index; running out of
/// iterations reports the final relative residual.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    jacobi: Option<&[f64]>,
) -> Result<CgOutcome> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let inv_diag: Option<Vec<f64>> = jacobi.map(|d| {
        d.iter().map(|&v| if v.abs() > 0.0 { 1.0 / v } else { 1.0 }).collect()
    });

    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome { iterations: 0, relative_residual: 0.0 });
    }

    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = match &inv_diag {
        Some(d) => r.iter().zip(d).map(|(ri, di)| ri * di).collect::<Vec<_>>(),
        None => r.clone(),
    };
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        let res = norm(&r) / b_norm;
        if res <= tol {
            return Ok(CgOutcome { iterations: it, relative_residual: res });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::IndefiniteOperator { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        match &inv_diag {
            Some(d) => {
                for i in 0..n {
                    z[i] = r[i] * d[i];
                }
            }
            None => z.copy_from_slice(&r),
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm(&r) / b_norm;
    if res <= tol {
        Ok(CgOutcome { iterations: max_iter, relative_residual: res })
    } else {
        Err(Error::CgNoConvergence { iterations: max_iter, residual: res })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Estimate of the smallest Ritz value of a symmetric operator after `steps`
/// Lanczos iterations with full reorthogonalization, seeded start vector.
///
/// For a positive definite operator every Ritz value is positive; a
/// non-positive return flags indefiniteness upstream.
pub fn smallest_ritz_value(op: &dyn LinearOperator, steps: usize, seed: u64) -> f64 {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let m = steps.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    let mut w = vec![0.0; n];
    for j in 0..m {
        basis.push(v.clone());
        op.apply(&v, &mut w);
        let alpha = dot(&w, &v);
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        for q in &basis {
            let c = dot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
        let beta = norm(&w);
        if beta < 1e-14 {
            break;
        }
        if j + 1 < m {
            betas.push(beta);
            v = w.iter().map(|x| x / beta).collect();
        }
    }
    tridiag_smallest_eigenvalue(&alphas, &betas)
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
fn tridiag_smallest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    assert!(n >= 1);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 })
            + (if i < n - 1 { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    // count of eigenvalues below x via the Sturm sequence
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let o2 = off[i - 1] * off[i - 1];
            d = diag[i] - x - o2 / if d.abs() < 1e-300 { 1e-300_f64.copysign(d) } else { d };
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spd() -> Csr {
        // [[4,1,0],[1,3,1],[0,1,2]]
        Csr::from_triplets(
            3,
            vec![
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
                (2, 2, 2.0),
            ],
        )
    }

    #[test]
    fn csr_triplets_merge_duplicates() {
        let m = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), 5.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn cg_solves_spd_system() {
        let m = small_spd();
        let b = vec![1.0, -2.0, 0.5];
        let mut x = vec![0.0; 3];
        let out = conjugate_gradient(&m, &b, &mut x, 1e-14, 100, None).unwrap();
        let mut ax = vec![0.0; 3];
        m.apply(&x, &mut ax);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
        assert!(out.iterations <= 3 + 1);
    }

    #[test]
    fn cg_identity_returns_rhs() {
        let eye = Csr::from_triplets(4, (0..4).map(|i| (i, i, 1.0)).collect());
        let b = vec![3.0, -1.0, 0.0, 9.5];
        let mut x = vec![0.0; 4];
        conjugate_gradient(&eye, &b, &mut x, 1e-15, 10, None).unwrap();
        for i in 0..4 {
            assert!((x[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn cg_detects_indefiniteness() {
        let m = Csr::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        let b = vec![1.0, 1.0];
        let mut x = vec![0.0; 2];
        match conjugate_gradient(&m, &b, &mut x, 1e-12, 50, None) {
            Err(Error::IndefiniteOperator { .. }) => {}
            other => panic!("expected indefiniteness, got {other:?}"),
        }
    }

    #[test]
    fn lanczos_finds_smallest_eigenvalue() {
        let m = small_spd();
        // eigenvalues are 3 and 3 +- sqrt(3); smallest is 3 - sqrt(3)
        let ritz = smallest_ritz_value(&m, 3, 7);
        assert!(ritz > 0.0);
        assert!((ritz - (3.0 - 3.0f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn jacobi_preconditioning_converges_to_same_solution() {
        let m = small_spd();
        let b = vec![0.3, 0.1, -0.7];
        let mut x1 = vec![0.0; 3];
        let mut x2 = vec![0.0; 3];
        conjugate_gradient(&m, &b, &mut x1, 1e-14, 100, None).unwrap();
        let d = m.diagonal();
        conjugate_gradient(&m, &b, &mut x2, 1e-14, 100, Some(&d)).unwrap();
        for i in 0..3 {
            assert!((x1[i] - x2[i]).abs() < 1e-11);
        }
    }
}
