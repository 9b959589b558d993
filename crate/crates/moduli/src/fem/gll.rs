//! One-dimensional spectral machinery: Legendre polynomials, Gauss and
//! Gauss-Lobatto rules on `[-1, 1]`, and the nodal differentiation matrix.
//!
//! Everything downstream (quadrature, nodal bases, projections) is built by
//! tensorization of the rules defined here.

use crate::error::{Error, Result};

/// Evaluate `P_n(x)` and `P'_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = if (x.abs() - 1.0).abs() < 1e-14 {
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 - 1) };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, dp)
}

/// Values of `P_0..=P_r` together with first and second derivatives at `x`.
///
/// Uses `P'_k = P'_{k-2} + (2k-1) P_{k-1}` and its derivative.
pub fn legendre_table(r: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = r + 1;
    let mut p = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    p[0] = 1.0;
    if r >= 1 {
        p[1] = x;
        d1[1] = 1.0;
    }
    for k in 2..n {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        d1[k] = d1[k - 2] + (2.0 * kf - 1.0) * p[k - 1];
        d2[k] = d2[k - 2] + (2.0 * kf - 1.0) * d1[k - 1];
    }
    (p, d1, d2)
}

/// An `n`-point quadrature rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_rule(n: usize) -> Rule1d {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule1d { nodes, weights }
}

/// Gauss-Lobatto-Legendre rule with `n >= 2` points (endpoints included),
/// exact for polynomials of degree `2n - 3`.
pub fn gll_rule(n: usize) -> Rule1d {
    assert!(n >= 2);
    let r = n - 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[r] = 1.0;
    for i in 1..r {
        // interior nodes are the roots of P'_r; Newton with Chebyshev-Lobatto start
        let mut x = -(std::f64::consts::PI * i as f64 / r as f64).cos();
        for _ in 0..60 {
            let (p, dp) = legendre(r, x);
            // P''_r from the Legendre ODE
            let d2 = (2.0 * x * dp - (r * (r + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / d2;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
    }
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(r, x);
            2.0 / ((r * (r + 1)) as f64 * p * p)
        })
        .collect();
    Rule1d { nodes, weights }
}

/// Nodal (Lagrange) basis on a set of distinct points, with barycentric
/// weights and the differentiation matrix.
#[derive(Clone, Debug)]
pub struct NodalBasis {
    pub nodes: Vec<f64>,
    /// Barycentric weights `lambda_i = 1 / prod_{j != i} (x_i - x_j)`.
    pub bary: Vec<f64>,
    /// `diff[q][i] = L_i'(x_q)`, row-major `n x n`.
    pub diff: Vec<f64>,
}

impl NodalBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        let mut bary = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    bary[i] /= nodes[i] - nodes[j];
                }
            }
        }
        let mut diff = vec![0.0; n * n];
        for q in 0..n {
            let mut row_sum = 0.0;
            for i in 0..n {
                if i != q {
                    let v = (bary[i] / bary[q]) / (nodes[q] - nodes[i]);
                    diff[q * n + i] = v;
                    row_sum += v;
                }
            }
            diff[q * n + q] = -row_sum;
        }
        NodalBasis { nodes, bary, diff }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all basis functions at `x`.
    pub fn values(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            if (x - self.nodes[i]).abs() < 1e-13 {
                out[i] = 1.0;
                return out;
            }
        }
        let mut sum = 0.0;
        for i in 0..n {
            out[i] = self.bary[i] / (x - self.nodes[i]);
            sum += out[i];
        }
        for v in &mut out {
            *v /= sum;
        }
        out
    }

    /// Values and first derivatives of all basis functions at `x`.
    pub fn values_and_derivs(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        for q in 0..n {
            if (x - self.nodes[q]).abs() < 1e-13 {
                let mut vals = vec![0.0; n];
                vals[q] = 1.0;
                let derivs = self.diff[q * n..(q + 1) * n].to_vec();
                return (vals, derivs);
            }
        }
        let vals = self.values(x);
        // L_i'(x) = L_i(x) * sum_{j != i} 1/(x - x_j)
        let total: f64 = self.nodes.iter().map(|&xj| 1.0 / (x - xj)).sum();
        let derivs = (0..n)
            .map(|i| vals[i] * (total - 1.0 / (x - self.nodes[i])))
            .collect();
        (vals, derivs)
    }
}

/// Nodal Gauss-Lobatto basis description of order `r`: nodes, barycentric
/// weights and the differentiation matrix on `[-1, 1]`.
pub fn gll_basis(r: usize) -> Result<(NodalBasis, Vec<f64>)> {
    if r < 1 {
        return Err(Error::InvalidOrder(
            "nodal differentiation needs order r >= 1".into(),
        ));
    }
    let rule = gll_rule(r + 1);
    Ok((NodalBasis::new(rule.nodes), rule.weights))
}
