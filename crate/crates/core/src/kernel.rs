//! The Gaussian kernel `K(x,y) = exp(-a^2 |x-y|^2)` on the unit cube: point
//! evaluations, Gram matrices, and the closed-form kernel mean embeddings.

use std::f64::consts::PI;

use crate::domain::{dist2, NodeSet};
use crate::error::{invalid, Result};
use crate::special::erf;

/// Gaussian kernel with shape parameter `a` (an inverse length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    a: f64,
}

impl Default for GaussianKernel {
    fn default() -> Self {
        Self { a: 1.0 }
    }
}

impl GaussianKernel {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return invalid(format!("kernel shape must be positive, got {a}"));
        }
        Ok(Self { a })
    }

    pub fn shape(&self) -> f64 {
        self.a
    }

    /// Whether `a >= sqrt(d) / (2 D)`, the condition under which the
    /// fundamental-solution energy bounds the Gaussian pair energy.
    pub fn satisfies_energy_bound(&self, dim: usize, diameter: f64) -> bool {
        self.a >= (dim as f64).sqrt() / (2.0 * diameter)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return invalid(format!("dimension mismatch: {} vs {}", x.len(), y.len()));
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (-self.a * self.a * dist2(x, y)).exp()
    }

    /// `int_0^1 exp(-a^2 (x-y)^2) dy`.
    pub fn mean_1d(&self, x: f64) -> f64 {
        let a = self.a;
        0.5 * PI.sqrt() / a * (erf(a * (1.0 - x)) + erf(a * x))
    }

    /// Derivative of [`GaussianKernel::mean_1d`].
    pub fn mean_1d_deriv(&self, x: f64) -> f64 {
        let a2 = self.a * self.a;
        (-a2 * x * x).exp() - (-a2 * (1.0 - x) * (1.0 - x)).exp()
    }

    /// Kernel mean embedding `int_{[0,1]^d} K(x,y) dy`, a product of 1-D factors.
    pub fn mean(&self, x: &[f64]) -> f64 {
        x.iter().map(|&c| self.mean_1d(c)).product()
    }

    /// Gradient of [`GaussianKernel::mean`].
    pub fn mean_grad(&self, x: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = x.iter().map(|&c| self.mean_1d(c)).collect();
        (0..x.len())
            .map(|l| {
                let others: f64 = vals
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != l)
                    .map(|(_, v)| v)
                    .product();
                self.mean_1d_deriv(x[l]) * others
            })
            .collect()
    }

    /// `int int_{[0,1]^d x [0,1]^d} K(x,y) dx dy`.
    pub fn double_mean(&self, dim: usize) -> f64 {
        let a = self.a;
        let one_d = PI.sqrt() * erf(a) / a + ((-a * a).exp() - 1.0) / (a * a);
        one_d.powi(dim as i32)
    }
}

/// `J_1(x) = int_0^1 exp(-(x-y)^2) dy = (sqrt(pi)/2)(erf(1-x) + erf(x))`.
pub fn j1(x: f64) -> f64 {
    GaussianKernel::default().mean_1d(x)
}

/// `J_d(x) = prod_l J_1(x_l)`.
pub fn j_d(x: &[f64]) -> f64 {
    GaussianKernel::default().mean(x)
}

/// `k_0 = int int K` over the unit cube for the unit-shape kernel.
pub fn k0(dim: usize) -> f64 {
    GaussianKernel::default().double_mean(dim)
}

/// Dense symmetric kernel matrix with optional diagonal jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
    jitter: f64,
}

impl KernelMatrix {
    pub fn from_dense(n: usize, data: Vec<f64>, jitter: f64) -> Result<Self> {
        if data.len() != n * n {
            return invalid(format!("{} entries for a {n}x{n} matrix", data.len()));
        }
        Ok(Self { n, data, jitter })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// A copy with `extra` added to the diagonal.
    pub fn with_added_jitter(&self, extra: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += extra;
        }
        out.jitter += extra;
        out
    }
}

/// `M[i][j] = K(x_i, x_j) + jitter * [i == j]`.
pub fn kernel_matrix(kernel: &GaussianKernel, nodes: &NodeSet, jitter: f64) -> Result<KernelMatrix> {
    if !(jitter >= 0.0) {
        return invalid(format!("jitter must be non-negative, got {jitter}"));
    }
    let n = nodes.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0 + jitter;
        for j in 0..i {
            let v = kernel.eval_unchecked(nodes.point(i), nodes.point(j));
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(KernelMatrix { n, data, jitter })
}

/// Feature matrix `Phi[k][l] = phi_l(x_k)` (row-major, `N x n_terms`) of the
/// truncated expansion `exp(-eps^2 (x-y)^2) ~ sum_l phi_l(x) phi_l(y)` with
/// `phi_l(x) = exp(-eps^2 x^2) sqrt((2 eps^2)^l / l!) x^l`.
pub fn truncated_features(eps: f64, n_terms: usize, nodes: &[f64]) -> Result<Vec<f64>> {
    if n_terms < 1 {
        return invalid("truncation needs at least one term");
    }
    if !(eps > 0.0) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    let log_2eps2 = (2.0 * eps * eps).ln();
    let mut log_fact = 0.0;
    // half-log coefficients, computed once
    let coeffs: Vec<f64> = (0..n_terms)
        .map(|l| {
            if l > 0 {
                log_fact += (l as f64).ln();
            }
            0.5 * (l as f64 * log_2eps2 - log_fact)
        })
        .collect();
    let mut phi = vec![0.0; nodes.len() * n_terms];
    for (k, &x) in nodes.iter().enumerate() {
        let damp = -eps * eps * x * x;
        let log_abs_x = x.abs().ln();
        for (l, c) in coeffs.iter().enumerate() {
            let v = if l == 0 {
                (damp + c).exp()
            } else if x == 0.0 {
                0.0
            } else {
                let mag = (damp + c + l as f64 * log_abs_x).exp();
                if x < 0.0 && l % 2 == 1 {
                    -mag
                } else {
                    mag
                }
            };
            phi[k * n_terms + l] = v;
        }
    }
    Ok(phi)
}

/// Gram matrix of the rank-`n_terms` truncated 1-D Gaussian kernel.
pub fn truncated_kernel_matrix(eps: f64, n_terms: usize, nodes: &[f64]) -> Result<KernelMatrix> {
    let phi = truncated_features(eps, n_terms, nodes)?;
    let n = nodes.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = phi[i * n_terms..(i + 1) * n_terms]
                .iter()
                .zip(&phi[j * n_terms..(j + 1) * n_terms])
                .map(|(a, b)| a * b)
                .sum();
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(KernelMatrix { n, data, jitter: 0.0 })
}
