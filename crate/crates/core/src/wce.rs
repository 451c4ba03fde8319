//! Worst-case integration error in the Gaussian RKHS over the unit cube with
//! Lebesgue measure.
//!
//! The squared error of a rule `(x_j, w_j)` expands to
//!
//! ```text
//! e^2 = k0 - 2 sum_j w_j z_j + sum_ij w_i w_j K(x_i, x_j),   z_j = int K(x_j, y) dy
//! ```
//!
//! and is minimized over weights by `w* = K^{-1} z`, giving `e*^2 = k0 - z^T w*`.
//! Gaussian Gram matrices lose positive definiteness in floating point quickly,
//! so the solve escalates a diagonal jitter through [`JITTER_LADDER`].

use crate::domain::{NodeSet, QuadratureRule};
use crate::error::{invalid, KqError, Result};
use crate::kernel::{kernel_matrix, GaussianKernel, KernelMatrix};
use crate::linalg::{default_pivot_floor, dot, lu_log_det, quad_form, Cholesky};

/// Diagonal jitters tried in order when the Gram matrix does not factorize.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Equal/arbitrary-weight values below this are a breakdown, not roundoff.
pub const ARBITRARY_WEIGHT_FLOOR: f64 = -1e-10;

/// Optimal-weight values below this are a breakdown, not roundoff.
pub const OPTIMAL_WEIGHT_FLOOR: f64 = -1e-8;

fn clamp_nonneg(value: f64, floor: f64, context: &'static str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= floor {
        Ok(0.0)
    } else {
        Err(KqError::Conditioning { context, value })
    }
}

/// Kernel means `z_j = int K(x_j, y) dy`.
pub fn embeddings(nodes: &NodeSet, kernel: &GaussianKernel) -> Vec<f64> {
    nodes.iter().map(|x| kernel.mean(x)).collect()
}

/// Unclamped three-term expansion with an explicit Gram matrix.
pub(crate) fn expansion(k0: f64, z: &[f64], gram: &[f64], weights: &[f64]) -> f64 {
    let n = z.len();
    k0 - 2.0 * dot(weights, z) + quad_form(gram, n, weights, weights)
}

/// Squared worst-case error of an arbitrary rule.
pub fn squared_wce(rule: &QuadratureRule, kernel: &GaussianKernel) -> Result<f64> {
    let nodes = rule.nodes();
    if nodes.is_empty() {
        return invalid("worst-case error needs at least one node");
    }
    let gram = kernel_matrix(kernel, nodes, 0.0)?;
    let z = embeddings(nodes, kernel);
    let k0 = kernel.double_mean(nodes.dim());
    clamp_nonneg(
        expansion(k0, &z, gram.as_slice(), rule.weights()),
        ARBITRARY_WEIGHT_FLOOR,
        "squared worst-case error",
    )
}

/// Squared worst-case error with equal weights `1/N`.
pub fn squared_wce_equal(nodes: &NodeSet, kernel: &GaussianKernel) -> Result<f64> {
    squared_wce(&QuadratureRule::equal_weights(nodes.clone()), kernel)
}

/// Outcome of the optimal-weight solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolve {
    pub weights: Vec<f64>,
    /// Jitter that was needed for the factorization to succeed.
    pub jitter: f64,
    /// Smallest squared Cholesky pivot of the accepted factorization.
    pub min_pivot: f64,
    /// Squared worst-case error of `weights` (clamped at zero).
    pub squared_wce: f64,
}

/// Solves `(K + jitter I) w = z`, escalating the jitter on failure.
///
/// Without jitter the error is the quadratic form `k0 - |L^{-1} z|^2`. With
/// jitter the weights are only near-optimal, so their error is evaluated with
/// the three-term expansion against the unjittered Gram matrix.
pub fn solve_optimal(nodes: &NodeSet, kernel: &GaussianKernel) -> Result<OptimalSolve> {
    let n = nodes.len();
    if n == 0 {
        return invalid("optimal weights need at least one node");
    }
    nodes.ensure_distinct()?;
    let gram = kernel_matrix(kernel, nodes, 0.0)?;
    let z = embeddings(nodes, kernel);
    let k0 = kernel.double_mean(nodes.dim());
    solve_optimal_with(&gram, &z, k0)
}

pub(crate) fn solve_optimal_with(gram: &KernelMatrix, z: &[f64], k0: f64) -> Result<OptimalSolve> {
    let n = gram.dim();
    let floor = default_pivot_floor(n);
    let mut last_pivot = f64::NAN;
    for &jitter in &JITTER_LADDER {
        let shifted = gram.with_added_jitter(jitter);
        let chol = match Cholesky::factor(shifted.as_slice(), n, floor) {
            Ok(c) => c,
            Err(KqError::SingularMatrix { min_pivot }) => {
                last_pivot = min_pivot;
                continue;
            }
            Err(e) => return Err(e),
        };
        let v = chol.solve_lower(z);
        let weights = chol.solve_upper(&v);
        let raw = if jitter == 0.0 {
            k0 - dot(&v, &v)
        } else {
            expansion(k0, z, gram.as_slice(), &weights)
        };
        if raw < OPTIMAL_WEIGHT_FLOOR {
            last_pivot = chol.min_pivot();
            continue;
        }
        return Ok(OptimalSolve {
            weights,
            jitter,
            min_pivot: chol.min_pivot(),
            squared_wce: raw.max(0.0),
        });
    }
    Err(KqError::SingularMatrix { min_pivot: last_pivot })
}

/// The rule carrying the optimal weights for `nodes`.
pub fn optimal_weights(nodes: &NodeSet, kernel: &GaussianKernel) -> Result<QuadratureRule> {
    let sol = solve_optimal(nodes, kernel)?;
    QuadratureRule::new(nodes.clone(), sol.weights)
}

/// Squared worst-case error with optimal weights.
pub fn squared_wce_optimal(nodes: &NodeSet, kernel: &GaussianKernel) -> Result<f64> {
    Ok(solve_optimal(nodes, kernel)?.squared_wce)
}

/// The same quantity as [`squared_wce_optimal`] by the bordered-determinant
/// formula `det [[k0, z^T], [z, K]] / det K`. Kept as a cross-check only: it
/// is less accurate and has no jitter fallback.
pub fn squared_wce_optimal_det(nodes: &NodeSet, kernel: &GaussianKernel) -> Result<f64> {
    let n = nodes.len();
    if n == 0 {
        return invalid("optimal weights need at least one node");
    }
    nodes.ensure_distinct()?;
    let gram = kernel_matrix(kernel, nodes, 0.0)?;
    let z = embeddings(nodes, kernel);
    let k0 = kernel.double_mean(nodes.dim());
    let m = n + 1;
    let mut bordered = vec![0.0; m * m];
    bordered[0] = k0;
    for i in 0..n {
        bordered[i + 1] = z[i];
        bordered[(i + 1) * m] = z[i];
        for j in 0..n {
            bordered[(i + 1) * m + j + 1] = gram.get(i, j);
        }
    }
    let (sign_b, log_b) = lu_log_det(&bordered, m)?;
    let (sign_k, log_k) = lu_log_det(gram.as_slice(), n)?;
    if sign_k <= 0.0 {
        return Err(KqError::SingularMatrix { min_pivot: 0.0 });
    }
    let value = sign_b * (log_b - log_k).exp();
    clamp_nonneg(value, OPTIMAL_WEIGHT_FLOOR, "bordered determinant")
}
