//! One-dimensional approximate Fekete points.
//!
//! Truncating the expansion of `exp(-eps^2 (x-y)^2)` after `N` terms makes the
//! Gram determinant a Vandermonde determinant times a Gaussian factor, so
//!
//! ```text
//! -1/2 log det K_hat(X) = C(eps, N) + eps^2 sum_k x_k^2 + sum_{i<j} log 1/|x_i - x_j|
//! ```
//!
//! Maximizing the determinant is then minimizing a logarithmic energy with a
//! quadratic external field, which is convex on the ordered cone.

use crate::error::{invalid, KqError, Result};
use crate::kernel::truncated_features;
use crate::linalg::{dot, gram_log_det, Cholesky};

/// Gradient norm at which [`minimize_log_energy`] stops.
pub const NEWTON_TOL: f64 = 1e-10;

const MAX_NEWTON: usize = 200;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        invalid(format!("eps must be positive, got {eps}"))
    }
}

fn is_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

/// `eps^2 sum x_k^2 + sum_{i<j} log 1/|x_i - x_j|` on strictly increasing points.
pub fn log_energy(eps: f64, xs: &[f64]) -> Result<f64> {
    check_eps(eps)?;
    if !is_increasing(xs) {
        return invalid("log energy needs strictly increasing points");
    }
    Ok(field_and_pairs(eps, xs))
}

fn field_and_pairs(eps: f64, xs: &[f64]) -> f64 {
    let field: f64 = xs.iter().map(|x| x * x).sum::<f64>() * eps * eps;
    let mut pairs = 0.0;
    for j in 1..xs.len() {
        for i in 0..j {
            pairs -= (xs[j] - xs[i]).ln();
        }
    }
    field + pairs
}

/// Gradient of the log energy.
pub fn log_energy_gradient(eps: f64, xs: &[f64]) -> Vec<f64> {
    let e2 = eps * eps;
    (0..xs.len())
        .map(|k| {
            let repel: f64 = (0..xs.len()).filter(|&j| j != k).map(|j| 1.0 / (xs[k] - xs[j])).sum();
            2.0 * e2 * xs[k] - repel
        })
        .collect()
}

/// Hessian of the log energy, row-major.
pub fn log_energy_hessian(eps: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut h = vec![0.0; n * n];
    for k in 0..n {
        h[k * n + k] = 2.0 * eps * eps;
        for j in 0..n {
            if j != k {
                let c = 1.0 / ((xs[k] - xs[j]) * (xs[k] - xs[j]));
                h[k * n + k] += c;
                h[k * n + j] = -c;
            }
        }
    }
    h
}

/// Minimizer of [`log_energy`] with `n` points by damped Newton from an
/// equispaced symmetric start. Steps are halved until the points stay ordered
/// and the energy does not increase.
pub fn minimize_log_energy(eps: f64, n: usize) -> Result<Vec<f64>> {
    check_eps(eps)?;
    if n == 0 {
        return invalid("need at least one point");
    }
    let half = (n as f64 - 1.0) / 2.0;
    let spread = (n as f64).sqrt() / eps;
    let mut xs: Vec<f64> = (0..n).map(|k| (k as f64 - half) / (half.max(1.0)) * spread).collect();
    if n == 1 {
        xs[0] = 0.0;
    }
    let mut energy = field_and_pairs(eps, &xs);
    for _ in 0..MAX_NEWTON {
        let g = log_energy_gradient(eps, &xs);
        if dot(&g, &g).sqrt() < NEWTON_TOL {
            return Ok(xs);
        }
        let h = log_energy_hessian(eps, &xs);
        let step = Cholesky::factor(&h, n, 0.0)?.solve(&g);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = xs.iter().zip(&step).map(|(x, s)| x - alpha * s).collect();
            if is_increasing(&trial) {
                let e = field_and_pairs(eps, &trial);
                // roundoff slack so the last Newton steps are not rejected
                if e <= energy + 1e-14 * energy.abs().max(1.0) {
                    xs = trial;
                    energy = e;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                return Err(KqError::Conditioning {
                    context: "log-energy Newton step",
                    value: alpha,
                });
            }
        }
    }
    let g = log_energy_gradient(eps, &xs);
    let norm = dot(&g, &g).sqrt();
    if norm < NEWTON_TOL {
        Ok(xs)
    } else {
        Err(KqError::Conditioning {
            context: "log-energy Newton did not converge",
            value: norm,
        })
    }
}

/// `-1/2 log det K_hat` of the truncated kernel `K_hat = Phi Phi^T`, taken
/// from the pivots of a QR factorization of `Phi^T`.
pub fn half_neg_log_det(eps: f64, xs: &[f64], n_terms: usize) -> Result<f64> {
    let n = xs.len();
    let phi = truncated_features(eps, n_terms, xs)?;
    let mut phi_t = vec![0.0; n * n_terms];
    for k in 0..n {
        for l in 0..n_terms {
            phi_t[l * n + k] = phi[k * n_terms + l];
        }
    }
    Ok(-0.5 * gram_log_det(&phi_t, n_terms, n)?)
}

/// Absolute difference between the two sides of the determinant identity taken
/// between `xs_a` and `xs_b`, which cancels the unknown constant.
pub fn check_det_identity(eps: f64, xs_a: &[f64], xs_b: &[f64], n_terms: usize) -> Result<f64> {
    if xs_a.len() != xs_b.len() {
        return invalid(format!("point sets differ in size: {} vs {}", xs_a.len(), xs_b.len()));
    }
    if n_terms < xs_a.len() {
        return invalid(format!("n_terms = {n_terms} is below N = {}", xs_a.len()));
    }
    let lhs = half_neg_log_det(eps, xs_a, n_terms)? - half_neg_log_det(eps, xs_b, n_terms)?;
    let rhs = log_energy(eps, xs_a)? - log_energy(eps, xs_b)?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SeededRng;

    fn sorted_uniform(rng: &mut SeededRng, n: usize) -> Vec<f64> {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs
    }

    #[test]
    fn energy_examples() {
        assert_eq!(log_energy(1.0, &[0.0]).unwrap(), 0.0);
        assert!((log_energy(1.0, &[-0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(log_energy(1.0, &[0.5, -0.5]).is_err());
        assert!(log_energy(1.0, &[0.1, 0.1]).is_err());

        let xs: [f64; 3] = [-0.7, 0.05, 0.4];
        let mut hand = 0.0_f64;
        for i in 0..3 {
            hand += 4.0 * xs[i] * xs[i];
            for j in 0..3 {
                if i < j {
                    hand += (1.0 / (xs[i] - xs[j]).abs()).ln();
                }
            }
        }
        assert!((log_energy(2.0, &xs).unwrap() - hand).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_differences() {
        let xs = [-0.9, -0.2, 0.3, 1.1];
        let g = log_energy_gradient(1.3, &xs);
        for k in 0..4 {
            let h = 1e-6;
            let (mut p, mut m) = (xs, xs);
            p[k] += h;
            m[k] -= h;
            let fd = (log_energy(1.3, &p).unwrap() - log_energy(1.3, &m).unwrap()) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7, "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn minimizer_small_cases() {
        assert_eq!(minimize_log_energy(0.7, 1).unwrap(), vec![0.0]);
        for eps in [0.5, 1.0, 2.0] {
            let xs = minimize_log_energy(eps, 2).unwrap();
            let x = 1.0 / (2.0 * eps);
            assert!((xs[0] + x).abs() < 1e-10 && (xs[1] - x).abs() < 1e-10, "{xs:?}");
        }
    }

    #[test]
    fn minimizer_is_certified_and_symmetric() {
        let xs = minimize_log_energy(1.0, 5).unwrap();
        let g = log_energy_gradient(1.0, &xs);
        assert!(dot(&g, &g).sqrt() < 1e-10);
        assert!(Cholesky::factor(&log_energy_hessian(1.0, &xs), 5, 0.0).is_ok());
        for n in [3, 6, 9] {
            let xs = minimize_log_energy(1.0, n).unwrap();
            assert!(is_increasing(&xs));
            for k in 0..n {
                assert!((xs[k] + xs[n - 1 - k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn minimizer_scales_with_inverse_eps() {
        let base = minimize_log_energy(1.0, 7).unwrap();
        for eps in [0.5, 2.0] {
            let xs = minimize_log_energy(eps, 7).unwrap();
            for (x, b) in xs.iter().zip(&base) {
                assert!((x - b / eps).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn identity_exact_with_n_terms_equal_n() {
        let mut rng = SeededRng::new(11);
        for n in 2..=6 {
            let a = sorted_uniform(&mut rng, n);
            let b = sorted_uniform(&mut rng, n);
            let r = check_det_identity(1.0, &a, &b, n).unwrap();
            assert!(r < 1e-8, "n = {n}: {r:e}");
        }
        let a = sorted_uniform(&mut rng, 3);
        assert_eq!(check_det_identity(1.0, &a, &a, 60).unwrap(), 0.0);
    }

    #[test]
    fn qr_log_det_matches_cholesky() {
        let xs = [-0.8, -0.1, 0.35, 0.9];
        let gram = crate::kernel::truncated_kernel_matrix(1.0, 16, &xs).unwrap();
        let chol = Cholesky::factor(gram.as_slice(), 4, 0.0).unwrap();
        let v = half_neg_log_det(1.0, &xs, 16).unwrap();
        assert!((v + 0.5 * chol.log_det()).abs() < 1e-9);
    }

    #[test]
    fn log_det_finite_up_to_ten_points() {
        for n in 1..=10 {
            let xs = minimize_log_energy(1.0, n).unwrap();
            let v = half_neg_log_det(1.0, &xs, 4 * n).unwrap();
            assert!(v.is_finite());
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(minimize_log_energy(0.0, 3).is_err());
        assert!(minimize_log_energy(1.0, 0).is_err());
        assert!(check_det_identity(1.0, &[0.0, 1.0], &[0.0], 10).is_err());
        assert!(check_det_identity(1.0, &[0.0, 1.0], &[0.0, 0.5], 1).is_err());
    }
}
