//! Small dense linear algebra: an appendable Cholesky factor and an LU
//! log-determinant. Matrices are row-major `n * n` slices.

use crate::error::{invalid, KqError, Result};

/// Lower-triangular Cholesky factor stored packed by rows, so that a
/// bordered row can be appended in `O(n^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    packed: Vec<f64>,
    min_pivot: f64,
}

fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

/// Pivot floor used when none is supplied: squared pivots must exceed
/// `n` machine epsilons (the matrices here have unit diagonal).
pub fn default_pivot_floor(n: usize) -> f64 {
    (n.max(1) as f64) * f64::EPSILON
}

impl Cholesky {
    pub fn empty() -> Self {
        Self {
            n: 0,
            packed: Vec::new(),
            min_pivot: f64::INFINITY,
        }
    }

    /// Factorizes the symmetric matrix `a`. Fails with
    /// [`KqError::SingularMatrix`] when a squared pivot drops to `floor`.
    pub fn factor(a: &[f64], n: usize, floor: f64) -> Result<Self> {
        if a.len() != n * n {
            return invalid(format!("matrix has {} entries, expected {}", a.len(), n * n));
        }
        let mut chol = Self::empty();
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            row.clear();
            row.extend_from_slice(&a[i * n..i * n + i]);
            chol.append(&row, a[i * n + i], floor)?;
        }
        Ok(chol)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest squared pivot encountered (the Schur complements).
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.packed[row_start(i)..row_start(i) + i + 1]
    }

    /// For a bordering column `col` (length `n`) and diagonal entry `diag`,
    /// returns the new off-diagonal row `l` and the squared pivot
    /// `diag - |l|^2`, without modifying the factor.
    pub fn border(&self, col: &[f64], diag: f64) -> (Vec<f64>, f64) {
        let l = self.solve_lower(col);
        let pivot2 = diag - l.iter().map(|v| v * v).sum::<f64>();
        (l, pivot2)
    }

    /// Extends the factor by one row and column.
    pub fn append(&mut self, col: &[f64], diag: f64, floor: f64) -> Result<()> {
        assert_eq!(col.len(), self.n, "bordering column has the wrong length");
        let (l, pivot2) = self.border(col, diag);
        self.min_pivot = self.min_pivot.min(pivot2);
        if !(pivot2 > floor) {
            return Err(KqError::SingularMatrix {
                min_pivot: self.min_pivot,
            });
        }
        self.append_row(&l, pivot2.sqrt());
        Ok(())
    }

    /// Appends a precomputed row from [`Cholesky::border`].
    pub(crate) fn append_row(&mut self, l: &[f64], pivot: f64) {
        self.min_pivot = self.min_pivot.min(pivot * pivot);
        self.packed.extend_from_slice(l);
        self.packed.push(pivot);
        self.n += 1;
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y = b.to_vec();
        for i in 0..self.n {
            let row = self.row(i);
            let s: f64 = row[..i].iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    /// Solves `L^T x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        let mut x = y.to_vec();
        for i in (0..self.n).rev() {
            x[i] /= self.row(i)[i];
            let xi = x[i];
            for (k, l) in self.row(i)[..i].iter().enumerate() {
                x[k] -= l * xi;
            }
        }
        x
    }

    /// Solves `A x = b` for the factorized `A = L L^T`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `log det A` from the log pivots.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.row(i)[i].ln()).sum::<f64>()
    }
}

/// Sign and `log |det a|` by partial-pivoting LU.
pub fn lu_log_det(a: &[f64], n: usize) -> Result<(f64, f64)> {
    if a.len() != n * n {
        return invalid(format!("matrix has {} entries, expected {}", a.len(), n * n));
    }
    let mut m = a.to_vec();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|r| (r, m[r * n + k].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax == 0.0 {
            return Ok((0.0, f64::NEG_INFINITY));
        }
        if p != k {
            for c in 0..n {
                m.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        let piv = m[k * n + k];
        if piv < 0.0 {
            sign = -sign;
        }
        log_abs += piv.abs().ln();
        for r in k + 1..n {
            let f = m[r * n + k] / piv;
            if f != 0.0 {
                for c in k + 1..n {
                    m[r * n + c] -= f * m[k * n + c];
                }
            }
        }
    }
    Ok((sign, log_abs))
}

/// `log det (A^T A)` for a row-major `rows x cols` matrix `A` with
/// `rows >= cols`, from the diagonal of a Householder QR. This avoids forming
/// `A^T A` and squaring its condition number.
pub fn gram_log_det(a: &[f64], rows: usize, cols: usize) -> Result<f64> {
    if a.len() != rows * cols || rows < cols {
        return invalid(format!(
            "expected a tall {rows} x {cols} matrix, got {} entries",
            a.len()
        ));
    }
    let mut m = a.to_vec();
    let mut log_det = 0.0;
    for k in 0..cols {
        let norm = (k..rows).map(|r| m[r * cols + k].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(KqError::SingularMatrix { min_pivot: 0.0 });
        }
        let alpha = if m[k * cols + k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|r| m[r * cols + k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for c in k..cols {
            let s: f64 = (k..rows).map(|r| v[r - k] * m[r * cols + c]).sum::<f64>() * 2.0 / vv;
            for r in k..rows {
                m[r * cols + c] -= s * v[r - k];
            }
        }
        log_det += 2.0 * alpha.abs().ln();
    }
    Ok(log_det)
}

/// `sum_i sum_j x_i a_ij y_j`.
pub fn quad_form(a: &[f64], n: usize, x: &[f64], y: &[f64]) -> f64 {
    (0..n)
        .map(|i| x[i] * a[i * n..(i + 1) * n].iter().zip(y).map(|(v, w)| v * w).sum::<f64>())
        .sum()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Vec<f64> {
        // Hilbert-like but well conditioned: 1/(1+|i-j|) + n on the diagonal
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { n as f64 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn solve_recovers_rhs() {
        let n = 6;
        let a = spd(n);
        let chol = Cholesky::factor(&a, n, 0.0).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let x = chol.solve(&b);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn log_det_agrees_with_lu() {
        let n = 5;
        let a = spd(n);
        let chol = Cholesky::factor(&a, n, 0.0).unwrap();
        let (sign, ld) = lu_log_det(&a, n).unwrap();
        assert_eq!(sign, 1.0);
        assert!((chol.log_det() - ld).abs() < 1e-12);
    }

    #[test]
    fn lu_sign_of_permutation() {
        let a = [0.0, 1.0, 1.0, 0.0];
        let (sign, ld) = lu_log_det(&a, 2).unwrap();
        assert_eq!(sign, -1.0);
        assert!(ld.abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = [1.0, 1.0, 1.0, 1.0];
        match Cholesky::factor(&a, 2, 1e-14) {
            Err(KqError::SingularMatrix { min_pivot }) => assert!(min_pivot.abs() < 1e-14),
            other => panic!("expected singular matrix, got {other:?}"),
        }
    }

    #[test]
    fn append_matches_full_factor() {
        let n = 7;
        let a = spd(n);
        let full = Cholesky::factor(&a, n, 0.0).unwrap();
        let mut inc = Cholesky::empty();
        for i in 0..n {
            inc.append(&a[i * n..i * n + i], a[i * n + i], 0.0).unwrap();
        }
        assert_eq!(inc.packed.len(), full.packed.len());
        for (x, y) in inc.packed.iter().zip(&full.packed) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
