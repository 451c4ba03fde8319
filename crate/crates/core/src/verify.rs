//! Pass/fail tables for the numeric checks of the heat-kernel lemmas, the two
//! theorems on the renormalized energy and the 1-D Fekete identity.
//!
//! Checks that rest on adaptive quadrature use the caller's tolerance and
//! widen their threshold to at least that tolerance. Closed-form checks keep
//! fixed thresholds.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::domain::{NodeSet, SeededRng};
use crate::energy::fundamental_solution;
use crate::error::{KqError, Result};
use crate::fekete::{check_det_identity, minimize_log_energy};
use crate::theory::{
    c_constant, c_constant_about, green_heat_integral, h_function, int_heat_kernel, lemma4_sides, theorem1_sides,
    theorem2_sides_from, QuadratureTolerances, LEMMA4_SLACK, THEOREM2_REL_SLACK,
};

/// Default quadrature tolerance of the verification suites.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Theorem1,
    Theorem2,
    Fekete,
    All,
}

impl FromStr for Suite {
    type Err = KqError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lemmas" => Suite::Lemmas,
            "theorem1" => Suite::Theorem1,
            "theorem2" => Suite::Theorem2,
            "fekete" => Suite::Fekete,
            "all" => Suite::All,
            _ => return Err(KqError::Parse(format!("unknown suite `{s}`"))),
        })
    }
}

/// One line of a verification table. `pass` is `residual <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            threshold,
            pass: residual <= threshold,
        }
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<44} {:>12.3e} {:>10.1e}  {}",
            self.name,
            self.residual,
            self.threshold,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn quad(tol: f64) -> QuadratureTolerances {
    QuadratureTolerances::new(tol, tol)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Nodes of the desk-scale theorem instance: two points 0.5 apart.
pub fn theorem_nodes() -> NodeSet {
    NodeSet::from_points(2, &[[0.25, 0.5], [0.75, 0.5]]).expect("fixed nodes are valid")
}

/// Time of the desk-scale theorem instance.
pub const THEOREM_T: f64 = 2.0;

/// Lemma 2: `C_2(t)` about the origin vs about `(0.3, 0.4)`, `t in {0.5, 2}`.
pub fn lemma2_rows(tol: f64) -> Result<Vec<CheckRow>> {
    let q = quad(tol);
    [0.5, 2.0]
        .iter()
        .map(|&t| {
            let centered = c_constant(2, t, &q)?;
            let shifted = c_constant_about([0.3, 0.4], t, &q)?;
            Ok(CheckRow::new(
                format!("lemma2 C_2 center independence t={t}"),
                (centered - shifted).abs(),
                1e-6f64.max(tol),
            ))
        })
        .collect()
}

/// Lemma 3: `int G_2(a,y) heat(t,|y-b|) dy = G_2(a,b) + int_0^t heat(s,|a-b|) ds`.
pub fn lemma3_rows(tol: f64) -> Result<Vec<CheckRow>> {
    let q = quad(tol);
    let mut rows = Vec::new();
    for r in [0.3, 1.0] {
        for t in [1.0, 4.0] {
            let a = [0.2, 0.1];
            let b = [0.2 + r, 0.1];
            let lhs = green_heat_integral(a, b, t, &q)?;
            let rhs = fundamental_solution(2, &a, &b)? + int_heat_kernel(2, t, r)?;
            rows.push(CheckRow::new(
                format!("lemma3 |a-b|={r} t={t}"),
                rel(lhs, rhs),
                1e-3f64.max(tol),
            ));
        }
    }
    Ok(rows)
}

/// Lemma 4 on a 20 x 5 grid of `(alpha, t)` per dimension; the residual is the
/// largest shortfall `rhs - lhs`.
pub fn lemma4_rows() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for d in [2usize, 3] {
        let diameter = (d as f64).sqrt();
        let t_min = diameter * diameter / d as f64;
        let mut worst = f64::NEG_INFINITY;
        let mut h_min = f64::INFINITY;
        for k in 0..5 {
            let t = t_min * 5f64.powi(k);
            h_min = h_min.min(h_function(d, diameter, t)?);
            for i in 1..=20 {
                let alpha = diameter * i as f64 / 20.0;
                let s = lemma4_sides(d, diameter, t, alpha)?;
                worst = worst.max(s.rhs - s.lhs);
            }
        }
        rows.push(CheckRow::new(
            format!("lemma4 bound d={d}"),
            worst.max(0.0),
            LEMMA4_SLACK,
        ));
        rows.push(CheckRow::new(format!("remark h >= 0 d={d}"), (-h_min).max(0.0), 0.0));
    }
    Ok(rows)
}

/// Theorem 1 relative residual and Theorem 2 relative overshoot at `a = 1, 2`.
pub fn theorem_rows(tol: f64, with_theorem1: bool, with_theorem2: bool) -> Result<Vec<CheckRow>> {
    let nodes = theorem_nodes();
    let parts = theorem1_sides(THEOREM_T, &nodes, &quad(tol))?;
    let mut rows = Vec::new();
    if with_theorem1 {
        rows.push(CheckRow::new(
            "theorem1 heat identity N=2 t=2",
            parts.residual(),
            1e-2f64.max(tol),
        ));
    }
    if with_theorem2 {
        for a in [1.0, 2.0] {
            let s = theorem2_sides_from(&parts, THEOREM_T, &nodes, a)?;
            let over = (s.lhs - s.rhs).max(0.0) / s.rhs.abs();
            rows.push(CheckRow::new(
                format!("theorem2 pair energy bound a={a}"),
                over,
                THEOREM2_REL_SLACK.max(tol),
            ));
        }
    }
    Ok(rows)
}

fn sorted_uniform(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Fekete determinant identity on two seeded random 3-point sets in `[-1, 1]`
/// with `n_terms = N` and `n_terms = 60`, and the two-point minimizer.
pub fn fekete_rows() -> Result<Vec<CheckRow>> {
    let mut rng = SeededRng::new(1);
    let a = sorted_uniform(&mut rng, 3);
    let b = sorted_uniform(&mut rng, 3);
    let mut rows = vec![
        CheckRow::new(
            "fekete det identity N=3 n_terms=3",
            check_det_identity(1.0, &a, &b, 3)?,
            1e-6,
        ),
        CheckRow::new(
            "fekete det identity N=3 n_terms=60",
            check_det_identity(1.0, &a, &b, 60)?,
            1e-6,
        ),
    ];
    for eps in [0.5, 1.0, 2.0] {
        let xs = minimize_log_energy(eps, 2)?;
        let x = 1.0 / (2.0 * eps);
        let err = (xs[0] + x).abs().max((xs[1] - x).abs());
        rows.push(CheckRow::new(format!("fekete N=2 minimizer eps={eps}"), err, 1e-6));
    }
    Ok(rows)
}

/// All rows of `suite` at quadrature tolerance `tol`.
pub fn run_suite(suite: Suite, tol: f64) -> Result<Vec<CheckRow>> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(KqError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut rows = Vec::new();
    if matches!(suite, Suite::Lemmas | Suite::All) {
        rows.extend(lemma2_rows(tol)?);
        rows.extend(lemma3_rows(tol)?);
        rows.extend(lemma4_rows()?);
    }
    let t1 = matches!(suite, Suite::Theorem1 | Suite::All);
    let t2 = matches!(suite, Suite::Theorem2 | Suite::All);
    if t1 || t2 {
        rows.extend(theorem_rows(tol, t1, t2)?);
    }
    if matches!(suite, Suite::Fekete | Suite::All) {
        rows.extend(fekete_rows()?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!("lemmas".parse::<Suite>().unwrap(), Suite::Lemmas);
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("lemma".parse::<Suite>().is_err());
    }

    #[test]
    fn row_pass_flag() {
        assert!(CheckRow::new("x", 1e-7, 1e-6).pass);
        assert!(!CheckRow::new("x", 2e-6, 1e-6).pass);
        assert!(!CheckRow::new("x", f64::NAN, 1e-6).pass);
        assert!(CheckRow::new("h", 0.0, 0.0).pass);
    }

    #[test]
    fn lemma4_rows_pass() {
        let rows = lemma4_rows().unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }

    #[test]
    fn fekete_minimizer_rows_pass() {
        let rows = fekete_rows().unwrap();
        assert!(rows[0].pass);
        assert!(rows[2..].iter().all(|r| r.pass));
    }

    #[test]
    fn loose_tolerance_widens_quadrature_thresholds() {
        let rows = lemma2_rows(1e-3).unwrap();
        assert!(rows.iter().all(|r| r.threshold == 1e-3 && r.pass));
        assert!(run_suite(Suite::Fekete, 0.0).is_err());
    }
}
