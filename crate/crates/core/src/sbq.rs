//! Sequential Bayesian quadrature: nodes are picked one at a time from a
//! finite candidate set, each time the candidate that minimizes the
//! optimal-weight worst-case error of the enlarged set.
//!
//! Adding candidate `c` to a selection with Cholesky factor `L` and
//! `v = L^{-1} z` borders the factor with `l_c = L^{-1} k(X, c)` and pivot
//! `p_c = sqrt(1 - |l_c|^2)`, after which the error is
//! `k0 - |v|^2 - ((z_c - l_c . v) / p_c)^2`. The `l_c` are kept for every
//! candidate and extended by one entry per step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{sample_uniform, DomainBox, NodeSet, QuadratureRule, SeededRng};
use crate::error::{invalid, KqError, Result};
use crate::kernel::GaussianKernel;
use crate::linalg::{default_pivot_floor, dot, Cholesky};
use crate::wce::{solve_optimal, JITTER_LADDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateKind {
    /// Equispaced grid, half a cell in from the faces.
    TensorGrid,
    /// Halton sequence in the first `d` prime bases, starting at index 1.
    Halton,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub points: NodeSet,
    pub kind: CandidateKind,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Largest `m` with `m^d <= count`.
fn int_root(count: usize, d: usize) -> usize {
    let mut m = (count as f64).powf(1.0 / d as f64).round() as usize;
    while m > 0 && m.checked_pow(d as u32).is_none_or(|p| p > count) {
        m -= 1;
    }
    while (m + 1).checked_pow(d as u32).is_some_and(|p| p <= count) {
        m += 1;
    }
    m
}

fn first_primes(k: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(k);
    let mut c = 2u64;
    while primes.len() < k {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    x
}

/// Builds a candidate set. `TensorGrid` uses the largest `m^d <= count`
/// points, `Halton` and `Uniform` exactly `count`.
pub fn make_candidates(domain: &DomainBox, kind: CandidateKind, count: usize, seed: u64) -> Result<CandidateSet> {
    if count < 1 {
        return invalid("candidate count must be at least 1");
    }
    let d = domain.dim();
    let points = match kind {
        CandidateKind::TensorGrid => {
            if (count as f64) < 2f64.powi(d as i32) {
                return invalid(format!(
                    "a tensor grid in d = {d} needs at least {} candidates",
                    1usize << d
                ));
            }
            let m = int_root(count, d);
            let total = m.pow(d as u32);
            let mut coords = Vec::with_capacity(total * d);
            for k in 0..total {
                let mut rest = k;
                let mut p = vec![0.0; d];
                for l in (0..d).rev() {
                    p[l] = ((rest % m) as f64 + 0.5) / m as f64;
                    rest /= m;
                }
                coords.extend(p);
            }
            NodeSet::from_flat(d, coords)?
        }
        CandidateKind::Halton => {
            let bases = first_primes(d);
            let coords = (1..=count as u64)
                .flat_map(|i| bases.iter().map(move |&b| radical_inverse(i, b)))
                .collect();
            NodeSet::from_flat(d, coords)?
        }
        CandidateKind::Uniform => sample_uniform(domain, count, &mut SeededRng::new(seed))?,
    };
    Ok(CandidateSet { points, kind })
}

/// Default candidates for `n` nodes: a tensor grid of `ceil((4n)^{1/d})` per axis.
pub fn default_candidates(domain: &DomainBox, n: usize) -> Result<CandidateSet> {
    let d = domain.dim();
    let mut m = ((4 * n.max(1)) as f64).powf(1.0 / d as f64).ceil() as usize;
    while m.pow(d as u32) < 4 * n {
        m += 1;
    }
    make_candidates(domain, CandidateKind::TensorGrid, m.max(2).pow(d as u32), 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbqResult {
    /// Final rule with optimal weights.
    pub rule: QuadratureRule,
    /// Candidate indices in selection order.
    pub selected: Vec<usize>,
    /// Squared worst-case error after each selection.
    pub path: Vec<f64>,
    /// Diagonal jitter in force at the end of the selection.
    pub jitter: f64,
}

struct Greedy<'a> {
    cands: &'a NodeSet,
    kernel: &'a GaussianKernel,
    z: Vec<f64>,
    k0: f64,
    jitter: f64,
    selected: Vec<usize>,
    used: Vec<bool>,
    /// `L^{-1} k(X, c)` for every candidate
    ell: Vec<Vec<f64>>,
    ell_sq: Vec<f64>,
    /// `L^{-1} z_X`
    v: Vec<f64>,
}

impl Greedy<'_> {
    fn score(&self, c: usize, floor: f64) -> Option<f64> {
        if self.used[c] {
            return None;
        }
        let pivot2 = 1.0 + self.jitter - self.ell_sq[c];
        if !(pivot2 > floor) {
            return None;
        }
        let u = (self.z[c] - dot(&self.ell[c], &self.v)) / pivot2.sqrt();
        Some(self.k0 - dot(&self.v, &self.v) - u * u)
    }

    fn best(&self, floor: f64) -> Option<(f64, usize)> {
        (0..self.cands.len())
            .into_par_iter()
            .filter_map(|c| self.score(c, floor).map(|s| (s, c)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
    }

    fn commit(&mut self, c: usize) {
        let pivot = (1.0 + self.jitter - self.ell_sq[c]).sqrt();
        let lc = self.ell[c].clone();
        let vc = (self.z[c] - dot(&lc, &self.v)) / pivot;
        let xc = self.cands.point(c).to_vec();
        let kernel = self.kernel;
        let cands = self.cands;
        self.ell
            .par_iter_mut()
            .zip(self.ell_sq.par_iter_mut())
            .enumerate()
            .for_each(|(k, (row, sq))| {
                let kk = kernel.eval_unchecked(&xc, cands.point(k));
                let e = (kk - dot(&lc, row)) / pivot;
                row.push(e);
                *sq += e * e;
            });
        self.v.push(vc);
        self.selected.push(c);
        self.used[c] = true;
    }

    /// Refactors the selection with the current jitter; false if even that fails.
    fn refactor(&mut self, floor: f64) -> bool {
        let n = self.selected.len();
        let mut gram = vec![0.0; n * n];
        for (a, &i) in self.selected.iter().enumerate() {
            for (b, &j) in self.selected.iter().enumerate() {
                gram[a * n + b] = self.kernel.eval_unchecked(self.cands.point(i), self.cands.point(j))
                    + if a == b { self.jitter } else { 0.0 };
            }
        }
        let Ok(chol) = Cholesky::factor(&gram, n, floor) else {
            return false;
        };
        let zs: Vec<f64> = self.selected.iter().map(|&i| self.z[i]).collect();
        self.v = chol.solve_lower(&zs);
        for c in 0..self.cands.len() {
            let col: Vec<f64> = self
                .selected
                .iter()
                .map(|&i| self.kernel.eval_unchecked(self.cands.point(i), self.cands.point(c)))
                .collect();
            self.ell[c] = chol.solve_lower(&col);
            self.ell_sq[c] = dot(&self.ell[c], &self.ell[c]);
        }
        true
    }
}

/// Greedy selection of `n` nodes from `candidates`.
pub fn run_sbq(n: usize, candidates: &CandidateSet, kernel: &GaussianKernel) -> Result<SbqResult> {
    let cands = &candidates.points;
    if n < 1 {
        return invalid("SBQ needs n >= 1");
    }
    if cands.len() < n {
        return invalid(format!("only {} candidates for {n} nodes", cands.len()));
    }
    cands.ensure_distinct()?;
    let m = cands.len();
    let mut g = Greedy {
        cands,
        kernel,
        z: cands.iter().map(|x| kernel.mean(x)).collect(),
        k0: kernel.double_mean(cands.dim()),
        jitter: 0.0,
        selected: Vec::with_capacity(n),
        used: vec![false; m],
        ell: vec![Vec::with_capacity(n); m],
        ell_sq: vec![0.0; m],
        v: Vec::with_capacity(n),
    };
    let mut path = Vec::with_capacity(n);
    for step in 1..=n {
        let floor = default_pivot_floor(step);
        let mut pick = g.best(floor);
        let mut rung = 0;
        while pick.is_none() {
            // Every remaining candidate is numerically dependent on the selection.
            rung += 1;
            let Some(&next) = JITTER_LADDER.get(rung) else {
                return Err(KqError::Selection {
                    step,
                    source: Box::new(KqError::SingularMatrix { min_pivot: 0.0 }),
                });
            };
            if next <= g.jitter {
                continue;
            }
            g.jitter = next;
            if g.refactor(floor) {
                pick = g.best(floor);
            }
        }
        let (score, c) = pick.expect("checked above");
        g.commit(c);
        path.push(score.max(0.0));
    }
    let nodes = NodeSet::from_flat(
        cands.dim(),
        g.selected.iter().flat_map(|&i| cands.point(i).to_vec()).collect(),
    )?;
    let sol = solve_optimal(&nodes, kernel).map_err(|e| KqError::Selection {
        step: n,
        source: Box::new(e),
    })?;
    Ok(SbqResult {
        rule: QuadratureRule::new(nodes, sol.weights)?,
        selected: g.selected,
        path,
        jitter: g.jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wce::squared_wce_optimal;

    fn square() -> DomainBox {
        DomainBox::new(2).unwrap()
    }

    #[test]
    fn grid_and_halton_examples() {
        let g = make_candidates(&square(), CandidateKind::TensorGrid, 4, 0).unwrap();
        let mut pts: Vec<Vec<f64>> = g.points.iter().map(|p| p.to_vec()).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            pts,
            vec![vec![0.25, 0.25], vec![0.25, 0.75], vec![0.75, 0.25], vec![0.75, 0.75]]
        );
        assert!(make_candidates(&square(), CandidateKind::TensorGrid, 3, 0).is_err());
        assert_eq!(
            make_candidates(&square(), CandidateKind::TensorGrid, 30, 0)
                .unwrap()
                .len(),
            25
        );

        let h = make_candidates(&DomainBox::new(3).unwrap(), CandidateKind::Halton, 4, 0).unwrap();
        assert_eq!(h.points.point(0), &[0.5, 1.0 / 3.0, 0.2]);
        // Index 2: base 2 -> 0.25, base 3 -> 2/3, base 5 -> 0.4
        assert_eq!(h.points.point(1), &[0.25, 2.0 / 3.0, 0.4]);
        // Index 3 in base 2 is 11 -> 0.75; in base 3 it is 10 -> 1/9
        assert!((h.points.point(2)[1] - 1.0 / 9.0).abs() < 1e-16);
        assert_eq!(h.points.point(2)[0], 0.75);
    }

    #[test]
    fn uniform_candidates_follow_the_seed() {
        let a = make_candidates(&square(), CandidateKind::Uniform, 10, 7).unwrap();
        let b = make_candidates(&square(), CandidateKind::Uniform, 10, 7).unwrap();
        let c = make_candidates(&square(), CandidateKind::Uniform, 10, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn default_grid_oversamples_four_times() {
        for (d, n) in [(2, 50), (3, 100), (2, 1), (3, 7)] {
            let c = default_candidates(&DomainBox::new(d).unwrap(), n).unwrap();
            assert!(c.len() >= 4 * n);
            let m = int_root(c.len(), d);
            assert_eq!(m.pow(d as u32), c.len());
        }
    }

    #[test]
    fn first_pick_is_nearest_the_center() {
        let c = make_candidates(&square(), CandidateKind::TensorGrid, 81, 0).unwrap();
        let res = run_sbq(1, &c, &GaussianKernel::default()).unwrap();
        assert_eq!(res.rule.nodes().point(0), &[0.5, 0.5]);
    }

    /// Greedy selection that refactors from scratch for every candidate.
    fn brute_force(n: usize, cands: &NodeSet) -> Vec<usize> {
        let kernel = GaussianKernel::default();
        let mut chosen: Vec<usize> = Vec::new();
        for _ in 0..n {
            let mut best = (f64::INFINITY, usize::MAX);
            for c in 0..cands.len() {
                if chosen.contains(&c) {
                    continue;
                }
                let mut pts: Vec<Vec<f64>> = chosen.iter().map(|&i| cands.point(i).to_vec()).collect();
                pts.push(cands.point(c).to_vec());
                let s = squared_wce_optimal(&NodeSet::from_points(2, &pts).unwrap(), &kernel).unwrap();
                if s < best.0 - 1e-13 {
                    best = (s, c);
                }
            }
            chosen.push(best.1);
        }
        chosen
    }

    #[test]
    fn incremental_selection_matches_brute_force() {
        let c = make_candidates(&square(), CandidateKind::TensorGrid, 25, 0).unwrap();
        let res = run_sbq(3, &c, &GaussianKernel::default()).unwrap();
        assert_eq!(res.selected, brute_force(3, &c.points));
    }

    #[test]
    fn path_matches_from_scratch_and_decreases() {
        let c = make_candidates(&square(), CandidateKind::Halton, 120, 0).unwrap();
        let kernel = GaussianKernel::default();
        let res = run_sbq(20, &c, &kernel).unwrap();
        assert_eq!(res.jitter, 0.0);
        for k in 1..=20 {
            let prefix = NodeSet::from_flat(2, res.rule.nodes().as_flat()[..2 * k].to_vec()).unwrap();
            let direct = squared_wce_optimal(&prefix, &kernel).unwrap();
            assert!(
                (direct - res.path[k - 1]).abs() < 1e-9,
                "k={k}: {direct} vs {}",
                res.path[k - 1]
            );
        }
        for w in res.path.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let mut seen = res.selected.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn too_few_candidates() {
        let c = make_candidates(&square(), CandidateKind::Halton, 5, 0).unwrap();
        assert!(run_sbq(6, &c, &GaussianKernel::default()).is_err());
    }
}
