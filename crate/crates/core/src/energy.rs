//! Objectives minimized by point-wise gradient descent.
//!
//! The fundamental-solution energies
//!
//! ```text
//! I_2 = -(2/N) sum_j J_2(x_j) + (4/N^2)      sum_{i!=j} log(1/|x_i - x_j|)
//! I_3 = -(2/N) sum_j J_3(x_j) + (2 sqrt(pi)/N^2) sum_{i!=j} 1/|x_i - x_j|
//! ```
//!
//! plus the barrier terms `R_d = N^{-P} sum_i delta_M(x_i)`, and the
//! equal-weight squared worst-case error of the Gaussian kernel.

use std::f64::consts::PI;

use crate::domain::{dist2, NodeSet};
use crate::error::{invalid, KqError, Result};
use crate::kernel::GaussianKernel;
use crate::theory::h_function;
use crate::wce::squared_wce_equal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ObjectiveKind {
    /// `I_d + R_d`, `d` in {2, 3}.
    FundamentalSolution,
    /// Squared worst-case error with weights `1/N`, no barrier term.
    GaussianWce,
}

/// Where the barriers of `R_d` sit along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum BarrierMode {
    /// Barriers at `-M` and `1 + M`, outside the cube.
    #[default]
    OutsideMargin,
    /// Barriers at `M` and `1 + M`, from `log 1/(x - M)` as literally written.
    LiteralPaper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Regularizer strength exponent.
    pub p: f64,
    /// Barrier margin.
    pub m: f64,
    pub dim: usize,
    pub barrier: BarrierMode,
}

impl ObjectiveSpec {
    pub fn fundamental(dim: usize, p: f64, m: f64) -> Result<Self> {
        let spec = Self {
            kind: ObjectiveKind::FundamentalSolution,
            p,
            m,
            dim,
            barrier: BarrierMode::OutsideMargin,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian_wce(dim: usize) -> Result<Self> {
        let spec = Self {
            kind: ObjectiveKind::GaussianWce,
            p: 1.0,
            m: 1.0,
            dim,
            barrier: BarrierMode::OutsideMargin,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_barrier(mut self, barrier: BarrierMode) -> Result<Self> {
        self.barrier = barrier;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ObjectiveKind::FundamentalSolution => {
                if !(self.dim == 2 || self.dim == 3) {
                    return invalid(format!(
                        "fundamental-solution objective needs d in {{2,3}}, got {}",
                        self.dim
                    ));
                }
                if !(self.p > 0.0 && self.p.is_finite()) {
                    return invalid(format!("P must be positive, got {}", self.p));
                }
                if !self.m.is_finite() {
                    return invalid("M must be finite");
                }
                match self.barrier {
                    BarrierMode::OutsideMargin if self.m <= 0.0 => invalid(format!(
                        "M must be positive for outside-margin barriers, got {}",
                        self.m
                    )),
                    BarrierMode::LiteralPaper if self.m >= 1.0 || 1.0 + self.m <= self.m.max(0.0) => invalid(format!(
                        "literal barriers with M = {} leave no feasible interior",
                        self.m
                    )),
                    _ => Ok(()),
                }
            }
            ObjectiveKind::GaussianWce if self.dim == 0 => invalid("dimension must be at least 1"),
            ObjectiveKind::GaussianWce => Ok(()),
        }
    }

    fn has_barrier(&self) -> bool {
        self.kind == ObjectiveKind::FundamentalSolution
    }

    /// Open interval `(lo, hi)` bounded by the barrier singularities.
    pub fn barrier_interval(&self) -> Option<(f64, f64)> {
        if !self.has_barrier() {
            return None;
        }
        Some(match self.barrier {
            BarrierMode::OutsideMargin => (-self.m, 1.0 + self.m),
            BarrierMode::LiteralPaper => (self.m, 1.0 + self.m),
        })
    }

    /// Per-coordinate region iterates must stay in: the unit interval cut
    /// down to the barrier interval.
    pub fn feasible_interval(&self) -> (f64, f64) {
        match self.barrier_interval() {
            None => (0.0, 1.0),
            Some((lo, hi)) => (lo.max(0.0), hi.min(1.0)),
        }
    }
}

/// Surface area of the unit sphere in `R^d`, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    // Gamma(d/2) by the recursion from Gamma(1) = 1 or Gamma(1/2) = sqrt(pi)
    let mut gamma = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if d % 2 == 0 { 1.0 } else { 0.5 };
    while k < d as f64 / 2.0 {
        gamma *= k;
        k += 1.0;
    }
    2.0 * PI.powf(d as f64 / 2.0) / gamma
}

/// Radial profile of the fundamental solution at distance `r > 0`:
/// `log(r)/(2 pi)` for `d = 2`, `-1 / (2 (d-2) s_d r^{d-2})` for `d >= 3`.
pub fn fundamental_profile(d: usize, r: f64) -> f64 {
    if d == 2 {
        r.ln() / (2.0 * PI)
    } else {
        -1.0 / (2.0 * (d as f64 - 2.0) * unit_sphere_area(d) * r.powi(d as i32 - 2))
    }
}

/// `G_d(x, y)`.
pub fn fundamental_solution(d: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    if d < 2 {
        return invalid(format!("fundamental solution needs d >= 2, got {d}"));
    }
    if x.len() != d || y.len() != d {
        return invalid("point dimension does not match d");
    }
    let r2 = dist2(x, y);
    if r2 == 0.0 {
        return Err(KqError::Singularity { i: 0, j: 1 });
    }
    Ok(fundamental_profile(d, r2.sqrt()))
}

/// The two parts of `I_d`: the embedding term and the pair interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub embedding: f64,
    pub pair: f64,
}

/// Prefactor of the ordered-pair sum in `I_d`.
fn pair_coeff(dim: usize, n: usize) -> f64 {
    let n2 = (n * n) as f64;
    if dim == 2 {
        4.0 / n2
    } else {
        2.0 * PI.sqrt() / n2
    }
}

/// Pair interaction `phi(r)`: `log(1/r)` or `1/r`.
fn pair_phi(dim: usize, r2: f64) -> f64 {
    if dim == 2 {
        -0.5 * r2.ln()
    } else {
        1.0 / r2.sqrt()
    }
}

/// `phi'(r) / r`, so that `grad_x phi(|x - y|) = (x - y) * pair_dphi_over_r`.
fn pair_dphi_over_r(dim: usize, r2: f64) -> f64 {
    if dim == 2 {
        -1.0 / r2
    } else {
        -1.0 / (r2 * r2.sqrt())
    }
}

fn check_dim(spec: &ObjectiveSpec, nodes: &NodeSet) -> Result<()> {
    spec.validate()?;
    if nodes.dim() != spec.dim {
        return invalid(format!(
            "node dimension {} does not match objective dimension {}",
            nodes.dim(),
            spec.dim
        ));
    }
    if nodes.is_empty() {
        return invalid("objective needs at least one node");
    }
    Ok(())
}

/// Embedding and pair parts of `I_d`.
pub fn energy_parts(spec: &ObjectiveSpec, nodes: &NodeSet) -> Result<EnergyParts> {
    check_dim(spec, nodes)?;
    if spec.kind != ObjectiveKind::FundamentalSolution {
        return invalid("energy parts are defined for the fundamental-solution objective");
    }
    nodes.ensure_distinct()?;
    let n = nodes.len();
    let kernel = GaussianKernel::default();
    let embedding = -2.0 / n as f64 * nodes.iter().map(|x| kernel.mean(x)).sum::<f64>();
    let mut pairs = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pairs += pair_phi(spec.dim, dist2(nodes.point(i), nodes.point(j)));
        }
    }
    // Each unordered pair appears twice in the ordered sum.
    let pair = pair_coeff(spec.dim, n) * 2.0 * pairs;
    Ok(EnergyParts { embedding, pair })
}

/// `I_d(nodes)` for the fundamental-solution kind, or the equal-weight squared
/// worst-case error for the Gaussian kind. Excludes the regularizer.
pub fn energy_value(spec: &ObjectiveSpec, nodes: &NodeSet) -> Result<f64> {
    check_dim(spec, nodes)?;
    match spec.kind {
        ObjectiveKind::FundamentalSolution => {
            let parts = energy_parts(spec, nodes)?;
            Ok(parts.embedding + parts.pair)
        }
        ObjectiveKind::GaussianWce => {
            nodes.ensure_distinct()?;
            squared_wce_equal(nodes, &GaussianKernel::default())
        }
    }
}

/// Distances from `x` to the two barriers of one axis.
fn barrier_gaps(spec: &ObjectiveSpec, x: f64) -> (f64, f64) {
    let (lo, hi) = spec.barrier_interval().expect("barrier present");
    (x - lo, hi - x)
}

fn check_barrier(spec: &ObjectiveSpec, point: usize, coord: usize, value: f64) -> Result<()> {
    let (lo, hi) = spec.barrier_interval().expect("barrier present");
    if value > lo && value < hi {
        Ok(())
    } else {
        Err(KqError::Domain {
            point,
            coord,
            value,
            lo,
            hi,
        })
    }
}

/// `R_d(nodes) = N^{-P} sum_i delta_M(x_i)`; zero for the Gaussian kind.
pub fn regularizer_value(spec: &ObjectiveSpec, nodes: &NodeSet) -> Result<f64> {
    check_dim(spec, nodes)?;
    if !spec.has_barrier() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (i, x) in nodes.iter().enumerate() {
        for (l, &c) in x.iter().enumerate() {
            check_barrier(spec, i, l, c)?;
            let (g_lo, g_hi) = barrier_gaps(spec, c);
            sum += if spec.dim == 2 {
                -g_lo.ln() - g_hi.ln()
            } else {
                1.0 / g_lo + 1.0 / g_hi
            };
        }
    }
    Ok((nodes.len() as f64).powf(-spec.p) * sum)
}

/// `energy_value + regularizer_value`.
pub fn objective_value(spec: &ObjectiveSpec, nodes: &NodeSet) -> Result<f64> {
    Ok(energy_value(spec, nodes)? + regularizer_value(spec, nodes)?)
}

/// Gradient of the full objective with respect to node `i`.
pub fn energy_gradient(spec: &ObjectiveSpec, nodes: &NodeSet, i: usize) -> Result<Vec<f64>> {
    check_dim(spec, nodes)?;
    let n = nodes.len();
    if i >= n {
        return invalid(format!("node index {i} out of range for {n} nodes"));
    }
    let xi = nodes.point(i);
    let kernel = GaussianKernel::default();
    let nf = n as f64;
    let mut g: Vec<f64> = kernel.mean_grad(xi).into_iter().map(|v| -2.0 / nf * v).collect();
    match spec.kind {
        ObjectiveKind::FundamentalSolution => {
            let coeff = 2.0 * pair_coeff(spec.dim, n);
            for (j, xj) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let r2 = dist2(xi, xj);
                if r2 == 0.0 {
                    return Err(KqError::Singularity {
                        i: i.min(j),
                        j: i.max(j),
                    });
                }
                let s = coeff * pair_dphi_over_r(spec.dim, r2);
                for l in 0..spec.dim {
                    g[l] += s * (xi[l] - xj[l]);
                }
            }
            let scale = nf.powf(-spec.p);
            for (l, &c) in xi.iter().enumerate() {
                check_barrier(spec, i, l, c)?;
                let (g_lo, g_hi) = barrier_gaps(spec, c);
                g[l] += scale
                    * if spec.dim == 2 {
                        -1.0 / g_lo + 1.0 / g_hi
                    } else {
                        -1.0 / (g_lo * g_lo) + 1.0 / (g_hi * g_hi)
                    };
            }
        }
        ObjectiveKind::GaussianWce => {
            let a2 = kernel.shape() * kernel.shape();
            for (j, xj) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let r2 = dist2(xi, xj);
                if r2 == 0.0 {
                    return Err(KqError::Singularity {
                        i: i.min(j),
                        j: i.max(j),
                    });
                }
                let s = 2.0 / (nf * nf) * (-2.0 * a2) * (-a2 * r2).exp();
                for l in 0..spec.dim {
                    g[l] += s * (xi[l] - xj[l]);
                }
            }
        }
    }
    Ok(g)
}

/// Constants of the upper bound on the Gaussian pair energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UbConstants {
    /// `C_hat = 2 (4 pi)^{d/2} D^{d-2} / d^{d/2 - 1}`.
    pub c_hat: f64,
    /// `h_{d,D}(t)`.
    pub h: f64,
}

/// The deterministic constants of the bound. The `A_d` and `C_d` terms need
/// quadrature and live in [`crate::theory`].
pub fn ub_constants(d: usize, diameter: f64, t: f64) -> Result<UbConstants> {
    if d < 2 {
        return invalid(format!("bound needs d >= 2, got {d}"));
    }
    if !(diameter > 0.0) {
        return invalid("diameter must be positive");
    }
    let df = d as f64;
    let c_hat = 2.0 * (4.0 * PI).powf(df / 2.0) * diameter.powf(df - 2.0) / df.powf(df / 2.0 - 1.0);
    Ok(UbConstants {
        c_hat,
        h: h_function(d, diameter, t)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_box, SeededRng};
    use crate::kernel::j1;
    use proptest::prelude::*;

    fn fs(dim: usize, p: f64, m: f64) -> ObjectiveSpec {
        ObjectiveSpec::fundamental(dim, p, m).unwrap()
    }

    #[test]
    fn fundamental_solution_values() {
        assert_eq!(fundamental_solution(2, &[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        let v = fundamental_solution(2, &[0.0, 0.0], &[e, 0.0]).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let v3 = fundamental_solution(3, &[0.0; 3], &[0.0, 0.0, 1.0]).unwrap();
        assert!((v3 + 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!(matches!(
            fundamental_solution(2, &[0.1, 0.1], &[0.1, 0.1]),
            Err(KqError::Singularity { .. })
        ));
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn two_point_energy_by_hand() {
        let nodes = NodeSet::from_points(2, &[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let parts = energy_parts(&fs(2, 1.0, 0.5), &nodes).unwrap();
        assert!((parts.pair + 2f64.ln()).abs() < 1e-15);
        let j00 = j1(0.0) * j1(0.0);
        assert!((parts.embedding + 2.0 * j00).abs() < 1e-15);
        let total = energy_value(&fs(2, 1.0, 0.5), &nodes).unwrap();
        assert!((total - (-(2f64.ln()) - 2.0 * j00)).abs() < 1e-15);
    }

    #[test]
    fn unit_distance_pair_in_3d() {
        let nodes = NodeSet::from_points(3, &[[0.2, 0.3, 0.1], [0.2, 0.3, 1.1]]).unwrap();
        let parts = energy_parts(&fs(3, 1.0, 0.5), &nodes).unwrap();
        assert!((parts.pair - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_kind_is_equal_weight_wce() {
        let nodes = sample_box(3, 0.0, 1.0, 9, &mut SeededRng::new(4)).unwrap();
        let spec = ObjectiveSpec::gaussian_wce(3).unwrap();
        let want = squared_wce_equal(&nodes, &GaussianKernel::default()).unwrap();
        assert_eq!(energy_value(&spec, &nodes).unwrap(), want);
        assert_eq!(regularizer_value(&spec, &nodes).unwrap(), 0.0);
    }

    #[test]
    fn regularizer_examples() {
        let c2 = NodeSet::from_points(2, &[[0.5, 0.5]]).unwrap();
        assert_eq!(regularizer_value(&fs(2, 0.7, 0.5), &c2).unwrap(), 0.0);
        let c3 = NodeSet::from_points(3, &[[0.5, 0.5, 0.5]]).unwrap();
        assert!((regularizer_value(&fs(3, 0.7, 0.5), &c3).unwrap() - 6.0).abs() < 1e-14);

        // The N^{-P} factor: scale an independently summed barrier
        let nodes = sample_box(2, 0.0, 1.0, 4, &mut SeededRng::new(8)).unwrap();
        let m = 0.35;
        let raw: f64 = nodes
            .iter()
            .flat_map(|x| x.iter().copied())
            .map(|c| (1.0 / (c + m)).ln() + (1.0 / (1.0 + m - c)).ln())
            .sum();
        let got = regularizer_value(&fs(2, 0.6, m), &nodes).unwrap();
        assert!((got - 4f64.powf(-0.6) * raw).abs() < 1e-13);
    }

    #[test]
    fn barrier_violation_names_point_and_coord() {
        let spec = fs(2, 0.6, 0.35).with_barrier(BarrierMode::LiteralPaper).unwrap();
        let nodes = NodeSet::from_points(2, &[[0.5, 0.5], [0.6, 0.2]]).unwrap();
        match regularizer_value(&spec, &nodes) {
            Err(KqError::Domain { point, coord, .. }) => assert_eq!((point, coord), (1, 1)),
            other => panic!("expected a domain error, got {other:?}"),
        }
        assert!(energy_gradient(&spec, &nodes, 1).is_err());
    }

    #[test]
    fn barrier_blows_up_at_the_margin() {
        for edge in [-0.35 + 1e-9, 1.35 - 1e-9] {
            let nodes = NodeSet::from_points(3, &[[edge, 0.5, 0.5]]).unwrap();
            assert!(regularizer_value(&fs(3, 0.6, 0.35), &nodes).unwrap() > 1e6);
            // The log barrier diverges only logarithmically: -ln(1e-9) ~ 20.7.
            let nodes = NodeSet::from_points(2, &[[edge, 0.5]]).unwrap();
            let v = regularizer_value(&fs(2, 0.6, 0.35), &nodes).unwrap();
            let expected = -(1e-9f64).ln() - (1.7f64 - 1e-9).ln() - 2.0 * (0.85f64).ln();
            assert!((v - expected).abs() < 1e-6, "{v} vs {expected}");
        }
        let nodes = NodeSet::from_points(2, &[[-0.35 + 1e-15, 0.5]]).unwrap();
        assert!(regularizer_value(&fs(2, 0.6, 0.35), &nodes).unwrap() > 30.0);
    }

    #[test]
    fn centered_point_has_zero_barrier_gradient() {
        for dim in [2, 3] {
            let spec = fs(dim, 0.6, 0.35);
            let p = vec![0.5; dim];
            let nodes = NodeSet::from_points(dim, &[p]).unwrap();
            let g = energy_gradient(&spec, &nodes, 0).unwrap();
            // The J_d gradient also vanishes at the center.
            assert!(g.iter().all(|v| v.abs() < 1e-15), "{g:?}");
        }
    }

    #[test]
    fn mirrored_pair_has_mirrored_gradients() {
        let nodes = NodeSet::from_points(2, &[[0.2, 0.35], [0.8, 0.65]]).unwrap();
        for spec in [fs(2, 0.6, 0.35), ObjectiveSpec::gaussian_wce(2).unwrap()] {
            let g0 = energy_gradient(&spec, &nodes, 0).unwrap();
            let g1 = energy_gradient(&spec, &nodes, 1).unwrap();
            for l in 0..2 {
                assert!((g0[l] + g1[l]).abs() < 1e-13, "{g0:?} {g1:?}");
            }
        }
    }

    #[test]
    fn log_scaling_law() {
        let spec = fs(2, 1.0, 0.5);
        let nodes = sample_box(2, 0.1, 0.4, 7, &mut SeededRng::new(21)).unwrap();
        let c = 1.7;
        let scaled = NodeSet::from_flat(2, nodes.as_flat().iter().map(|v| v * c).collect()).unwrap();
        let n = 7.0;
        let a = energy_parts(&spec, &nodes).unwrap().pair;
        let b = energy_parts(&spec, &scaled).unwrap().pair;
        assert!((b - (a - 4.0 / (n * n) * n * (n - 1.0) * c.ln())).abs() < 1e-12);
    }

    #[test]
    fn feasible_intervals() {
        assert_eq!(fs(2, 0.6, 0.35).feasible_interval(), (0.0, 1.0));
        let lit = fs(2, 0.6, 0.35).with_barrier(BarrierMode::LiteralPaper).unwrap();
        assert_eq!(lit.feasible_interval(), (0.35, 1.0));
        assert_eq!(ObjectiveSpec::gaussian_wce(4).unwrap().feasible_interval(), (0.0, 1.0));
        assert!(ObjectiveSpec::fundamental(4, 0.6, 0.35).is_err());
        assert!(ObjectiveSpec::fundamental(2, 0.0, 0.35).is_err());
        assert!(ObjectiveSpec::fundamental(2, 0.6, -0.1).is_err());
    }

    #[test]
    fn bound_constants() {
        let c2 = ub_constants(2, 2f64.sqrt(), 1.0).unwrap();
        assert!((c2.c_hat - 8.0 * PI).abs() < 1e-12);
        assert_eq!(c2.h, 0.0);
        let c3 = ub_constants(3, 3f64.sqrt(), 1.0).unwrap();
        assert!((c3.c_hat - 16.0 * PI.powf(1.5)).abs() < 1e-11);
        assert!(ub_constants(2, 2f64.sqrt(), 0.5).is_err());
    }

    /// Central-difference gradient of the full objective.
    pub(crate) fn fd_gradient(spec: &ObjectiveSpec, nodes: &NodeSet, i: usize, h: f64) -> Vec<f64> {
        (0..nodes.dim())
            .map(|l| {
                let mut plus = nodes.clone();
                plus.point_mut(i)[l] += h;
                let mut minus = nodes.clone();
                minus.point_mut(i)[l] -= h;
                (objective_value(spec, &plus).unwrap() - objective_value(spec, &minus).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gradient_matches_finite_differences(seed in any::<u64>(), dim in 2usize..4, literal in any::<bool>(), gauss in any::<bool>()) {
            let spec = if gauss {
                ObjectiveSpec::gaussian_wce(dim).unwrap()
            } else if literal {
                fs(dim, 0.6, 0.2).with_barrier(BarrierMode::LiteralPaper).unwrap()
            } else {
                fs(dim, 0.6, 0.35)
            };
            let (lo, hi) = spec.feasible_interval();
            let nodes = sample_box(dim, lo + 0.05, hi - 0.05, 6, &mut SeededRng::new(seed)).unwrap();
            prop_assume!(crate::domain::min_pairwise_distance(&nodes).unwrap() > 0.02);
            for i in 0..6 {
                let g = energy_gradient(&spec, &nodes, i).unwrap();
                let fd = fd_gradient(&spec, &nodes, i, 1e-5);
                let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let norm: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
                prop_assert!(diff <= 1e-5 * norm.max(1e-6), "i={} {:?} vs {:?}", i, g, fd);
            }
        }

        #[test]
        fn pair_part_is_translation_and_permutation_invariant(seed in any::<u64>(), shift in -0.5f64..0.5) {
            let spec = fs(3, 1.0, 0.5);
            let nodes = sample_box(3, 0.0, 1.0, 5, &mut SeededRng::new(seed)).unwrap();
            let moved = NodeSet::from_flat(3, nodes.as_flat().iter().map(|v| v + shift).collect()).unwrap();
            let perm = [3, 1, 4, 0, 2];
            let a = energy_parts(&spec, &nodes).unwrap();
            let b = energy_parts(&spec, &moved).unwrap();
            let c = energy_parts(&spec, &nodes.permuted(&perm)).unwrap();
            prop_assert!((a.pair - b.pair).abs() < 1e-10 * a.pair.abs().max(1.0));
            prop_assert!((a.pair - c.pair).abs() < 1e-12 * a.pair.abs().max(1.0));
            prop_assert!((a.embedding - c.embedding).abs() < 1e-14);
            let ra = regularizer_value(&spec, &nodes).unwrap();
            let rc = regularizer_value(&spec, &nodes.permuted(&perm)).unwrap();
            prop_assert!((ra - rc).abs() < 1e-12 * ra.abs().max(1.0));
        }
    }
}
