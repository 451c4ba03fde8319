//! Point-wise gradient descent: every sweep moves the nodes one at a time
//! along the negative gradient of the objective with respect to that node,
//! always against the current positions of the others.

use serde::{Deserialize, Serialize};

use crate::domain::{min_pairwise_distance, sample_box, DomainBox, NodeSet, QuadratureRule, SeededRng};
use crate::energy::{energy_gradient, objective_value, ObjectiveSpec};
use crate::error::{invalid, KqError, Result};
use crate::kernel::GaussianKernel;
use crate::wce::optimal_weights;

/// Float excursions past the feasible box up to this size are projected back.
pub const PROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StepRule {
    /// Step `min(gamma, shrink * gamma')`, where `gamma'` is the longest
    /// feasible step along the gradient.
    #[default]
    ClampedMin,
    /// `gamma <- max(gamma, gamma')` and step by `gamma`; the updated `gamma`
    /// carries over to later points.
    LiteralMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwgdConfig {
    pub gamma: f64,
    pub k_max: usize,
    pub eps: f64,
    pub step_rule: StepRule,
    pub shrink: f64,
    pub seed: u64,
}

impl PwgdConfig {
    pub fn new(gamma: f64, k_max: usize, eps: f64, seed: u64) -> Self {
        Self {
            gamma,
            k_max,
            eps,
            step_rule: StepRule::ClampedMin,
            shrink: 0.9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return invalid(format!("step size must be positive, got {}", self.gamma));
        }
        if self.k_max < 1 {
            return invalid("k_max must be at least 1");
        }
        if !(self.eps > 0.0) {
            return invalid(format!("stopping tolerance must be positive, got {}", self.eps));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return invalid(format!("shrink must lie in (0, 1), got {}", self.shrink));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Largest gradient norm seen during the sweep.
    pub max_grad_norm: f64,
    /// Objective after the sweep.
    pub objective: f64,
    pub min_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxSweeps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwgdTrace {
    pub sweeps: Vec<SweepRecord>,
    pub termination: Termination,
    /// Step size in force at the end (only changes under [`StepRule::LiteralMax`]).
    pub final_gamma: f64,
}

/// Longest `beta >= 0` with `x - beta g` inside `[lo, hi]^d`.
pub fn feasible_step(x: &[f64], g: &[f64], lo: f64, hi: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xl, &gl)| {
            if gl > 0.0 {
                ((xl - lo) / gl).max(0.0)
            } else if gl < 0.0 {
                ((hi - xl) / -gl).max(0.0)
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Initial nodes: uniform in the feasible box of `spec`.
pub fn initial_nodes(spec: &ObjectiveSpec, n: usize, domain: &DomainBox, seed: u64) -> Result<NodeSet> {
    if domain.dim() != spec.dim {
        return invalid(format!(
            "domain dimension {} does not match objective dimension {}",
            domain.dim(),
            spec.dim
        ));
    }
    let (lo, hi) = spec.feasible_interval();
    let mut rng = SeededRng::new(seed);
    sample_box(spec.dim, lo, hi, n, &mut rng)
}

/// Runs the descent from nodes drawn uniformly in the feasible region.
pub fn run_pwgd(spec: &ObjectiveSpec, n: usize, cfg: &PwgdConfig, domain: &DomainBox) -> Result<(NodeSet, PwgdTrace)> {
    if n < 2 {
        return invalid(format!("point-wise gradient descent needs at least 2 points, got {n}"));
    }
    cfg.validate()?;
    spec.validate()?;
    let init = initial_nodes(spec, n, domain, cfg.seed)?;
    run_pwgd_from(spec, init, cfg)
}

/// Runs the descent from a given starting configuration.
pub fn run_pwgd_from(spec: &ObjectiveSpec, init: NodeSet, cfg: &PwgdConfig) -> Result<(NodeSet, PwgdTrace)> {
    cfg.validate()?;
    spec.validate()?;
    let n = init.len();
    if n < 2 {
        return invalid(format!("point-wise gradient descent needs at least 2 points, got {n}"));
    }
    let (lo, hi) = spec.feasible_interval();
    let mut nodes = init;
    let mut gamma = cfg.gamma;
    let mut sweeps = Vec::new();
    let mut termination = Termination::MaxSweeps;
    for sweep in 1..=cfg.k_max {
        let wrap = |index: usize| {
            move |e: KqError| KqError::Descent {
                sweep,
                index,
                source: Box::new(e),
            }
        };
        let mut max_norm: f64 = 0.0;
        for i in 0..n {
            let g = energy_gradient(spec, &nodes, i).map_err(wrap(i))?;
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            max_norm = max_norm.max(norm);
            if norm == 0.0 {
                continue;
            }
            let x = nodes.point_mut(i);
            let reach = feasible_step(x, &g, lo, hi);
            let step = match cfg.step_rule {
                StepRule::ClampedMin => gamma.min(cfg.shrink * reach),
                StepRule::LiteralMax => {
                    gamma = gamma.max(reach);
                    gamma
                }
            };
            for (l, (xl, gl)) in x.iter_mut().zip(&g).enumerate() {
                let v = *xl - step * gl;
                if v < lo - PROJECTION_TOL || v > hi + PROJECTION_TOL || !v.is_finite() {
                    return Err(wrap(i)(KqError::Domain {
                        point: i,
                        coord: l,
                        value: v,
                        lo,
                        hi,
                    }));
                }
                *xl = v.clamp(lo, hi);
            }
        }
        let objective = objective_value(spec, &nodes).map_err(wrap(n - 1))?;
        let min_distance = min_pairwise_distance(&nodes)?;
        sweeps.push(SweepRecord {
            max_grad_norm: max_norm,
            objective,
            min_distance,
        });
        if max_norm < cfg.eps {
            termination = Termination::Converged;
            break;
        }
    }
    Ok((
        nodes,
        PwgdTrace {
            sweeps,
            termination,
            final_gamma: gamma,
        },
    ))
}

/// Pairs descent output with its optimal weights.
pub fn make_quadrature(nodes: &NodeSet, kernel: &GaussianKernel) -> Result<QuadratureRule> {
    optimal_weights(nodes, kernel)
}
