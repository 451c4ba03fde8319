//! Single runs and N-sweeps of the node generators, with the metrics plotted
//! in the experiments: squared worst-case errors under equal and optimal
//! weights and the smallest node separation.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{fmt_f64, min_pairwise_distance, DomainBox, QuadratureRule};
use crate::energy::{BarrierMode, ObjectiveSpec};
use crate::error::{invalid, KqError, Result};
use crate::kernel::GaussianKernel;
use crate::pwgd::{run_pwgd, PwgdConfig, StepRule, Termination};
use crate::sbq::{default_candidates, run_sbq};
use crate::wce::{solve_optimal, squared_wce_equal};

/// Version of the [`RunReport`] layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Node generator. Textual form: `pwgd-fs(P,M)`, `pwgd-gauss`, `sbq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Descent on the fundamental-solution energy with regularizer `(P, M)`.
    PwgdFs {
        p: f64,
        m: f64,
    },
    /// Descent on the equal-weight squared worst-case error.
    PwgdGauss,
    Sbq,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::PwgdFs { .. } => "pwgd-fs",
            Method::PwgdGauss => "pwgd-gauss",
            Method::Sbq => "sbq",
        }
    }

    fn default_gamma(&self) -> Option<f64> {
        match self {
            Method::PwgdFs { .. } => Some(1.0),
            Method::PwgdGauss => Some(0.1),
            Method::Sbq => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::PwgdFs { p, m } => write!(f, "pwgd-fs({p},{m})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Method {
    type Err = KqError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "pwgd-gauss" => return Ok(Method::PwgdGauss),
            "sbq" => return Ok(Method::Sbq),
            _ => {}
        }
        let args = s
            .strip_prefix("pwgd-fs(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| KqError::Parse(format!("unknown method `{s}`")))?;
        let (p, m) = args
            .split_once(',')
            .ok_or_else(|| KqError::Parse(format!("expected pwgd-fs(P,M), got `{s}`")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| KqError::Parse(format!("`{v}` in `{s}`: {e}")))
        };
        Ok(Method::PwgdFs { p: num(p)?, m: num(m)? })
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub dim: usize,
    pub n: usize,
    pub gamma: f64,
    pub k_max: usize,
    pub eps: f64,
    pub seed: u64,
    pub barrier: BarrierMode,
    pub step_rule: StepRule,
}

/// Stopping tolerance used in the experiments: `1e-5` in 2-D, `1e-4` otherwise.
pub fn default_eps(dim: usize) -> f64 {
    if dim == 2 {
        1e-5
    } else {
        1e-4
    }
}

impl RunConfig {
    /// Experiment defaults: `gamma` 1 (energy) or 0.1 (Gaussian error),
    /// `k_max = 1000`, [`default_eps`].
    pub fn new(method: Method, dim: usize, n: usize, seed: u64) -> Self {
        Self {
            method,
            dim,
            n,
            gamma: method.default_gamma().unwrap_or(1.0),
            k_max: 1000,
            eps: default_eps(dim),
            seed,
            barrier: BarrierMode::default(),
            step_rule: StepRule::default(),
        }
    }

    fn objective(&self) -> Result<Option<ObjectiveSpec>> {
        Ok(match self.method {
            Method::PwgdFs { p, m } => Some(ObjectiveSpec::fundamental(self.dim, p, m)?.with_barrier(self.barrier)?),
            Method::PwgdGauss => Some(ObjectiveSpec::gaussian_wce(self.dim)?),
            Method::Sbq => None,
        })
    }

    fn pwgd(&self) -> PwgdConfig {
        PwgdConfig {
            step_rule: self.step_rule,
            ..PwgdConfig::new(self.gamma, self.k_max, self.eps, self.seed)
        }
    }
}

/// Metrics of one run. Descent-only fields are `None` for SBQ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub method: String,
    pub d: usize,
    pub n: usize,
    pub p: Option<f64>,
    pub m: Option<f64>,
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    pub seed: u64,
    pub sq_wce_equal: f64,
    pub sq_wce_optimal: f64,
    /// Diagonal jitter the optimal-weight solve needed.
    pub jitter: f64,
    pub min_distance: f64,
    pub sweeps: usize,
    pub converged: Option<bool>,
    pub wall_time: f64,
}

impl RunReport {
    /// Column names of [`RunReport::csv_row`].
    pub const CSV_HEADER: &'static str =
        "schema_version,method,d,n,p,m,gamma,eps,seed,sq_wce_equal,sq_wce_optimal,jitter,min_distance,sweeps,converged,wall_time";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        // the method id contains a comma for pwgd-fs
        format!(
            "{},\"{}\",{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.schema_version,
            self.method,
            self.d,
            self.n,
            opt(self.p),
            opt(self.m),
            opt(self.gamma),
            opt(self.eps),
            self.seed,
            fmt_f64(self.sq_wce_equal),
            fmt_f64(self.sq_wce_optimal),
            fmt_f64(self.jitter),
            fmt_f64(self.min_distance),
            self.sweeps,
            self.converged.map(|c| c.to_string()).unwrap_or_default(),
            fmt_f64(self.wall_time),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Nodes with their optimal weights.
    pub rule: QuadratureRule,
    pub report: RunReport,
}

/// Generates nodes with `cfg.method`, then weights them optimally.
pub fn run_method(cfg: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let domain = DomainBox::new(cfg.dim)?;
    let kernel = GaussianKernel::default();
    let (nodes, sweeps, converged) = match cfg.objective()? {
        Some(spec) => {
            let (nodes, trace) = run_pwgd(&spec, cfg.n, &cfg.pwgd(), &domain)?;
            let conv = trace.termination == Termination::Converged;
            (nodes, trace.sweeps.len(), Some(conv))
        }
        None => {
            let candidates = default_candidates(&domain, cfg.n)?;
            (run_sbq(cfg.n, &candidates, &kernel)?.rule.nodes().clone(), 0, None)
        }
    };
    let solve = solve_optimal(&nodes, &kernel)?;
    let sq_wce_equal = squared_wce_equal(&nodes, &kernel)?;
    let min_distance = if nodes.len() > 1 {
        min_pairwise_distance(&nodes)?
    } else {
        f64::INFINITY
    };
    let (p, m) = match cfg.method {
        Method::PwgdFs { p, m } => (Some(p), Some(m)),
        _ => (None, None),
    };
    let descent = cfg.method != Method::Sbq;
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        method: cfg.method.to_string(),
        d: cfg.dim,
        n: cfg.n,
        p,
        m,
        gamma: descent.then_some(cfg.gamma),
        eps: descent.then_some(cfg.eps),
        seed: cfg.seed,
        sq_wce_equal,
        sq_wce_optimal: solve.squared_wce,
        jitter: solve.jitter,
        min_distance,
        sweeps,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    };
    let rule = QuadratureRule::new(nodes, solve.weights)?;
    Ok(RunOutcome { rule, report })
}

/// Runs every configuration on the current rayon pool, keeping input order.
pub fn run_sweep(configs: &[RunConfig]) -> Vec<Result<RunReport>> {
    configs.par_iter().map(|c| run_method(c).map(|o| o.report)).collect()
}

/// Cartesian product `methods x ns x seeds` with experiment defaults.
pub fn sweep_configs(methods: &[Method], dim: usize, ns: &[usize], seeds: &[u64]) -> Result<Vec<RunConfig>> {
    if methods.is_empty() || ns.is_empty() || seeds.is_empty() {
        return invalid("sweep needs at least one method, one N and one seed");
    }
    let mut out = Vec::with_capacity(methods.len() * ns.len() * seeds.len());
    for &method in methods {
        for &n in ns {
            for &seed in seeds {
                out.push(RunConfig::new(method, dim, n, seed));
            }
        }
    }
    Ok(out)
}

/// Median, averaging the middle pair for even counts. `None` when empty or
/// when a value is NaN.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

/// One point of a sweep curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianPoint {
    pub method: String,
    pub n: usize,
    pub sq_wce_optimal: f64,
    pub min_distance: f64,
}

/// Medians over seeds, grouped by method then `N`, in first-seen order.
pub fn sweep_medians(reports: &[RunReport]) -> Vec<MedianPoint> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in reports {
        let key = (r.method.clone(), r.n);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .filter_map(|(method, n)| {
            let group: Vec<&RunReport> = reports.iter().filter(|r| r.method == method && r.n == n).collect();
            let wce: Vec<f64> = group.iter().map(|r| r.sq_wce_optimal).collect();
            let sep: Vec<f64> = group.iter().map(|r| r.min_distance).collect();
            Some(MedianPoint {
                method,
                n,
                sq_wce_optimal: median(&wce)?,
                min_distance: median(&sep)?,
            })
        })
        .collect()
}

/// Number of strict increases in a sequence.
pub fn count_increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

pub fn write_sweep_csv<W: Write>(reports: &[RunReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", RunReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}
