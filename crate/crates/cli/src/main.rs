//! `kq`: generate quadrature nodes and weights, run N-sweeps, and print the
//! verification tables.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical or I/O failure,
//! 3 a verification check failed.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kq_core::domain::{write_nodes_csv, write_weights_csv};
use kq_core::experiment::{run_method, run_sweep, sweep_medians, write_sweep_csv};
use kq_core::verify::{run_suite, DEFAULT_TOL};
use kq_core::{BarrierMode, KqError, Method, RunConfig, RunReport, StepRule, Suite};

#[derive(Parser)]
#[command(
    name = "kq",
    version,
    about = "Kernel quadrature nodes by point-wise gradient descent"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one node set with optimal weights.
    Generate(GenerateArgs),
    /// Run methods over a list of N and seeds; writes sweep.csv and sweep.svg.
    Sweep(SweepArgs),
    /// Print a PASS/FAIL table of the numeric checks. The theorem suites run a
    /// 4-D brute-force quadrature whose cost grows quickly as --tol shrinks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    PwgdFs,
    PwgdGauss,
    Sbq,
}

#[derive(Clone, Copy, ValueEnum)]
enum BarrierArg {
    /// Barriers at -M and 1+M.
    Outside,
    /// Barriers at M and 1+M as printed in Algorithm 1's regularizer.
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepRuleArg {
    Clamped,
    Literal,
}

#[derive(Args)]
struct DescentArgs {
    #[arg(long)]
    kmax: Option<usize>,
    /// Gradient-norm stopping tolerance [default: 1e-5 in 2-D, 1e-4 otherwise]
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum)]
    barrier: Option<BarrierArg>,
    #[arg(long = "step-rule", value_enum)]
    step_rule: Option<StepRuleArg>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Regularizer exponent (pwgd-fs) [default: 0.5]
    #[arg(long = "P")]
    p: Option<f64>,
    /// Regularizer margin (pwgd-fs) [default: 0.5]
    #[arg(long = "M")]
    m: Option<f64>,
    /// Step size [default: 1 for pwgd-fs, 0.1 for pwgd-gauss]
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Comma-separated node counts, e.g. 10,20,30
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    /// Comma-separated methods, e.g. "pwgd-fs(0.5,0.5),pwgd-gauss,sbq"
    #[arg(long)]
    methods: String,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// Step size for pwgd-fs rows
    #[arg(long = "gamma-fs", default_value_t = 1.0)]
    gamma_fs: f64,
    /// Step size for pwgd-gauss rows
    #[arg(long = "gamma-gauss", default_value_t = 0.1)]
    gamma_gauss: f64,
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// lemmas, theorem1, theorem2, fekete or all
    #[arg(long, default_value = "all")]
    suite: String,
    /// Adaptive-quadrature tolerance
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verification,
}

impl From<KqError> for Failure {
    fn from(e: KqError) -> Self {
        match e {
            KqError::InvalidArgument(_) | KqError::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn check_dim(dim: usize) -> CmdResult {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        usage(format!("--dim must be 2 or 3, got {dim}"))
    }
}

fn apply_descent(cfg: &mut RunConfig, d: &DescentArgs) {
    if let Some(k) = d.kmax {
        cfg.k_max = k;
    }
    if let Some(e) = d.eps {
        cfg.eps = e;
    }
    if let Some(b) = d.barrier {
        cfg.barrier = match b {
            BarrierArg::Outside => BarrierMode::OutsideMargin,
            BarrierArg::Literal => BarrierMode::LiteralPaper,
        };
    }
    if let Some(s) = d.step_rule {
        cfg.step_rule = match s {
            StepRuleArg::Clamped => StepRule::ClampedMin,
            StepRuleArg::Literal => StepRule::LiteralMax,
        };
    }
}

fn descent_flags_set(d: &DescentArgs) -> bool {
    d.kmax.is_some() || d.eps.is_some() || d.barrier.is_some() || d.step_rule.is_some()
}

fn generate(args: &GenerateArgs) -> CmdResult {
    check_dim(args.dim)?;
    let method = match args.method {
        MethodArg::PwgdFs => Method::PwgdFs {
            p: args.p.unwrap_or(0.5),
            m: args.m.unwrap_or(0.5),
        },
        _ if args.p.is_some() || args.m.is_some() => return usage("--P and --M only apply to pwgd-fs"),
        MethodArg::PwgdGauss => Method::PwgdGauss,
        MethodArg::Sbq => Method::Sbq,
    };
    if matches!(method, Method::Sbq) && (args.gamma.is_some() || descent_flags_set(&args.descent)) {
        return usage("descent flags (--gamma, --kmax, --eps, --barrier, --step-rule) do not apply to sbq");
    }
    if matches!(method, Method::PwgdGauss) && args.descent.barrier.is_some() {
        return usage("--barrier only applies to pwgd-fs");
    }
    let mut cfg = RunConfig::new(method, args.dim, args.n, args.seed);
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    apply_descent(&mut cfg, &args.descent);

    let outcome = run_method(&cfg)?;
    fs::create_dir_all(&args.out)?;
    let nodes = outcome.rule.nodes();

    let mut buf = Vec::new();
    write_nodes_csv(nodes, &mut buf)?;
    write_atomic(&args.out.join("points.csv"), &buf)?;
    buf.clear();
    write_weights_csv(outcome.rule.weights(), &mut buf)?;
    write_atomic(&args.out.join("weights.csv"), &buf)?;
    let json = serde_json::to_string_pretty(&outcome.report).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_atomic(&args.out.join("report.json"), format!("{json}\n").as_bytes())?;
    write_atomic(&args.out.join("points.svg"), svg::scatter(nodes).as_bytes())?;

    let r = &outcome.report;
    println!(
        "{} d={} N={}: squared WCE equal {:.6e}, optimal {:.6e}, min distance {:.6}, {} sweeps",
        r.method, r.d, r.n, r.sq_wce_equal, r.sq_wce_optimal, r.min_distance, r.sweeps
    );
    Ok(())
}

/// Splits a method list on commas outside parentheses.
fn parse_methods(list: &str) -> Result<Vec<Method>, Failure> {
    let mut items = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in list.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                items.push(&list[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    items.push(&list[start..]);
    let methods = items
        .into_iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Method>().map_err(Failure::from))
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return usage("--methods is empty");
    }
    Ok(methods)
}

fn sweep(args: &SweepArgs) -> CmdResult {
    check_dim(args.dim)?;
    let methods = parse_methods(&args.methods)?;
    let mut configs = kq_core::experiment::sweep_configs(&methods, args.dim, &args.n_list, &args.seeds)?;
    for cfg in &mut configs {
        match cfg.method {
            Method::PwgdFs { .. } => cfg.gamma = args.gamma_fs,
            Method::PwgdGauss => cfg.gamma = args.gamma_gauss,
            Method::Sbq => {}
        }
        apply_descent(cfg, &args.descent);
    }

    let results = run_sweep(&configs);
    let mut reports: Vec<RunReport> = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (cfg, res) in configs.iter().zip(results) {
        match res {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(format!("{} N={} seed={}: {e}", cfg.method, cfg.n, cfg.seed)),
        }
    }

    fs::create_dir_all(&args.out)?;
    let mut buf = Vec::new();
    write_sweep_csv(&reports, &mut buf)?;
    write_atomic(&args.out.join("sweep.csv"), &buf)?;

    let medians = sweep_medians(&reports);
    let mut series: Vec<svg::Series> = Vec::new();
    for p in &medians {
        match series.iter_mut().find(|s| s.name == p.method) {
            Some(s) => s.points.push((p.n as f64, p.sq_wce_optimal)),
            None => series.push(svg::Series {
                name: p.method.clone(),
                points: vec![(p.n as f64, p.sq_wce_optimal)],
            }),
        }
    }
    let chart = svg::log_line_chart(&series, "N", "median squared WCE (optimal weights)");
    write_atomic(&args.out.join("sweep.svg"), chart.as_bytes())?;

    println!(
        "{:<20} {:>5} {:>16} {:>12}",
        "method", "N", "median sq WCE", "median sep"
    );
    for p in &medians {
        println!(
            "{:<20} {:>5} {:>16.6e} {:>12.6}",
            p.method, p.n, p.sq_wce_optimal, p.min_distance
        );
    }
    if failures.is_empty() {
        Ok(())
    } else {
        for f in &failures {
            eprintln!("failed: {f}");
        }
        Err(Failure::Runtime(format!(
            "{} of {} runs failed",
            failures.len(),
            configs.len()
        )))
    }
}

fn verify(args: &VerifyArgs) -> CmdResult {
    let suite: Suite = args.suite.parse()?;
    let rows = run_suite(suite, args.tol)?;
    println!("{:<44} {:>12} {:>10}  result", "check", "residual", "threshold");
    for row in &rows {
        println!("{row}");
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} checks, {failed} failed", rows.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn configure_threads() -> CmdResult {
    let Ok(raw) = std::env::var("KQ_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return usage(format!("KQ_THREADS must be a positive integer, got `{raw}`")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => ExitCode::from(3),
    }
}
