//! `tlsq`: subsampled tensor least squares from the command line.
//!
//! Data goes to stdout as CSV, diagnostics to stderr. Exit codes: 0 success,
//! 1 usage or configuration error, 2 numerical failure, 3 I/O.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tlsq_core::experiments::{compare_mls, run_experiment, write_report, ExperimentConfig, MetricsReport};
use tlsq_core::io::{read_tensor, write_tensor};
use tlsq_core::sampling::{compute_distribution, draw_plan};
use tlsq_core::selfcheck::run_selfcheck;
use tlsq_core::solver::{solve_ols, solve_subsampled};
use tlsq_core::stats::variance_report;
use tlsq_core::{DistributionKind, TlsError, TlsProblem};

const TENSOR_FORMAT: &str = "Tensors use the .tt format: magic \"TTEN\", u32 LE version 1, \
n, p, l as u64 LE, then n*p*l f64 LE values, index k*n*p + j*n + i.";

const CONFIG_FORMAT: &str = "Config files hold one `key = value` per line, `#` starts a comment. \
Keys: n, p, l, design (mn|t3|t1), sigma2, replicates, taus (comma list), methods (comma list of \
unif|lev|slev|opt), alpha, seed (required), smls (off|same_tau|l_times_tau|both), mode \
(conditional|unconditional), plan (iid|all_rows), redraw_design, timing, threads. \
Output CSV columns: method,tau,smrfv,smre,ssb,sv,smse,mean_ms,replicates,failures.";

/// Default seed of `selfcheck`, fixed so that the suite is reproducible.
const SELFCHECK_SEED: u64 = 20240917;

#[derive(Parser)]
#[command(name = "tlsq", version, about = "Randomized subsampling for tensor least squares under the t-product")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve min ||X * B - Y||_F exactly or on a subsample; prints `method,tau,objective,ms`.
    #[command(after_help = TENSOR_FORMAT)]
    Solve(SolveArgs),
    /// Print a sampling distribution as `index,prob` CSV.
    #[command(after_help = TENSOR_FORMAT)]
    Probs(ProbsArgs),
    /// Print first-order variance traces as `method,tau,trace_conditional_fo,trace_unconditional_fo`.
    #[command(after_help = TENSOR_FORMAT)]
    Variance(VarianceArgs),
    /// Run a replicated simulation and write the metrics CSV.
    #[command(after_help = CONFIG_FORMAT)]
    Experiment(ExperimentArgs),
    /// Tensor versus matrix subsampling (unif and lev, matrix baseline at tau and l*tau rows, timed).
    #[command(after_help = CONFIG_FORMAT)]
    CompareMls(ExperimentArgs),
    /// Run the oracle-equivalence suite; prints `suite,passed,total,worst,tol`.
    Selfcheck {
        #[arg(long, default_value_t = SELFCHECK_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Ols,
    Unif,
    Lev,
    Slev,
    Opt,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Unif,
    Lev,
    Slev,
    Opt,
}

impl Method {
    fn kind(self, alpha: f64) -> DistributionKind {
        match self {
            Method::Unif => DistributionKind::Unif,
            Method::Lev => DistributionKind::Lev,
            Method::Slev => DistributionKind::Slev { alpha },
            Method::Opt => DistributionKind::Opt,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Design tensor X (n x p x l).
    #[arg(long)]
    design: PathBuf,
    /// Response tensor Y (n x 1 x l).
    #[arg(long)]
    response: PathBuf,
    #[arg(long, value_enum, default_value = "ols")]
    method: SolveMethod,
    /// Mixing weight of shrinked leverage sampling.
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Subsample size, required unless --method ols.
    #[arg(long)]
    tau: Option<usize>,
    /// Sampling seed, required unless --method ols.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the coefficient tensor B (p x 1 x l) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbsArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
}

#[derive(Args)]
struct VarianceArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    response: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long)]
    tau: usize,
    /// Variance of each noise entry (as `sigma2` in experiment configs);
    /// without it the unconditional column is empty.
    #[arg(long)]
    sigma2: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Core(TlsError),
    Io(io::Error),
}

impl From<TlsError> for Failure {
    fn from(e: TlsError) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(TlsError::Config(_)) => 1,
            Failure::Core(e) if e.is_io() => 3,
            Failure::Io(_) => 3,
            Failure::Core(_) => 2,
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn sampling_args(method: &str, tau: Option<usize>, seed: Option<u64>) -> std::result::Result<(usize, u64), Failure> {
    match (tau, seed) {
        (Some(t), Some(s)) => Ok((t, s)),
        _ => Err(Failure::Usage(format!("--method {method} needs both --tau and --seed"))),
    }
}

fn solve(a: SolveArgs) -> CliResult {
    let prob = TlsProblem::new(read_tensor(&a.design)?, read_tensor(&a.response)?)?;
    let (name, kind) = match a.method {
        SolveMethod::Ols => ("ols", None),
        SolveMethod::Unif => ("unif", Some(Method::Unif)),
        SolveMethod::Lev => ("lev", Some(Method::Lev)),
        SolveMethod::Slev => ("slev", Some(Method::Slev)),
        SolveMethod::Opt => ("opt", Some(Method::Opt)),
    };
    let start = Instant::now();
    let (tau, sol) = match kind {
        None => (prob.shape().n, solve_ols(&prob)?),
        Some(m) => {
            let (tau, seed) = sampling_args(name, a.tau, a.seed)?;
            let dist = compute_distribution(m.kind(a.alpha), prob.x())?;
            (tau, solve_subsampled(&prob, &draw_plan(&dist, tau, seed)?)?)
        }
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(path) = &a.out {
        write_tensor(path, &sol.coef)?;
    }
    writeln!(io::stdout().lock(), "{name},{tau},{:.16e},{ms:.3}", sol.objective)?;
    Ok(())
}

fn probs(a: ProbsArgs) -> CliResult {
    let dist = compute_distribution(a.method.kind(a.alpha), &read_tensor(&a.design)?)?;
    let mut out = io::BufWriter::new(io::stdout().lock());
    dist.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn variance(a: VarianceArgs) -> CliResult {
    let prob = TlsProblem::new(read_tensor(&a.design)?, read_tensor(&a.response)?)?;
    let kind = a.method.kind(a.alpha);
    let dist = compute_distribution(kind, prob.x())?;
    let r = variance_report(&prob, &dist, a.tau, a.sigma2)?;
    let unconditional = r.trace_unconditional.map(|t| format!("{t:.16e}")).unwrap_or_default();
    let mut out = io::stdout().lock();
    writeln!(out, "method,tau,trace_conditional_fo,trace_unconditional_fo")?;
    writeln!(out, "{},{},{:.16e},{unconditional}", kind.name(), a.tau, r.trace_conditional)?;
    Ok(())
}

/// `TLSQ_THREADS` caps the worker count of the config.
fn load_config(path: &PathBuf) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Ok(raw) = std::env::var("TLSQ_THREADS") {
        let cap: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| Failure::Usage(format!("TLSQ_THREADS must be a positive integer, got '{raw}'")))?;
        cfg.threads = if cfg.threads == 0 { cap } else { cfg.threads.min(cap) };
    }
    Ok(cfg)
}

fn emit(report: &MetricsReport, out: Option<&PathBuf>) -> CliResult {
    match out {
        Some(path) => write_report(report, path)?,
        None => io::stdout().lock().write_all(report.to_csv().as_bytes())?,
    }
    Ok(())
}

fn selfcheck(seed: u64) -> CliResult {
    let suites = run_selfcheck(seed)?;
    let mut out = io::stdout().lock();
    writeln!(out, "suite,passed,total,worst,tol")?;
    for s in &suites {
        writeln!(out, "{},{},{},{:.3e},{:.0e}", s.name, s.passed, s.total, s.worst, s.tol)?;
    }
    let failed: Vec<_> = suites.iter().filter(|s| !s.ok()).map(|s| s.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Core(TlsError::Domain(format!("suites failed: {}", failed.join(", ")))))
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Probs(a) => probs(a),
        Command::Variance(a) => variance(a),
        Command::Experiment(a) => emit(&run_experiment(&load_config(&a.config)?)?, a.out.as_ref()),
        Command::CompareMls(a) => emit(&compare_mls(&load_config(&a.config)?)?, a.out.as_ref()),
        Command::Selfcheck { seed } => selfcheck(seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(code)
        }
    }
}
