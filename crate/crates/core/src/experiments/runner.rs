//! Replicate harness.
//!
//! Every replicate draws its randomness from seeds split off the master
//! seed by `(stream, replicate, ...)`, never from a shared generator, so a
//! report depends only on the configuration and not on the thread count.
//! Within a replicate all methods see the same noise draw, and the tensor
//! methods at a given `tau` share the uniform variates behind their plans.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Mode, PlanMode, SmlsMode};
use super::data::{gen_design, gen_noise, true_coef};
use super::metrics::{summarize, Metrics, OlsReference, ReplicateOutcome};
use super::report::{MetricsReport, MetricsRow};
use super::smls::SmlsDesign;
use crate::error::{Result, TlsError};
use crate::product::t_product;
use crate::sampling::{compute_distribution, draw_plan, DistributionKind, SamplingDistribution, SamplingPlan};
use crate::solver::{solve_subsampled, TlsProblem};
use crate::tensor::TubalTensor;

const DESIGN_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const PLAN_STREAM: u64 = 3;
const MATRIX_PLAN_STREAM: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed from `master` and a path of labels.
pub fn split_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(master), |h, &x| splitmix(h ^ splitmix(x)))
}

#[derive(Debug, Clone)]
enum Cell {
    Tensor { method: usize, tau: usize },
    Matrix { kind: DistributionKind, tau: usize, rows: usize, label: String },
}

impl Cell {
    fn label(&self, cfg: &ExperimentConfig) -> String {
        match self {
            Cell::Tensor { method, .. } => cfg.methods[*method].name().to_string(),
            Cell::Matrix { label, .. } => label.clone(),
        }
    }

    fn tau(&self) -> usize {
        match self {
            Cell::Tensor { tau, .. } | Cell::Matrix { tau, .. } => *tau,
        }
    }
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &tau in &cfg.taus {
        for method in 0..cfg.methods.len() {
            out.push(Cell::Tensor { method, tau });
        }
        for &kind in &cfg.methods {
            if cfg.smls.same_tau() {
                out.push(Cell::Matrix { kind, tau, rows: tau, label: format!("smls-{kind}") });
            }
            if cfg.smls.l_times_tau() {
                out.push(Cell::Matrix { kind, tau, rows: cfg.l * tau, label: format!("smls-{kind}-ltau") });
            }
        }
    }
    out
}

/// Design-dependent state: the problem with its base response, `X * B0`,
/// the tensor distributions and the optional matrix baseline.
struct Context {
    prob: TlsProblem,
    signal: TubalTensor,
    dists: Vec<SamplingDistribution>,
    smls: Option<SmlsDesign>,
}

impl Context {
    fn build(cfg: &ExperimentConfig, design_seed: u64, noise_seed: u64, b0: &TubalTensor) -> Result<Self> {
        let x = gen_design(cfg.design, cfg.n, cfg.p, cfg.l, design_seed)?;
        let signal = t_product(&x, b0)?;
        let y = signal.add(&gen_noise(cfg.n, cfg.l, cfg.sigma2, noise_seed)?)?;
        let prob = TlsProblem::new(x, y)?;
        let dists = cfg
            .methods
            .iter()
            .map(|&k| compute_distribution(k, prob.x()))
            .collect::<Result<_>>()?;
        let smls = match cfg.smls {
            SmlsMode::Off => None,
            _ => Some(SmlsDesign::new(prob.x())?),
        };
        Ok(Self { prob, signal, dists, smls })
    }
}

/// Errors that make one replicate unusable without invalidating the run.
fn is_replicate_failure(e: &TlsError) -> bool {
    matches!(e, TlsError::SketchRankDeficient { .. } | TlsError::ConvergenceFailure { .. })
}

fn run_cell(
    cfg: &ExperimentConfig,
    ctx: &Context,
    prob: &TlsProblem,
    ols: &Arc<OlsReference>,
    cell: &Cell,
    b: usize,
) -> Result<Option<ReplicateOutcome>> {
    let result = match cell {
        Cell::Tensor { method, tau } => {
            let start = Instant::now();
            let dist = &ctx.dists[*method];
            let plan = match cfg.plan {
                PlanMode::Iid => draw_plan(dist, *tau, split_seed(cfg.seed, &[PLAN_STREAM, b as u64, *tau as u64]))?,
                PlanMode::AllRows => SamplingPlan::from_indices(dist, (0..cfg.n).collect())?,
            };
            solve_subsampled(prob, &plan).map(|sol| (sol.coef, sol.objective, start.elapsed().as_secs_f64() * 1e3))
        }
        Cell::Matrix { kind, rows, .. } => {
            let design = ctx.smls.as_ref().expect("matrix baseline prepared");
            let seed = split_seed(cfg.seed, &[MATRIX_PLAN_STREAM, b as u64, *rows as u64]);
            design
                .solve(prob.y(), *kind, *rows, seed)
                .map(|sol| (sol.coef, sol.objective, sol.elapsed_ms))
        }
    };
    match result {
        Ok((coef, objective, elapsed_ms)) => Ok(Some(ReplicateOutcome {
            coef,
            objective,
            ols: Arc::clone(ols),
            elapsed_ms,
        })),
        Err(e) if is_replicate_failure(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_replicate(
    cfg: &ExperimentConfig,
    cells: &[Cell],
    shared: Option<&Context>,
    b0: &TubalTensor,
    b: usize,
) -> Result<Vec<Option<ReplicateOutcome>>> {
    let owned;
    let ctx = match shared {
        Some(c) => c,
        None => {
            let design_seed = split_seed(cfg.seed, &[DESIGN_STREAM, b as u64]);
            let noise_seed = split_seed(cfg.seed, &[NOISE_STREAM, b as u64]);
            owned = Context::build(cfg, design_seed, noise_seed, b0)?;
            &owned
        }
    };
    let prob = match (cfg.mode, shared.is_some()) {
        (Mode::Unconditional, true) => {
            let noise = gen_noise(cfg.n, cfg.l, cfg.sigma2, split_seed(cfg.seed, &[NOISE_STREAM, b as u64]))?;
            ctx.prob.with_response(ctx.signal.add(&noise)?)?
        }
        _ => ctx.prob.clone(),
    };
    let ols = Arc::new(OlsReference::solve(&prob)?);
    cells.iter().map(|c| run_cell(cfg, ctx, &prob, &ols, c, b)).collect()
}

/// Runs every (method, tau) cell over `cfg.replicates` replicates on a pool
/// of `cfg.threads` threads (0: rayon's default).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| TlsError::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let b0 = true_coef(cfg.p, cfg.l)?;
    let cells = cells(cfg);
    let shared = if cfg.redraw_design {
        None
    } else {
        let design_seed = split_seed(cfg.seed, &[DESIGN_STREAM]);
        let noise_seed = split_seed(cfg.seed, &[NOISE_STREAM]);
        Some(Context::build(cfg, design_seed, noise_seed, &b0)?)
    };
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| run_replicate(cfg, &cells, shared.as_ref(), &b0, b))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let ok: Vec<ReplicateOutcome> = replicates.iter().filter_map(|r| r[c].clone()).collect();
        let failures = cfg.replicates - ok.len();
        let metrics = if ok.len() >= 2 { summarize(&ok, &b0)? } else { Metrics::UNDEFINED };
        let mean_ms = if cfg.timing && !ok.is_empty() {
            ok.iter().map(|o| o.elapsed_ms).sum::<f64>() / ok.len() as f64
        } else {
            f64::NAN
        };
        rows.push(MetricsRow::new(cell.label(cfg), cell.tau(), metrics, mean_ms, ok.len(), failures));
    }
    Ok(MetricsReport::new(rows))
}

/// Tensor versus matrix subsampling: unif and lev at `tau`, with the
/// matrix baseline at `tau` and `l * tau` rows, timing enabled.
pub fn compare_mls(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let mut cfg = cfg.clone();
    cfg.methods = vec![DistributionKind::Unif, DistributionKind::Lev];
    cfg.smls = SmlsMode::Both;
    cfg.plan = PlanMode::Iid;
    cfg.timing = true;
    run_experiment(&cfg)
}
