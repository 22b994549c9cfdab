//! Row-sampling distributions and with-replacement sampling plans.
//!
//! A [`SamplingPlan`] stands in for the rescaled sampling operator `D * S^T`:
//! row `t` of the sketch is `weights[t] * X(indices[t], :, :)`. Both
//! operators live in the first frontal slice only, so the gather commutes
//! with the tube DFT and is applied directly to Fourier slices.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TlsError};
use crate::fourier::{from_fourier, to_fourier, FourierBlocks};
use crate::tensor::TubalTensor;
use crate::tsvd::{check_full_column_rank, half_svds};

/// Hat-matrix complements `1 - ||U_hat(i,:,k)||^2` below this are treated as
/// exact zeros (rows fit exactly in that slice).
pub const HAT_COMPLEMENT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionKind {
    Unif,
    Lev,
    Slev { alpha: f64 },
    Opt,
}

impl DistributionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistributionKind::Unif => "unif",
            DistributionKind::Lev => "lev",
            DistributionKind::Slev { .. } => "slev",
            DistributionKind::Opt => "opt",
        }
    }

    /// Parses `unif | lev | slev | opt`; `alpha` is used by `slev` only.
    pub fn parse(name: &str, alpha: f64) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "unif" | "uniform" => Ok(DistributionKind::Unif),
            "lev" | "leverage" => Ok(DistributionKind::Lev),
            "slev" => {
                check_alpha(alpha)?;
                Ok(DistributionKind::Slev { alpha })
            }
            "opt" => Ok(DistributionKind::Opt),
            other => Err(TlsError::Domain(format!("unknown sampling method '{other}'"))),
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(TlsError::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Sampling probabilities over the `n` rows of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    pub kind: DistributionKind,
    pub probs: Vec<f64>,
    /// Leverage scores `h_i` when the distribution was built from them.
    pub leverage: Option<Vec<f64>>,
}

impl SamplingDistribution {
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    /// Compensated sum of the probabilities.
    pub fn total(&self) -> f64 {
        neumaier_sum(&self.probs)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,prob")?;
        for (i, p) in self.probs.iter().enumerate() {
            writeln!(w, "{i},{p:.16e}")?;
        }
        Ok(())
    }
}

pub(crate) fn neumaier_sum(values: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn normalized(weights: Vec<f64>) -> Vec<f64> {
    let total = neumaier_sum(&weights);
    weights.into_iter().map(|w| w / total).collect()
}

pub fn uniform_probs(n: usize) -> Result<SamplingDistribution> {
    if n == 0 {
        return Err(TlsError::Domain("uniform distribution over zero rows".into()));
    }
    Ok(SamplingDistribution {
        kind: DistributionKind::Unif,
        probs: vec![1.0 / n as f64; n],
        leverage: None,
    })
}

/// Fourier data of a full-tubal-rank design shared by the leverage-based
/// distributions.
struct DesignFactors {
    x_hat: FourierBlocks,
    u_hat: FourierBlocks,
    u: TubalTensor,
}

impl DesignFactors {
    fn new(x: &TubalTensor) -> Result<Self> {
        let (n, p, l) = (x.n(), x.p(), x.l());
        if n < p {
            return Err(TlsError::RankDeficient {
                slice: 0,
                rank: n,
                required: p,
            });
        }
        let x_hat = to_fourier(x);
        let svds = half_svds(&x_hat)?;
        check_full_column_rank(&svds, n, p).map_err(|(slice, rank)| TlsError::RankDeficient {
            slice,
            rank,
            required: p,
        })?;
        let half = svds.iter().map(|s| s.u.columns(0, p).into_owned()).collect();
        let u_hat = FourierBlocks::from_half(l, half);
        let u = from_fourier(&u_hat)?;
        Ok(Self { x_hat, u_hat, u })
    }

    fn leverage(&self) -> Vec<f64> {
        row_norms_sq(&self.u)
    }
}

/// `||X(i,:,:)||_F^2` for every horizontal slice.
pub fn row_norms_sq(x: &TubalTensor) -> Vec<f64> {
    let mut h = vec![0.0; x.n()];
    for k in 0..x.l() {
        for j in 0..x.p() {
            for (i, hi) in h.iter_mut().enumerate() {
                let v = x.get(i, j, k);
                *hi += v * v;
            }
        }
    }
    h
}

/// Leverage scores `h_i = ||U_X(i,:,:)||_F^2` from the thin t-SVD. They sum
/// to `p` when every Fourier slice has full column rank.
pub fn leverage_scores(x: &TubalTensor) -> Result<Vec<f64>> {
    Ok(DesignFactors::new(x)?.leverage())
}

pub fn leverage_probs(x: &TubalTensor) -> Result<SamplingDistribution> {
    let h = leverage_scores(x)?;
    Ok(SamplingDistribution {
        kind: DistributionKind::Lev,
        probs: normalized(h.clone()),
        leverage: Some(h),
    })
}

/// `alpha * pi_lev + (1 - alpha) * pi_unif`.
pub fn slev_probs(x: &TubalTensor, alpha: f64) -> Result<SamplingDistribution> {
    check_alpha(alpha)?;
    let lev = leverage_probs(x)?;
    let n = x.n() as f64;
    let probs = lev
        .probs
        .iter()
        .map(|&p| alpha * p + (1.0 - alpha) / n)
        .collect();
    Ok(SamplingDistribution {
        kind: DistributionKind::Slev { alpha },
        probs,
        leverage: lev.leverage,
    })
}

/// Variance-optimal distribution:
/// `pi_i ∝ sqrt((1/l) sum_k (1 - ||U_hat(i,:,k)||^2) ||X_hat(i,:,k)||^2)`.
pub fn opt_probs(x: &TubalTensor) -> Result<SamplingDistribution> {
    let f = DesignFactors::new(x)?;
    let (n, l) = (x.n(), x.l());
    let mut radicand = vec![0.0; n];
    for k in 0..l {
        let xb = f.x_hat.block(k);
        let ub = f.u_hat.block(k);
        for (i, r) in radicand.iter_mut().enumerate() {
            let lev: f64 = ub.row(i).iter().map(|z| z.norm_sqr()).sum();
            let mut complement = 1.0 - lev;
            if complement < HAT_COMPLEMENT_FLOOR {
                complement = 0.0;
            }
            let row: f64 = xb.row(i).iter().map(|z| z.norm_sqr()).sum();
            *r += complement * row;
        }
    }
    let roots: Vec<f64> = radicand.iter().map(|r| (r / l as f64).max(0.0).sqrt()).collect();
    if roots.iter().all(|&r| r == 0.0) {
        return Err(TlsError::DegenerateDistribution);
    }
    let leverage = f.leverage();
    Ok(SamplingDistribution {
        kind: DistributionKind::Opt,
        probs: normalized(roots),
        leverage: Some(leverage),
    })
}

pub fn compute_distribution(kind: DistributionKind, x: &TubalTensor) -> Result<SamplingDistribution> {
    match kind {
        DistributionKind::Unif => uniform_probs(x.n()),
        DistributionKind::Lev => leverage_probs(x),
        DistributionKind::Slev { alpha } => slev_probs(x, alpha),
        DistributionKind::Opt => opt_probs(x),
    }
}

/// Coherence `mu = (n l / p) * max_i ||U(i,:,:)||_F^2` of a partially
/// orthogonal `U`. Always at least `l` since the row norms sum to `p`.
pub fn mu_coherence(u: &TubalTensor) -> f64 {
    let max_row = row_norms_sq(u).into_iter().fold(0.0, f64::max);
    (u.n() * u.l()) as f64 / u.p() as f64 * max_row
}

/// The drawn rows `indices` and rescaling weights `1/sqrt(tau * pi_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub tau: usize,
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// `None` for plans built from explicit indices.
    pub seed: Option<u64>,
}

impl SamplingPlan {
    /// Plan with caller-chosen rows; weights follow `dist`.
    pub fn from_indices(dist: &SamplingDistribution, indices: Vec<usize>) -> Result<Self> {
        let tau = indices.len();
        if tau == 0 {
            return Err(TlsError::Domain("a sampling plan needs at least one row".into()));
        }
        let mut weights = Vec::with_capacity(tau);
        for &i in &indices {
            let p = *dist.probs.get(i).ok_or_else(|| {
                TlsError::Domain(format!("row {i} out of range for {} rows", dist.n()))
            })?;
            if p <= 0.0 {
                return Err(TlsError::ZeroProbabilityRow { row: i });
            }
            weights.push(1.0 / (tau as f64 * p).sqrt());
        }
        Ok(Self {
            tau,
            indices,
            weights,
            seed: None,
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,index,weight")?;
        for (t, (i, wt)) in self.indices.iter().zip(&self.weights).enumerate() {
            writeln!(w, "{t},{i},{wt:.16e}")?;
        }
        Ok(())
    }
}

/// Draws `tau` rows i.i.d. with replacement by inverse-CDF binary search.
/// Deterministic in `seed`; zero-probability rows are never selected.
pub fn draw_plan(dist: &SamplingDistribution, tau: usize, seed: u64) -> Result<SamplingPlan> {
    if tau == 0 {
        return Err(TlsError::Domain("tau must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(dist.n());
    let mut acc = 0.0;
    for &p in &dist.probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let last_positive = dist
        .probs
        .iter()
        .rposition(|&p| p > 0.0)
        .ok_or_else(|| TlsError::Domain("distribution has no positive mass".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::with_capacity(tau);
    let mut weights = Vec::with_capacity(tau);
    for _ in 0..tau {
        let u = rng.random::<f64>() * total;
        let i = cdf.partition_point(|&c| c <= u).min(last_positive);
        indices.push(i);
        weights.push(1.0 / (tau as f64 * dist.probs[i]).sqrt());
    }
    Ok(SamplingPlan {
        tau,
        indices,
        weights,
        seed: Some(seed),
    })
}
