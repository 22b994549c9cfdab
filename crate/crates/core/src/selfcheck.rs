//! Oracle-equivalence suite: every Fourier-domain kernel against a dense
//! block-circulant computation or an independent closed form.

use nalgebra::{DMatrix, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bcirc::{bcirc_oracle, bcirc_product, fold, unfold};
use crate::error::Result;
use crate::io::{decode, encode};
use crate::product::t_product;
use crate::sampling::{compute_distribution, draw_plan, leverage_scores, DistributionKind};
use crate::solver::{solve_ols, solve_subsampled, solve_subsampled_spatial, TlsProblem};
use crate::stats::{
    conditional_variance_fo, conditional_variance_lev, conditional_variance_unif, unconditional_sandwich,
    unconditional_sandwich_lev, unconditional_sandwich_unif,
};
use crate::tensor::TubalTensor;
use crate::tsvd::{fourier_singular_values, t_pinv, thin_t_svd};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Largest error seen, against `tol`.
    pub worst: f64,
    pub tol: f64,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

struct Tally {
    report: SuiteReport,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            report: SuiteReport { name, passed: 0, total: 0, worst: 0.0, tol },
        }
    }

    fn record(&mut self, err: f64) {
        let r = &mut self.report;
        r.total += 1;
        if err <= r.tol {
            r.passed += 1;
        }
        r.worst = if err.is_nan() { f64::NAN } else { r.worst.max(err) };
    }
}

fn rel(a: &TubalTensor, b: &TubalTensor) -> f64 {
    a.sub(b).map(|d| d.fro_norm() / b.fro_norm().max(f64::MIN_POSITIVE)).unwrap_or(f64::INFINITY)
}

/// Random tensor, low tubal rank with probability 1/3.
fn random_tensor(rng: &mut ChaCha8Rng, n: usize, p: usize, l: usize) -> TubalTensor {
    let r = n.min(p);
    if r > 1 && rng.random_bool(1.0 / 3.0) {
        let inner = rng.random_range(1..r);
        let a = TubalTensor::random(n, inner, l, rng);
        let b = TubalTensor::random(inner, p, l, rng);
        t_product(&a, &b).expect("conforming shapes")
    } else {
        TubalTensor::random(n, p, l, rng)
    }
}

pub fn check_t_product(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("t-product vs bcirc", 1e-10);
    for _ in 0..cases {
        let (n, p, r, l) = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=8));
        let x = TubalTensor::random(n, p, l, &mut rng);
        let y = TubalTensor::random(p, r, l, &mut rng);
        let fast = t_product(&x, &y)?;
        t.record(fast.max_abs_diff(&bcirc_product(&x, &y)?).unwrap_or(f64::INFINITY));
    }
    Ok(t.report)
}

/// Reconstruction, the four Penrose identities and the singular-value
/// multiset, each counted as one case.
pub fn check_tsvd(cases: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recon = Tally::new("t-SVD reconstruction", 1e-8);
    let mut penrose = Tally::new("Penrose identities", 1e-10);
    let mut spectrum = Tally::new("singular values vs bcirc", 1e-8);
    for _ in 0..cases {
        let (n, p, l) = (rng.random_range(1..=7), rng.random_range(1..=7), rng.random_range(1..=6));
        let x = random_tensor(&mut rng, n, p, l);
        let f = thin_t_svd(&x)?;
        let back = t_product(&t_product(&f.u, &f.s)?, &f.v.t_transpose())?;
        recon.record(rel(&back, &x));

        let xp = t_pinv(&x)?;
        let xxp = t_product(&x, &xp)?;
        let xpx = t_product(&xp, &x)?;
        for err in [
            rel(&t_product(&xxp, &x)?, &x),
            rel(&t_product(&xpx, &xp)?, &xp),
            rel(&xxp.t_transpose(), &xxp),
            rel(&xpx.t_transpose(), &xpx),
        ] {
            penrose.record(err);
        }

        let dense = SVD::new(bcirc_oracle(&x)?, false, false).singular_values;
        let mut dense: Vec<f64> = dense.iter().copied().collect();
        dense.sort_by(|a, b| b.total_cmp(a));
        let ours = fourier_singular_values(&x)?;
        let scale = dense.first().copied().unwrap_or(1.0).max(1.0);
        let err = if ours.len() == dense.len() {
            ours.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
        } else {
            f64::INFINITY
        };
        spectrum.record(err);
    }
    Ok(vec![recon.report, penrose.report, spectrum.report])
}

fn dense_ls(x: &TubalTensor, y: &TubalTensor) -> Result<TubalTensor> {
    let a = bcirc_oracle(x)?;
    let b: DMatrix<f64> = unfold(y);
    let sol = SVD::new(a, true, true).solve(&b, 1e-12).expect("U and V requested");
    fold(&sol, x.p(), x.l())
}

/// Exact solver against dense least squares on the block-circulant system,
/// and the Fourier subsampled path against the spatial one.
pub fn check_solver(cases: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ols = Tally::new("OLS vs dense bcirc LS", 1e-8);
    let mut paths = Tally::new("subsampled Fourier vs spatial", 1e-10);
    for _ in 0..cases {
        let (p, l) = (rng.random_range(1..=5), rng.random_range(1..=6));
        let n = p + rng.random_range(2..=30);
        let x = TubalTensor::random(n, p, l, &mut rng);
        let y = TubalTensor::random(n, 1, l, &mut rng);
        let prob = TlsProblem::new(x, y)?;
        ols.record(rel(&solve_ols(&prob)?.coef, &dense_ls(prob.x(), prob.y())?));

        let dist = compute_distribution(DistributionKind::Lev, prob.x())?;
        let plan = draw_plan(&dist, 3 * n, rng.random())?;
        match (solve_subsampled(&prob, &plan), solve_subsampled_spatial(&prob, &plan)) {
            (Ok(a), Ok(b)) => paths.record(rel(&a.coef, &b.coef)),
            (Err(_), Err(_)) => paths.record(0.0),
            _ => paths.record(f64::INFINITY),
        }
    }
    Ok(vec![ols.report, paths.report])
}

/// Leverage scores sum to `p`; every distribution sums to one.
pub fn check_distributions(cases: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lev = Tally::new("leverage sum = p", 1e-10);
    let mut sums = Tally::new("probabilities sum to 1", 1e-12);
    for _ in 0..cases {
        let (p, l) = (rng.random_range(1..=5), rng.random_range(1..=6));
        let n = p + rng.random_range(1..=40);
        let x = TubalTensor::random(n, p, l, &mut rng);
        lev.record((leverage_scores(&x)?.iter().sum::<f64>() - p as f64).abs());
        for kind in [
            DistributionKind::Unif,
            DistributionKind::Lev,
            DistributionKind::Slev { alpha: 0.9 },
            DistributionKind::Opt,
        ] {
            sums.record((compute_distribution(kind, &x)?.total() - 1.0).abs());
        }
    }
    Ok(vec![lev.report, sums.report])
}

/// General variance formulas at uniform and leverage probabilities against
/// their closed forms.
pub fn check_variance_identities(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("variance closed forms", 1e-10);
    for _ in 0..cases {
        let (p, l) = (rng.random_range(1..=4), rng.random_range(1..=5));
        let n = p + rng.random_range(3..=30);
        let tau = rng.random_range(p..=3 * n);
        let x = TubalTensor::random(n, p, l, &mut rng);
        let y = TubalTensor::random(n, 1, l, &mut rng);
        let prob = TlsProblem::new(x, y)?;
        let unif = compute_distribution(DistributionKind::Unif, prob.x())?;
        let lev = compute_distribution(DistributionKind::Lev, prob.x())?;
        let h = lev.leverage.clone().expect("leverage distribution keeps scores");
        t.record(rel(&conditional_variance_fo(&prob, &unif, tau)?, &conditional_variance_unif(&prob, tau)?));
        t.record(rel(&conditional_variance_fo(&prob, &lev, tau)?, &conditional_variance_lev(&prob, &h, tau)?));
        t.record(rel(&unconditional_sandwich(prob.x(), &unif, tau, 2.0)?, &unconditional_sandwich_unif(prob.x(), tau, 2.0)?));
        t.record(rel(&unconditional_sandwich(prob.x(), &lev, tau, 2.0)?, &unconditional_sandwich_lev(prob.x(), &h, tau, 2.0)?));
    }
    Ok(t.report)
}

pub fn check_io(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new(".tt round trip", 0.0);
    for _ in 0..cases {
        let x = TubalTensor::random(rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6), &mut rng);
        let ok = decode(&encode(&x)).map(|y| y == x).unwrap_or(false);
        t.record(if ok { 0.0 } else { 1.0 });
    }
    Ok(t.report)
}

/// The full suite at its default sizes.
pub fn run_selfcheck(seed: u64) -> Result<Vec<SuiteReport>> {
    let mut out = vec![check_t_product(100, seed)?];
    out.extend(check_tsvd(50, seed.wrapping_add(1))?);
    out.extend(check_solver(20, seed.wrapping_add(2))?);
    out.extend(check_distributions(10, seed.wrapping_add(3))?);
    out.push(check_variance_identities(10, seed.wrapping_add(4))?);
    out.push(check_io(20, seed.wrapping_add(5))?);
    Ok(out)
}
