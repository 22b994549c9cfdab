//! Exact and subsampled tensor least squares `min_B ||Y - X * B||_F^2`.
//!
//! Both solvers work on the Fourier slices `0..ceil((l+1)/2)` only and fill
//! the rest by conjugation before the inverse transform.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, Shape, TlsError};
use crate::fourier::{from_fourier, half_len, is_self_conjugate, to_fourier, CMat, FourierBlocks};
use crate::product::t_product;
use crate::sampling::SamplingPlan;
use crate::slice::{self, default_tol};
use crate::tensor::TubalTensor;
use crate::tsvd::{check_full_column_rank, half_svds};

/// A validated design: `n >= p` and every Fourier slice of full column rank.
#[derive(Debug)]
pub(crate) struct Design {
    pub x: TubalTensor,
    pub x_hat: FourierBlocks,
    /// Pseudoinverses of the explicitly computed Fourier slices.
    pinv_half: Vec<CMat>,
}

impl Design {
    pub fn new(x: TubalTensor) -> Result<Self> {
        let (n, p) = (x.n(), x.p());
        if n < p {
            return Err(TlsError::RankDeficient {
                slice: 0,
                rank: n,
                required: p,
            });
        }
        let x_hat = to_fourier(&x);
        let svds = half_svds(&x_hat)?;
        check_full_column_rank(&svds, n, p).map_err(|(slice, rank)| TlsError::RankDeficient {
            slice,
            rank,
            required: p,
        })?;
        let pinv_half = svds
            .iter()
            .map(|s| s.pinv(default_tol(n, p, s.sigma_max())))
            .collect();
        Ok(Self { x, x_hat, pinv_half })
    }
}

/// Design `X: n x p x l` and response `Y: n x 1 x l`.
#[derive(Debug, Clone)]
pub struct TlsProblem {
    design: Arc<Design>,
    y: TubalTensor,
    y_hat: FourierBlocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Ols,
    Subsampled { tau: usize, seed: Option<u64> },
}

#[derive(Debug, Clone)]
pub struct TlsSolution {
    /// `B: p x 1 x l`.
    pub coef: TubalTensor,
    /// `||Y - X * B||_F^2`.
    pub objective: f64,
    pub method: SolveMethod,
}

impl TlsProblem {
    pub fn new(x: TubalTensor, y: TubalTensor) -> Result<Self> {
        check_response(&x, &y)?;
        let design = Arc::new(Design::new(x)?);
        let y_hat = to_fourier(&y);
        Ok(Self { design, y, y_hat })
    }

    /// Same design, new response; skips re-validating the design.
    pub fn with_response(&self, y: TubalTensor) -> Result<Self> {
        check_response(&self.design.x, &y)?;
        let y_hat = to_fourier(&y);
        Ok(Self {
            design: Arc::clone(&self.design),
            y,
            y_hat,
        })
    }

    pub fn x(&self) -> &TubalTensor {
        &self.design.x
    }

    pub fn y(&self) -> &TubalTensor {
        &self.y
    }

    pub fn x_hat(&self) -> &FourierBlocks {
        &self.design.x_hat
    }

    pub fn y_hat(&self) -> &FourierBlocks {
        &self.y_hat
    }

    pub fn shape(&self) -> Shape {
        self.design.x.shape()
    }

    /// `f(B)` from half-spectrum coefficients via Parseval.
    fn fourier_objective(&self, b_half: &[CMat]) -> f64 {
        let l = self.shape().l;
        let mut total = 0.0;
        for (k, b) in b_half.iter().enumerate() {
            let r = self.y_hat.block(k) - self.design.x_hat.block(k) * b;
            let mult = if is_self_conjugate(k, l) { 1.0 } else { 2.0 };
            total += mult * r.norm_squared();
        }
        total / l as f64
    }

    fn finish(&self, b_half: Vec<CMat>, method: SolveMethod) -> Result<TlsSolution> {
        let objective = self.fourier_objective(&b_half);
        let coef = from_fourier(&FourierBlocks::from_half(self.shape().l, b_half))?;
        Ok(TlsSolution {
            coef,
            objective,
            method,
        })
    }
}

fn check_response(x: &TubalTensor, y: &TubalTensor) -> Result<()> {
    if y.p() != 1 || y.n() != x.n() || y.l() != x.l() {
        return Err(TlsError::DimensionMismatch {
            op: "least squares (design vs response)",
            left: x.shape(),
            right: y.shape(),
        });
    }
    Ok(())
}

/// `f(B) = ||Y - X * B||_F^2`, evaluated in the spatial domain.
pub fn objective(prob: &TlsProblem, b: &TubalTensor) -> Result<f64> {
    let s = prob.shape();
    if b.n() != s.p || b.p() != 1 || b.l() != s.l {
        return Err(TlsError::DimensionMismatch {
            op: "objective",
            left: s,
            right: b.shape(),
        });
    }
    Ok(prob.y.sub(&t_product(prob.x(), b)?)?.fro_norm_sq())
}

/// `B_ols = X^dagger * Y`, slice-wise.
pub fn solve_ols(prob: &TlsProblem) -> Result<TlsSolution> {
    let b_half = prob
        .design
        .pinv_half
        .iter()
        .enumerate()
        .map(|(k, pinv)| pinv * prob.y_hat.block(k))
        .collect();
    prob.finish(b_half, SolveMethod::Ols)
}

fn check_plan(prob: &TlsProblem, plan: &SamplingPlan) -> Result<()> {
    let s = prob.shape();
    if plan.tau < s.p || plan.indices.len() != plan.tau || plan.weights.len() != plan.tau {
        return Err(TlsError::Domain(format!(
            "plan with tau={} ({} indices) cannot determine {} coefficients",
            plan.tau,
            plan.indices.len(),
            s.p
        )));
    }
    if let Some(&bad) = plan.indices.iter().find(|&&i| i >= s.n) {
        return Err(TlsError::Domain(format!("plan row {bad} out of range for {} rows", s.n)));
    }
    Ok(())
}

/// Weighted subsampled solve `B_W = (D S^T X)^dagger D S^T Y`, computed by
/// gathering and rescaling rows of each Fourier slice.
pub fn solve_subsampled(prob: &TlsProblem, plan: &SamplingPlan) -> Result<TlsSolution> {
    check_plan(prob, plan)?;
    let s = prob.shape();
    let tau = plan.tau;
    let gather = |m: &CMat, cols: usize| {
        CMat::from_fn(tau, cols, |t, j| m[(plan.indices[t], j)] * Complex64::new(plan.weights[t], 0.0))
    };
    let mut factors = Vec::with_capacity(half_len(s.l));
    let mut rhs = Vec::with_capacity(half_len(s.l));
    for k in 0..half_len(s.l) {
        let a = gather(prob.design.x_hat.block(k), s.p);
        factors.push(slice::svd(&a, is_self_conjugate(k, s.l), k)?);
        rhs.push(gather(prob.y_hat.block(k), 1));
    }
    let sigma_max = factors.iter().map(|f| f.sigma_max()).fold(0.0, f64::max);
    let tol = default_tol(tau, s.p, sigma_max);
    let mut b_half = Vec::with_capacity(factors.len());
    for (k, (f, b)) in factors.iter().zip(&rhs).enumerate() {
        let rank = f.rank(tol);
        if rank < s.p {
            return Err(TlsError::SketchRankDeficient {
                slice: k,
                rank,
                required: s.p,
            });
        }
        b_half.push(f.solve(b, tol));
    }
    prob.finish(
        b_half,
        SolveMethod::Subsampled {
            tau,
            seed: plan.seed,
        },
    )
}

/// Same estimator evaluated in the spatial domain: materialize the weighted
/// subsample `(D S^T X, D S^T Y)` and solve it exactly. Reference path.
pub fn solve_subsampled_spatial(prob: &TlsProblem, plan: &SamplingPlan) -> Result<TlsSolution> {
    check_plan(prob, plan)?;
    let xs = prob.x().gather_rows(&plan.indices, Some(&plan.weights))?;
    let ys = prob.y.gather_rows(&plan.indices, Some(&plan.weights))?;
    let sub = TlsProblem::new(xs, ys).map_err(|e| match e {
        TlsError::RankDeficient {
            slice,
            rank,
            required,
        } => TlsError::SketchRankDeficient {
            slice,
            rank,
            required,
        },
        other => other,
    })?;
    let coef = solve_ols(&sub)?.coef;
    let objective = objective(prob, &coef)?;
    Ok(TlsSolution {
        coef,
        objective,
        method: SolveMethod::Subsampled {
            tau: plan.tau,
            seed: plan.seed,
        },
    })
}

/// Sample size `ceil(440 p^2 l^2 / (beta * eps))` sufficient for the
/// `(1 + eps)` relative-error guarantee with probability 0.7. Reference only:
/// the solver accepts any `tau >= p`.
pub fn tau_lower_bound(p: usize, l: usize, beta: f64, eps: f64) -> Result<u64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(TlsError::Domain(format!("beta must lie in (0, 1], got {beta}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(TlsError::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    let (p, l) = (p as f64, l as f64);
    Ok((440.0 * p * p * l * l / (beta * eps)).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{leverage_probs, uniform_probs};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_problem(n: usize, p: usize, l: usize, seed: u64) -> TlsProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = TubalTensor::random(n, p, l, &mut rng);
        let y = TubalTensor::random(n, 1, l, &mut rng);
        TlsProblem::new(x, y).unwrap()
    }

    #[test]
    fn consistent_system_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let x = TubalTensor::random(12, 3, 4, &mut rng);
        let b0 = TubalTensor::random(3, 1, 4, &mut rng);
        let y = t_product(&x, &b0).unwrap();
        let prob = TlsProblem::new(x, y).unwrap();
        let sol = solve_ols(&prob).unwrap();
        assert!(sol.coef.max_abs_diff(&b0).unwrap() < 1e-10);
        assert!(sol.objective < 1e-20);
        assert!(objective(&prob, &sol.coef).unwrap() < 1e-20);
    }

    #[test]
    fn objective_hand_values() {
        let x = TubalTensor::new(2, 1, 1, vec![1.0, 1.0]).unwrap();
        let y = TubalTensor::new(2, 1, 1, vec![0.0, 2.0]).unwrap();
        let prob = TlsProblem::new(x, y.clone()).unwrap();
        let b = TubalTensor::new(1, 1, 1, vec![1.0]).unwrap();
        assert_eq!(objective(&prob, &b).unwrap(), 2.0);
        let zero = TubalTensor::zeros(1, 1, 1);
        assert_eq!(objective(&prob, &zero).unwrap(), y.fro_norm_sq());
        assert!(objective(&prob, &TubalTensor::zeros(2, 1, 1)).is_err());
    }

    #[test]
    fn l1_matches_dense_least_squares() {
        let prob = random_problem(9, 3, 1, 41);
        let sol = solve_ols(&prob).unwrap();
        let a = prob.x().frontal_slice(0);
        let b = prob.y().frontal_slice(0);
        // normal equations oracle
        let expect = (a.transpose() * &a).try_inverse().unwrap() * a.transpose() * b;
        for j in 0..3 {
            assert!((sol.coef.get(j, 0, 0) - expect[(j, 0)]).abs() < 1e-10);
        }
    }

    #[test]
    fn solution_objective_matches_spatial() {
        let prob = random_problem(15, 4, 5, 42);
        let sol = solve_ols(&prob).unwrap();
        let spatial = objective(&prob, &sol.coef).unwrap();
        assert!((sol.objective - spatial).abs() <= 1e-8 * spatial);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let x = TubalTensor::random(5, 2, 3, &mut rng);
        assert!(matches!(
            TlsProblem::new(x.clone(), TubalTensor::zeros(4, 1, 3)),
            Err(TlsError::DimensionMismatch { .. })
        ));
        assert!(TlsProblem::new(TubalTensor::random(2, 3, 3, &mut rng), TubalTensor::zeros(2, 1, 3)).is_err());
        let flat = TubalTensor::from_fn(5, 2, 3, |i, _, _| i as f64);
        assert!(matches!(
            TlsProblem::new(flat, TubalTensor::zeros(5, 1, 3)),
            Err(TlsError::RankDeficient { .. })
        ));
    }

    #[test]
    fn full_unit_plan_recovers_ols() {
        let prob = random_problem(20, 3, 4, 44);
        let dist = uniform_probs(20).unwrap();
        let plan = SamplingPlan::from_indices(&dist, (0..20).rev().collect()).unwrap();
        assert!(plan.weights.iter().all(|&w| (w - 1.0).abs() < 1e-15));
        let a = solve_subsampled(&prob, &plan).unwrap();
        let b = solve_ols(&prob).unwrap();
        assert!(a.coef.max_abs_diff(&b.coef).unwrap() < 1e-12);
    }

    #[test]
    fn fourier_and_spatial_paths_agree() {
        for (seed, l) in [(45u64, 1usize), (46, 4), (47, 5)] {
            let prob = random_problem(40, 3, l, seed);
            let dist = leverage_probs(prob.x()).unwrap();
            let plan = crate::sampling::draw_plan(&dist, 12, seed).unwrap();
            let a = solve_subsampled(&prob, &plan).unwrap();
            let b = solve_subsampled_spatial(&prob, &plan).unwrap();
            assert!(a.coef.max_abs_diff(&b.coef).unwrap() < 1e-10);
            assert!((a.objective - b.objective).abs() <= 1e-10 * b.objective);
        }
    }

    #[test]
    fn sketch_rank_deficiency_is_reported() {
        let prob = random_problem(10, 3, 2, 48);
        let dist = uniform_probs(10).unwrap();
        let plan = SamplingPlan::from_indices(&dist, vec![1, 1, 1, 2]).unwrap();
        assert!(matches!(
            solve_subsampled(&prob, &plan),
            Err(TlsError::SketchRankDeficient { required: 3, .. })
        ));
        let short = SamplingPlan::from_indices(&dist, vec![1, 2]).unwrap();
        assert!(solve_subsampled(&prob, &short).is_err());
    }

    #[test]
    fn tau_bound_values() {
        assert_eq!(tau_lower_bound(1, 1, 1.0, 1.0).unwrap(), 440);
        assert_eq!(tau_lower_bound(10, 10, 1.0, 1.0).unwrap(), 4_400_000);
        assert_eq!(tau_lower_bound(3, 2, 0.5, 1.0).unwrap(), 2 * tau_lower_bound(3, 2, 1.0, 1.0).unwrap());
        assert!(tau_lower_bound(1, 1, 0.0, 1.0).is_err());
        assert!(tau_lower_bound(1, 1, 1.0, 1.5).is_err());
    }
}
