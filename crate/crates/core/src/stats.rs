//! First-order variance of the subsampled estimator.
//!
//! With `G = (X^T * X)^{-1}` and `E = Y - X * B_ols`, the linearized
//! conditional variance (randomness from sampling only) is
//!
//! ```text
//! G * X^T * diag_t(E) * diag_t(1/(tau pi_i)) * diag_t(E)^T * X * G
//! ```
//!
//! and the unconditional variance (sampling plus model noise) is
//!
//! ```text
//! sigma^2 G + (sigma^2/tau) G * X^T * diag_t((1 - X_i * G * X_i^T) / pi_i) * X * G.
//! ```
//!
//! Here `sigma^2` is the tubal noise variance, `E[e_i * e_i^T] = sigma^2`;
//! noise with i.i.d. `N(0, s^2)` entries has `sigma^2 = l s^2` (see
//! [`tubal_noise_variance`]). The Taylor remainder is not modeled. Every middle factor is diagonal
//! with real, nonnegative Fourier components, so the sandwiches are
//! computed per Fourier slice without materializing any `n x n` tensor.

use num_complex::Complex64;

use crate::error::{Result, TlsError};
use crate::fourier::{from_fourier, half_len, is_self_conjugate, to_fourier, CMat, FourierBlocks};
use crate::product::t_product;
use crate::sampling::{DistributionKind, SamplingDistribution};
use crate::slice::{self, default_tol};
use crate::solver::{solve_ols, TlsProblem};
use crate::tensor::TubalTensor;

/// `trace(A) = (1/l) sum_k trace(A_hat_k)`; equals the trace of the first
/// frontal slice.
pub fn trace_t(a: &TubalTensor) -> Result<f64> {
    if a.n() != a.p() {
        return Err(TlsError::DimensionMismatch {
            op: "trace_t (needs a square tubal matrix)",
            left: a.shape(),
            right: crate::Shape::new(a.p(), a.n(), a.l()),
        });
    }
    let f = to_fourier(a);
    let mut total = Complex64::new(0.0, 0.0);
    for b in f.blocks() {
        total += b.trace();
    }
    Ok(total.re / a.l() as f64)
}

/// Fourier slices `0..half_len(l)` of `(X^T * X)^dagger`, truncated with
/// `sigma_max` over all slices.
fn gram_inverse_half(x_hat: &FourierBlocks) -> Result<Vec<CMat>> {
    let l = x_hat.l();
    let svds = (0..half_len(l))
        .map(|k| {
            let xb = x_hat.block(k);
            slice::svd(&(xb.adjoint() * xb), is_self_conjugate(k, l), k)
        })
        .collect::<Result<Vec<_>>>()?;
    let p = x_hat.block(0).ncols();
    let tol = default_tol(p, p, svds.iter().map(|f| f.sigma_max()).fold(0.0, f64::max));
    Ok(svds.iter().map(|f| f.pinv(tol)).collect())
}

/// `(X^T * X)^{-1}`, as the slice-wise pseudoinverse of the Gram tensor.
pub fn gram_inverse(x: &TubalTensor) -> Result<TubalTensor> {
    from_fourier(&FourierBlocks::from_half(x.l(), gram_inverse_half(&to_fourier(x))?))
}

/// `G * X^T * diag_t(d) * X * G` where `d[k][i]` is the (real) `k`-th
/// Fourier component of the `i`-th diagonal tube, for the explicitly
/// computed slices.
fn diag_sandwich(x_hat: &FourierBlocks, g_half: &[CMat], d_half: &[Vec<f64>]) -> Result<TubalTensor> {
    let l = x_hat.l();
    let half = g_half
        .iter()
        .zip(d_half)
        .enumerate()
        .map(|(k, (g, d))| {
            let xb = x_hat.block(k);
            let mut scaled = xb.clone();
            for (i, &w) in d.iter().enumerate() {
                scaled.row_mut(i).scale_mut(w);
            }
            let middle = xb.adjoint() * scaled;
            g * middle * g
        })
        .collect();
    from_fourier(&FourierBlocks::from_half(l, half))
}

fn residual_power(prob: &TlsProblem) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let ols = solve_ols(prob)?;
    let e = prob.y().sub(&t_product(prob.x(), &ols.coef)?)?;
    let e_hat = to_fourier(&e);
    let power = (0..half_len(e.l()))
        .map(|k| e_hat.block(k).iter().map(|z| z.norm_sqr()).collect())
        .collect();
    let row_norm = (0..e.n())
        .map(|i| (0..e.l()).map(|k| e.get(i, 0, k).powi(2)).sum::<f64>().sqrt())
        .collect();
    Ok((power, row_norm))
}

fn check_dist(n: usize, dist: &SamplingDistribution, tau: usize) -> Result<()> {
    if dist.n() != n {
        return Err(TlsError::Domain(format!(
            "distribution over {} rows for a design with {n} rows",
            dist.n()
        )));
    }
    if tau == 0 {
        return Err(TlsError::Domain("tau must be at least 1".into()));
    }
    Ok(())
}

/// Linearized conditional variance of `B_W` given `Y`.
pub fn conditional_variance_fo(prob: &TlsProblem, dist: &SamplingDistribution, tau: usize) -> Result<TubalTensor> {
    let s = prob.shape();
    check_dist(s.n, dist, tau)?;
    let (power, row_norm) = residual_power(prob)?;
    let scale = row_norm.iter().fold(0.0, |m: f64, v| m.max(*v)).max(1.0);
    let mut d_half = power;
    for (i, &pi) in dist.probs.iter().enumerate() {
        if pi <= 0.0 {
            if row_norm[i] > 1e-12 * scale {
                return Err(TlsError::ZeroProbabilityRow { row: i });
            }
            d_half.iter_mut().for_each(|d| d[i] = 0.0);
        } else {
            let w = 1.0 / (tau as f64 * pi);
            d_half.iter_mut().for_each(|d| d[i] *= w);
        }
    }
    let g = gram_inverse_half(prob.x_hat())?;
    diag_sandwich(prob.x_hat(), &g, &d_half)
}

/// Conditional variance under uniform sampling in its closed
/// `(n/tau) G X^T diag(E) diag(E)^T X G` form.
pub fn conditional_variance_unif(prob: &TlsProblem, tau: usize) -> Result<TubalTensor> {
    let (power, _) = residual_power(prob)?;
    let g = gram_inverse_half(prob.x_hat())?;
    Ok(diag_sandwich(prob.x_hat(), &g, &power)?.scale(prob.shape().n as f64 / tau as f64))
}

/// Conditional variance under leverage sampling in its closed
/// `(p/tau) G X^T diag(E) diag(1/h_i) diag(E)^T X G` form.
pub fn conditional_variance_lev(prob: &TlsProblem, leverage: &[f64], tau: usize) -> Result<TubalTensor> {
    let (mut power, _) = residual_power(prob)?;
    for d in power.iter_mut() {
        for (v, h) in d.iter_mut().zip(leverage) {
            *v /= h;
        }
    }
    let g = gram_inverse_half(prob.x_hat())?;
    Ok(diag_sandwich(prob.x_hat(), &g, &power)?.scale(prob.shape().p as f64 / tau as f64))
}

/// Fourier components `1 - x_hat_i G_hat x_hat_i^H` of every hat-complement
/// tube `1 - X_i * G * X_i^T`, for the explicitly computed slices
/// (`[k][i]`). They lie in `[0, 1]` up to rounding.
pub fn hat_complements(x: &TubalTensor) -> Result<Vec<Vec<f64>>> {
    let x_hat = to_fourier(x);
    let g = gram_inverse_half(&x_hat)?;
    Ok(hat_complements_from(&x_hat, &g))
}

fn hat_complements_from(x_hat: &FourierBlocks, g_half: &[CMat]) -> Vec<Vec<f64>> {
    g_half
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let xb = x_hat.block(k);
            let xg = xb * g;
            (0..xb.nrows())
                .map(|i| 1.0 - xg.row(i).dot(&xb.row(i).map(|z| z.conj())).re)
                .collect()
        })
        .collect()
}

/// Second term of the unconditional variance,
/// `(sigma^2/tau) G X^T diag_t((1 - X_i G X_i^T)/pi_i) X G`.
pub fn unconditional_sandwich(
    x: &TubalTensor,
    dist: &SamplingDistribution,
    tau: usize,
    sigma2: f64,
) -> Result<TubalTensor> {
    check_dist(x.n(), dist, tau)?;
    check_sigma2(sigma2)?;
    let x_hat = to_fourier(x);
    let g = gram_inverse_half(&x_hat)?;
    let mut d_half = hat_complements_from(&x_hat, &g);
    for (i, &pi) in dist.probs.iter().enumerate() {
        if pi <= 0.0 {
            if d_half.iter().any(|d| d[i] > crate::sampling::HAT_COMPLEMENT_FLOOR) {
                return Err(TlsError::ZeroProbabilityRow { row: i });
            }
            d_half.iter_mut().for_each(|d| d[i] = 0.0);
        } else {
            d_half.iter_mut().for_each(|d| d[i] /= pi);
        }
    }
    Ok(diag_sandwich(&x_hat, &g, &d_half)?.scale(sigma2 / tau as f64))
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(TlsError::Domain(format!("sigma^2 must be positive, got {sigma2}")))
    }
}

/// Linearized unconditional variance `sigma^2 G + sandwich`.
pub fn unconditional_variance_fo(
    x: &TubalTensor,
    dist: &SamplingDistribution,
    tau: usize,
    sigma2: f64,
) -> Result<TubalTensor> {
    let sandwich = unconditional_sandwich(x, dist, tau, sigma2)?;
    gram_inverse(x)?.scale(sigma2).add(&sandwich)
}

/// Unconditional sandwich in its closed uniform form
/// `(n sigma^2/tau) G X^T diag_t(1 - X_i G X_i^T) X G`.
pub fn unconditional_sandwich_unif(x: &TubalTensor, tau: usize, sigma2: f64) -> Result<TubalTensor> {
    let x_hat = to_fourier(x);
    let g = gram_inverse_half(&x_hat)?;
    let d = hat_complements_from(&x_hat, &g);
    Ok(diag_sandwich(&x_hat, &g, &d)?.scale(x.n() as f64 * sigma2 / tau as f64))
}

/// Unconditional sandwich in its closed leverage form
/// `(p sigma^2/tau) G X^T diag_t((1 - X_i G X_i^T)/h_i) X G`.
pub fn unconditional_sandwich_lev(x: &TubalTensor, leverage: &[f64], tau: usize, sigma2: f64) -> Result<TubalTensor> {
    let x_hat = to_fourier(x);
    let g = gram_inverse_half(&x_hat)?;
    let mut d = hat_complements_from(&x_hat, &g);
    for dk in d.iter_mut() {
        for (v, h) in dk.iter_mut().zip(leverage) {
            *v /= h;
        }
    }
    Ok(diag_sandwich(&x_hat, &g, &d)?.scale(x.p() as f64 * sigma2 / tau as f64))
}

/// Tubal noise variance of i.i.d. entrywise noise with variance `entry_sigma2`.
pub fn tubal_noise_variance(entry_sigma2: f64, l: usize) -> f64 {
    l as f64 * entry_sigma2
}

#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub kind: DistributionKind,
    pub tau: usize,
    pub conditional_fo: TubalTensor,
    pub trace_conditional: f64,
    /// Present when a noise variance was supplied.
    pub unconditional_fo: Option<TubalTensor>,
    pub trace_unconditional: Option<f64>,
}

/// Both variances; `entry_sigma2` is the variance of each noise entry, as in
/// the data model `Y = X * B0 + E` with i.i.d. entries.
pub fn variance_report(
    prob: &TlsProblem,
    dist: &SamplingDistribution,
    tau: usize,
    entry_sigma2: Option<f64>,
) -> Result<VarianceReport> {
    let conditional_fo = conditional_variance_fo(prob, dist, tau)?;
    let trace_conditional = trace_t(&conditional_fo)?;
    let l = prob.shape().l;
    let unconditional_fo = entry_sigma2
        .map(|s2| unconditional_variance_fo(prob.x(), dist, tau, tubal_noise_variance(s2, l)))
        .transpose()?;
    let trace_unconditional = unconditional_fo.as_ref().map(trace_t).transpose()?;
    Ok(VarianceReport {
        kind: dist.kind,
        tau,
        conditional_fo,
        trace_conditional,
        unconditional_fo,
        trace_unconditional,
    })
}

/// Largest deviation of every Fourier slice from Hermitian, and the
/// smallest eigenvalue over all slices.
pub fn hermitian_psd_defect(a: &TubalTensor) -> (f64, f64) {
    let f = to_fourier(a);
    let mut asym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for b in f.blocks() {
        asym = asym.max((b - b.adjoint()).norm());
        let h = (b + b.adjoint()).scale(0.5);
        let eig = nalgebra::SymmetricEigen::new(h);
        for v in eig.eigenvalues.iter() {
            min_eig = min_eig.min(*v);
        }
    }
    (asym, min_eig)
}
