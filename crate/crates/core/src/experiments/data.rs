//! Synthetic designs and responses for the simulation protocol.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};

use crate::error::{Result, TlsError};
use crate::product::t_product;
use crate::tensor::TubalTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    /// Rows `N(1_p, Sigma)`.
    Mn,
    /// Multivariate t with 3 degrees of freedom, scale `Sigma`, location 0.
    T3,
    /// Multivariate t with 1 degree of freedom (Cauchy tails).
    T1,
}

impl DesignKind {
    pub fn name(&self) -> &'static str {
        match self {
            DesignKind::Mn => "mn",
            DesignKind::T3 => "t3",
            DesignKind::T1 => "t1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mn" => Ok(DesignKind::Mn),
            "t3" => Ok(DesignKind::T3),
            "t1" => Ok(DesignKind::T1),
            other => Err(TlsError::Config(format!("unknown design '{other}' (mn, t3, t1)"))),
        }
    }

    fn dof(&self) -> Option<f64> {
        match self {
            DesignKind::Mn => None,
            DesignKind::T3 => Some(3.0),
            DesignKind::T1 => Some(1.0),
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `Sigma_ij = 2 * 0.5^|i-j|`.
pub fn design_covariance(p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| 2.0 * 0.5f64.powi(i.abs_diff(j) as i32))
}

/// `n x p x l` design whose rows, in every frontal slice, are i.i.d. draws
/// from `kind`.
pub fn gen_design(kind: DesignKind, n: usize, p: usize, l: usize, seed: u64) -> Result<TubalTensor> {
    if p < 2 || n == 0 || l == 0 {
        return Err(TlsError::Domain(format!("gen_design needs p >= 2 and n, l >= 1 (got {n}x{p}x{l})")));
    }
    let chol = design_covariance(p)
        .cholesky()
        .expect("covariance is positive definite")
        .unpack();
    let chi = kind.dof().map(|nu| (ChiSquared::new(nu).expect("dof > 0"), nu));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = TubalTensor::zeros(n, p, l);
    for k in 0..l {
        for i in 0..n {
            let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut row = &chol * z;
            match &chi {
                None => row.add_scalar_mut(1.0),
                Some((dist, nu)) => row /= (rng.sample(dist) / nu).sqrt(),
            }
            for j in 0..p {
                x.set(i, j, k, row[j]);
            }
        }
    }
    Ok(x)
}

/// Every frontal slice equals `(1, 1, 0.1, ..., 0.1, 1, 1)`.
pub fn true_coef(p: usize, l: usize) -> Result<TubalTensor> {
    if p < 4 {
        return Err(TlsError::Domain(format!("true coefficient needs p >= 4, got {p}")));
    }
    Ok(TubalTensor::from_fn(p, 1, l, |j, _, _| if j < 2 || j >= p - 2 { 1.0 } else { 0.1 }))
}

/// `n x 1 x l` noise with i.i.d. `N(0, sigma2)` entries.
pub fn gen_noise(n: usize, l: usize, sigma2: f64, seed: u64) -> Result<TubalTensor> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(TlsError::Domain(format!("noise variance must be >= 0, got {sigma2}")));
    }
    let sd = sigma2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(TubalTensor::from_fn(n, 1, l, |_, _, _| sd * rng.sample::<f64, _>(StandardNormal)))
}

/// `Y = X * B0 + E`; returns `(Y, B0)`.
pub fn gen_response(x: &TubalTensor, sigma2: f64, seed: u64) -> Result<(TubalTensor, TubalTensor)> {
    let b0 = true_coef(x.p(), x.l())?;
    let e = gen_noise(x.n(), x.l(), sigma2, seed)?;
    let y = t_product(x, &b0)?.add(&e)?;
    Ok((y, b0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::leverage_scores;
    use crate::solver::{solve_ols, TlsProblem};

    #[test]
    fn mn_moments() {
        let (n, p) = (5000, 4);
        let x = gen_design(DesignKind::Mn, n, p, 1, 1).unwrap();
        let sigma = design_covariance(p);
        let m = x.frontal_slice(0);
        let mean = m.row_mean();
        for j in 0..p {
            assert!((mean[j] - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(), "mean {j}");
        }
        let centered = DMatrix::from_fn(n, p, |i, j| m[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        // 10% on the correlation scale `sqrt(Sigma_ii Sigma_jj)`
        for i in 0..p {
            for j in 0..p {
                let scale = (sigma[(i, i)] * sigma[(j, j)]).sqrt();
                assert!((cov[(i, j)] - sigma[(i, j)]).abs() <= 0.1 * scale, "cov {i},{j}");
            }
        }
    }

    #[test]
    fn t1_leverage_is_heavy_tailed() {
        let x = gen_design(DesignKind::T1, 1000, 10, 3, 7).unwrap();
        let mut h = leverage_scores(&x).unwrap();
        let max = h.iter().cloned().fold(0.0, f64::max);
        h.sort_by(f64::total_cmp);
        assert!(max >= 10.0 * h[h.len() / 2]);
    }

    #[test]
    fn coefficient_pattern() {
        let b = true_coef(10, 2).unwrap();
        let slice: Vec<f64> = (0..10).map(|j| b.get(j, 0, 1)).collect();
        assert_eq!(slice, vec![1., 1., 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 1., 1.]);
        assert!(true_coef(3, 1).is_err());
    }

    #[test]
    fn noiseless_response_recovers_truth() {
        let x = gen_design(DesignKind::Mn, 50, 5, 3, 2).unwrap();
        let (y, b0) = gen_response(&x, 0.0, 3).unwrap();
        let prob = TlsProblem::new(x, y).unwrap();
        let ols = solve_ols(&prob).unwrap();
        assert!(ols.coef.max_abs_diff(&b0).unwrap() < 1e-10);
        assert!(ols.objective < 1e-20);
    }

    #[test]
    fn noise_variance() {
        let e = gen_noise(5000, 10, 9.0, 4).unwrap();
        let var = e.fro_norm_sq() / 50000.0;
        assert!((var - 9.0).abs() < 0.45);
    }

    #[test]
    fn deterministic_in_seed() {
        for kind in [DesignKind::Mn, DesignKind::T3, DesignKind::T1] {
            let a = gen_design(kind, 20, 4, 2, 9).unwrap();
            assert_eq!(a, gen_design(kind, 20, 4, 2, 9).unwrap());
            assert_ne!(a, gen_design(kind, 20, 4, 2, 10).unwrap());
        }
    }
}
