//! Dense kernels applied to a single Fourier slice.

use faer::{c64, Mat};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, TlsError};
use crate::fourier::CMat;

/// Thin SVD `A = U diag(s) V^H` with `s` sorted nonincreasing.
#[derive(Debug, Clone)]
pub(crate) struct SliceSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

/// Rank tolerance `eps * max(rows, cols) * sigma_max`.
pub(crate) fn default_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    f64::EPSILON * rows.max(cols) as f64 * sigma_max
}

/// Thin real SVD `(U, s, V)`, `s` nonincreasing.
pub(crate) fn real_svd(a: &DMatrix<f64>, slice: usize) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let m = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let f = m.thin_svd().map_err(|_| TlsError::ConvergenceFailure { slice })?;
    let (u, v) = (f.U(), f.V());
    let s = f.S().column_vector();
    Ok((
        DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        (0..s.nrows()).map(|i| s[i]).collect(),
        DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    ))
}

fn complex_svd(a: &CMat, slice: usize) -> Result<(CMat, Vec<f64>, CMat)> {
    let m = Mat::<c64>::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[(i, j)];
        c64::new(z.re, z.im)
    });
    let f = m.thin_svd().map_err(|_| TlsError::ConvergenceFailure { slice })?;
    let (u, v) = (f.U(), f.V());
    let s = f.S().column_vector();
    let back = |z: c64| Complex64::new(z.re, z.im);
    Ok((
        CMat::from_fn(u.nrows(), u.ncols(), |i, j| back(u[(i, j)])),
        (0..s.nrows()).map(|i| s[i].re).collect(),
        CMat::from_fn(v.nrows(), v.ncols(), |i, j| back(v[(i, j)])),
    ))
}

fn sorted_order(s: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    order
}

/// SVD of slice `slice`. Self-conjugate slices are real-valued and are
/// factored in real arithmetic so that their factors stay exactly real.
pub(crate) fn svd(a: &CMat, real: bool, slice: usize) -> Result<SliceSvd> {
    let (u, s, v) = if real {
        let (u, s, v) = real_svd(&a.map(|z| z.re), slice)?;
        (u.map(|x| Complex64::new(x, 0.0)), s, v.map(|x| Complex64::new(x, 0.0)))
    } else {
        complex_svd(a, slice)?
    };
    let order = sorted_order(&s);
    let u = CMat::from_columns(&order.iter().map(|&c| u.column(c)).collect::<Vec<_>>());
    let v = CMat::from_columns(&order.iter().map(|&c| v.column(c)).collect::<Vec<_>>());
    let s = order.iter().map(|&c| s[c]).collect();
    Ok(SliceSvd { u, s, v })
}

impl SliceSvd {
    pub fn sigma_max(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.s.iter().filter(|&&v| v > tol).count()
    }

    /// Moore-Penrose inverse keeping singular values above `tol`.
    pub fn pinv(&self, tol: f64) -> CMat {
        let r = self.rank(tol);
        let (m, p) = (self.u.nrows(), self.v.nrows());
        if r == 0 {
            return CMat::zeros(p, m);
        }
        let mut vs = self.v.columns(0, r).into_owned();
        for (c, &sv) in self.s.iter().take(r).enumerate() {
            vs.column_mut(c).scale_mut(1.0 / sv);
        }
        vs * self.u.columns(0, r).adjoint()
    }

    /// Least-squares solution `V diag(1/s) U^H b` over the numerically
    /// nonzero singular values.
    pub fn solve(&self, b: &CMat, tol: f64) -> CMat {
        let r = self.rank(tol);
        let ur = self.u.columns(0, r);
        let mut coeffs = ur.adjoint() * b;
        for (row, &sv) in self.s.iter().take(r).enumerate() {
            coeffs.row_mut(row).scale_mut(1.0 / sv);
        }
        self.v.columns(0, r) * coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_c(m: usize, n: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(m, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn recompose(f: &SliceSvd) -> CMat {
        let mut us = f.u.clone();
        for (c, &sv) in f.s.iter().enumerate() {
            us.column_mut(c).scale_mut(sv);
        }
        us * f.v.adjoint()
    }

    #[test]
    fn rank_deficient_wide_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (m, n) in [(4, 7), (7, 4), (2, 5)] {
            let col = DMatrix::from_fn(m, 1, |_, _| rng.random::<f64>() - 0.5);
            let row = DMatrix::from_fn(1, n, |_, _| rng.random::<f64>() - 0.5);
            let a = (col * row).map(|x| Complex64::new(x, 0.0));
            for real in [true, false] {
                let f = svd(&a, real, 0).unwrap();
                let rank1 = f.u.column(0) * f.v.column(0).adjoint() * Complex64::new(f.s[0], 0.0);
                assert!((rank1 - &a).norm() < 1e-12 * a.norm(), "{m}x{n} real={real}");
            }
        }
    }

    #[test]
    fn rank_deficient_complex_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let (m, n) = (rng.random_range(1..9), rng.random_range(1..9));
            let r = rng.random_range(1..=m.min(n));
            let a = random_c(m, r, &mut rng) * random_c(r, n, &mut rng);
            let f = svd(&a, false, 0).unwrap();
            assert!((recompose(&f) - &a).norm() < 1e-12 * a.norm(), "{m}x{n} rank {r}");
        }
    }

    #[test]
    fn svd_reconstructs_and_sorts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (m, n) in [(5, 3), (3, 5), (4, 4)] {
            let a = random_c(m, n, &mut rng);
            let f = svd(&a, false, 0).unwrap();
            assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
            assert!((recompose(&f) - &a).norm() < 1e-12);
        }
    }

    #[test]
    fn pinv_solves_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_c(6, 3, &mut rng);
        let b = random_c(6, 1, &mut rng);
        let f = svd(&a, false, 0).unwrap();
        let tol = default_tol(6, 3, f.sigma_max());
        let x = f.solve(&b, tol);
        // normal equations A^H (b - A x) = 0
        let r = a.adjoint() * (&b - &a * &x);
        assert!(r.norm() < 1e-12);
        assert!((f.pinv(tol) * &b - x).norm() < 1e-12);
    }
}
