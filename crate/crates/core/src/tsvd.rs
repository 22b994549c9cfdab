//! Thin t-SVD, tubal rank, t-pseudoinverse and extremal singular values,
//! all computed from per-slice SVDs in the Fourier domain.

use num_complex::Complex64;

use crate::error::{Result, TlsError};
use crate::fourier::{from_fourier, half_len, is_self_conjugate, to_fourier, CMat, FourierBlocks};
use crate::slice::{self, default_tol, SliceSvd};
use crate::tensor::TubalTensor;

/// `X = U * S * V^T` with `U: n x r x l`, `S: r x r x l` f-diagonal and
/// `V: p x r x l`, where `r` is the tubal rank.
#[derive(Debug, Clone)]
pub struct ThinTSVD {
    pub u: TubalTensor,
    pub s: TubalTensor,
    pub v: TubalTensor,
    pub rank: usize,
}

/// SVDs of the explicitly computed Fourier slices `0..ceil((l+1)/2)`.
pub(crate) fn half_svds(f: &FourierBlocks) -> Result<Vec<SliceSvd>> {
    let l = f.l();
    (0..half_len(l))
        .map(|k| slice::svd(f.block(k), is_self_conjugate(k, l), k))
        .collect()
}

fn global_sigma_max(svds: &[SliceSvd]) -> f64 {
    svds.iter().map(SliceSvd::sigma_max).fold(0.0, f64::max)
}

/// Default tubal-rank tolerance: `eps * max(n, p) * sigma_max`, with
/// `sigma_max` taken over all Fourier slices.
pub fn default_rank_tol(x: &TubalTensor) -> Result<f64> {
    let svds = half_svds(&to_fourier(x))?;
    Ok(default_tol(x.n(), x.p(), global_sigma_max(&svds)))
}

fn rank_from_svds(svds: &[SliceSvd], tol: f64) -> usize {
    let m = svds.first().map_or(0, |s| s.s.len());
    (0..m)
        .filter(|&i| svds.iter().map(|s| s.s[i]).fold(0.0, f64::max) > tol)
        .count()
}

/// Number of singular tubes whose largest Fourier component exceeds `tol`
/// (default tolerance when `None`).
pub fn tubal_rank(x: &TubalTensor, tol: Option<f64>) -> Result<usize> {
    let svds = half_svds(&to_fourier(x))?;
    let tol = tol.unwrap_or_else(|| default_tol(x.n(), x.p(), global_sigma_max(&svds)));
    Ok(rank_from_svds(&svds, tol))
}

pub fn thin_t_svd(x: &TubalTensor) -> Result<ThinTSVD> {
    let l = x.l();
    let svds = half_svds(&to_fourier(x))?;
    let tol = default_tol(x.n(), x.p(), global_sigma_max(&svds));
    let r = rank_from_svds(&svds, tol);
    if r == 0 {
        return Err(TlsError::Domain("thin t-SVD of a tubal-rank-0 tensor".into()));
    }
    let mut us = Vec::with_capacity(svds.len());
    let mut ss = Vec::with_capacity(svds.len());
    let mut vs = Vec::with_capacity(svds.len());
    for f in &svds {
        us.push(f.u.columns(0, r).into_owned());
        vs.push(f.v.columns(0, r).into_owned());
        ss.push(CMat::from_fn(r, r, |a, b| {
            if a == b {
                Complex64::new(f.s[a], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }));
    }
    Ok(ThinTSVD {
        u: from_fourier(&FourierBlocks::from_half(l, us))?,
        s: from_fourier(&FourierBlocks::from_half(l, ss))?,
        v: from_fourier(&FourierBlocks::from_half(l, vs))?,
        rank: r,
    })
}

/// Moore-Penrose inverse, slice-wise in the Fourier domain, truncated at
/// the default tolerance with `sigma_max` over all slices.
pub fn t_pinv(x: &TubalTensor) -> Result<TubalTensor> {
    let l = x.l();
    let svds = half_svds(&to_fourier(x))?;
    let tol = default_tol(x.n(), x.p(), global_sigma_max(&svds));
    let half = svds.iter().map(|s| s.pinv(tol)).collect();
    from_fourier(&FourierBlocks::from_half(l, half))
}

/// Extremal singular values of `bcirc(X)`, i.e. over all Fourier slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalSv {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `sigma_max / sigma_min`; infinite when `sigma_min == 0`.
    pub condition: f64,
}

pub fn bcirc_extremal_sv(x: &TubalTensor) -> Result<ExtremalSv> {
    let svds = half_svds(&to_fourier(x))?;
    let all = svds.iter().flat_map(|s| s.s.iter().copied());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in all {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let condition = if lo == 0.0 { f64::INFINITY } else { hi / lo };
    Ok(ExtremalSv {
        sigma_min: lo,
        sigma_max: hi,
        condition,
    })
}

/// All singular values of every Fourier slice (conjugate slices included),
/// sorted nonincreasing: the singular-value multiset of `bcirc(X)`.
pub fn fourier_singular_values(x: &TubalTensor) -> Result<Vec<f64>> {
    let l = x.l();
    let svds = half_svds(&to_fourier(x))?;
    let mut out = Vec::new();
    for k in 0..l {
        let src = if k < half_len(l) { k } else { l - k };
        out.extend_from_slice(&svds[src].s);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Per-slice rank check used by the solver: every Fourier slice must have
/// rank `p` under the tensor's default tolerance.
pub(crate) fn check_full_column_rank(svds: &[SliceSvd], rows: usize, cols: usize) -> std::result::Result<(), (usize, usize)> {
    let tol = default_tol(rows, cols, global_sigma_max(svds));
    for (k, s) in svds.iter().enumerate() {
        let r = s.rank(tol);
        if r < cols {
            return Err((k, r));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::t_product;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_svd() {
        let i = TubalTensor::identity(3, 4);
        let f = thin_t_svd(&i).unwrap();
        assert_eq!(f.rank, 3);
        let recon = t_product(&t_product(&f.u, &f.s).unwrap(), &f.v.t_transpose()).unwrap();
        assert!(recon.max_abs_diff(&i).unwrap() < 1e-12);
        assert!(f.s.max_abs_diff(&i).unwrap() < 1e-12);
        assert_eq!(tubal_rank(&i, None).unwrap(), 3);
        let e = bcirc_extremal_sv(&i).unwrap();
        assert!((e.sigma_min - 1.0).abs() < 1e-14 && (e.sigma_max - 1.0).abs() < 1e-14);
        assert!((e.condition - 1.0).abs() < 1e-14);
        assert!(t_pinv(&i).unwrap().max_abs_diff(&i).unwrap() < 1e-14);
    }

    #[test]
    fn zero_has_rank_zero() {
        let z = TubalTensor::zeros(3, 2, 3);
        assert_eq!(tubal_rank(&z, None).unwrap(), 0);
        assert!(thin_t_svd(&z).is_err());
        assert!(bcirc_extremal_sv(&z).unwrap().condition.is_infinite());
    }

    #[test]
    fn l1_is_matrix_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let x = TubalTensor::random(5, 3, 1, &mut rng);
        let f = thin_t_svd(&x).unwrap();
        let m = nalgebra::SVD::new(x.frontal_slice(0), false, false);
        let mut expect: Vec<f64> = m.singular_values.iter().copied().collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (i, e) in expect.iter().enumerate() {
            assert!((f.s.get(i, i, 0) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = TubalTensor::random(5, 1, 4, &mut rng);
        let b = TubalTensor::random(1, 3, 4, &mut rng);
        let x = t_product(&a, &b).unwrap();
        assert_eq!(tubal_rank(&x, None).unwrap(), 1);
        let f = thin_t_svd(&x).unwrap();
        assert_eq!(f.u.shape().p, 1);
    }

    #[test]
    fn singular_values_sorted_per_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = TubalTensor::random(6, 3, 5, &mut rng);
        let f = thin_t_svd(&x).unwrap();
        let sf = to_fourier(&f.s);
        for k in 0..5 {
            let b = sf.block(k);
            for i in 0..3 {
                assert!(b[(i, i)].re >= -1e-12);
                assert!(b[(i, i)].im.abs() < 1e-10);
                if i + 1 < 3 {
                    assert!(b[(i, i)].re + 1e-12 >= b[(i + 1, i + 1)].re);
                }
            }
        }
    }
}
