//! Dense real tubal matrices (order-3 tensors `n x p x l`).
//!
//! Storage is frontal-slice-major and column-major within a slice: entry
//! `(i, j, k)` lives at `k*n*p + j*n + i`. The `.tt` file format depends on
//! this layout, so it is part of the public contract.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, Shape, TlsError};

#[derive(Debug, Clone, PartialEq)]
pub struct TubalTensor {
    n: usize,
    p: usize,
    l: usize,
    data: Vec<f64>,
}

impl TubalTensor {
    /// Builds a tensor from raw data in the fixed layout. Rejects empty
    /// dimensions, a wrong data length and non-finite values.
    pub fn new(n: usize, p: usize, l: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 || l == 0 {
            return Err(TlsError::InvalidTensor(format!(
                "dimensions must be positive, got {}",
                Shape::new(n, p, l)
            )));
        }
        if data.len() != n * p * l {
            return Err(TlsError::InvalidTensor(format!(
                "{} needs {} values, got {}",
                Shape::new(n, p, l),
                n * p * l,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(TlsError::InvalidTensor(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(Self { n, p, l, data })
    }

    /// Unchecked constructor for values produced by our own kernels.
    pub(crate) fn from_raw(n: usize, p: usize, l: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * p * l);
        Self { n, p, l, data }
    }

    pub fn zeros(n: usize, p: usize, l: usize) -> Self {
        assert!(n > 0 && p > 0 && l > 0, "dimensions must be positive");
        Self::from_raw(n, p, l, vec![0.0; n * p * l])
    }

    pub fn from_fn(n: usize, p: usize, l: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n, p, l);
        for k in 0..l {
            for j in 0..p {
                for i in 0..n {
                    t.data[k * n * p + j * n + i] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Standard normal entries.
    pub fn random<R: Rng + ?Sized>(n: usize, p: usize, l: usize, rng: &mut R) -> Self {
        let data = (0..n * p * l).map(|_| rng.sample(StandardNormal)).collect();
        Self::from_raw(n, p, l, data)
    }

    /// The identity tubal matrix: first frontal slice `I_n`, other slices zero.
    pub fn identity(n: usize, l: usize) -> Self {
        let mut t = Self::zeros(n, n, l);
        for i in 0..n {
            t.set(i, i, 0, 1.0);
        }
        t
    }

    /// Places tube `i` of the tubal vector `v` (`n x 1 x l`) at diagonal
    /// position `(i, i, :)`.
    pub fn f_diag(v: &TubalTensor) -> Result<Self> {
        if v.p != 1 {
            return Err(TlsError::DimensionMismatch {
                op: "f_diag",
                left: v.shape(),
                right: Shape::new(v.n, 1, v.l),
            });
        }
        let mut t = Self::zeros(v.n, v.n, v.l);
        for k in 0..v.l {
            for i in 0..v.n {
                t.set(i, i, k, v.get(i, 0, k));
            }
        }
        Ok(t)
    }

    /// Builds a tensor from its frontal slices, all of equal shape.
    pub fn from_frontal_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| TlsError::InvalidTensor("no frontal slices".into()))?;
        let (n, p) = first.shape();
        let mut data = Vec::with_capacity(n * p * slices.len());
        for s in slices {
            if s.shape() != (n, p) {
                return Err(TlsError::DimensionMismatch {
                    op: "from_frontal_slices",
                    left: Shape::new(n, p, 1),
                    right: Shape::new(s.nrows(), s.ncols(), 1),
                });
            }
            data.extend_from_slice(s.as_slice());
        }
        Self::new(n, p, slices.len(), data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.n, self.p, self.l)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n && j < self.p && k < self.l);
        k * self.n * self.p + j * self.n + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    pub fn frontal_slice(&self, k: usize) -> DMatrix<f64> {
        let np = self.n * self.p;
        DMatrix::from_column_slice(self.n, self.p, &self.data[k * np..(k + 1) * np])
    }

    pub fn tube(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.l).map(|k| self.get(i, j, k)).collect()
    }

    /// Horizontal slices `rows[t]` stacked into a `len(rows) x p x l` tensor,
    /// each multiplied by `scale[t]` when given.
    pub fn gather_rows(&self, rows: &[usize], scale: Option<&[f64]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(TlsError::Domain("cannot gather zero rows".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n) {
            return Err(TlsError::Domain(format!(
                "row index {bad} out of range for {} rows",
                self.n
            )));
        }
        let m = rows.len();
        let mut out = Self::zeros(m, self.p, self.l);
        for k in 0..self.l {
            for j in 0..self.p {
                for (t, &r) in rows.iter().enumerate() {
                    let w = scale.map_or(1.0, |s| s[t]);
                    out.set(t, j, k, w * self.get(r, j, k));
                }
            }
        }
        Ok(out)
    }

    fn check_same(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(TlsError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self::from_raw(self.n, self.p, self.l, data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_raw(self.n, self.p, self.l, data))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|v| v * factor).collect();
        Self::from_raw(self.n, self.p, self.l, data)
    }

    /// Entrywise Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sq().sqrt()
    }

    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise absolute difference; `None` if shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .fold(0.0, |m, (a, b)| m.max((a - b).abs())),
        )
    }

    /// t-transpose: transpose every frontal slice, then reverse slices 2..l.
    pub fn t_transpose(&self) -> Self {
        let (n, p, l) = (self.n, self.p, self.l);
        let mut out = Self::zeros(p, n, l);
        for k in 0..l {
            let src = (l - k) % l;
            for j in 0..p {
                for i in 0..n {
                    out.set(j, i, k, self.get(i, j, src));
                }
            }
        }
        out
    }
}

/// Entrywise Frobenius norm of a tubal matrix.
pub fn fro_norm(x: &TubalTensor) -> f64 {
    x.fro_norm()
}
