//! Block-circulant embedding of a tubal matrix, with `unfold`/`fold`.
//!
//! `bcirc(X)` is `nl x pl`; block `(a, b)` is frontal slice `(a - b) mod l`.
//! The dense matrix costs `O(n p l^2)` memory, so it is refused above
//! [`BCIRC_MAX_ENTRIES`]. It serves as the brute-force oracle for the
//! Fourier-domain kernels and as the design of the matrix baseline.

use nalgebra::DMatrix;

use crate::error::{Result, TlsError};
use crate::tensor::TubalTensor;

pub const BCIRC_MAX_ENTRIES: usize = 4_000_000;

pub fn bcirc_oracle(x: &TubalTensor) -> Result<DMatrix<f64>> {
    let (n, p, l) = (x.n(), x.p(), x.l());
    let (rows, cols) = (n * l, p * l);
    if rows.saturating_mul(cols) > BCIRC_MAX_ENTRIES {
        return Err(TlsError::OracleTooLarge { rows, cols });
    }
    let mut m = DMatrix::zeros(rows, cols);
    for a in 0..l {
        for b in 0..l {
            let k = (a + l - b) % l;
            for j in 0..p {
                for i in 0..n {
                    m[(a * n + i, b * p + j)] = x.get(i, j, k);
                }
            }
        }
    }
    Ok(m)
}

/// Stacks the frontal slices vertically into an `nl x p` matrix.
pub fn unfold(x: &TubalTensor) -> DMatrix<f64> {
    let (n, p, l) = (x.n(), x.p(), x.l());
    DMatrix::from_fn(n * l, p, |r, j| x.get(r % n, j, r / n))
}

/// Inverse of [`unfold`] for an `nl x p` matrix.
pub fn fold(m: &DMatrix<f64>, n: usize, l: usize) -> Result<TubalTensor> {
    if n == 0 || l == 0 || m.nrows() != n * l {
        return Err(TlsError::Domain(format!(
            "cannot fold a {}x{} matrix into {} rows and {} slices",
            m.nrows(),
            m.ncols(),
            n,
            l
        )));
    }
    let p = m.ncols();
    TubalTensor::new(n, p, l, (0..l).flat_map(|k| {
        (0..p).flat_map(move |j| (0..n).map(move |i| m[(k * n + i, j)]))
    }).collect())
}

/// `fold(bcirc(X) unfold(Y))`, the defining formula of the t-product.
pub fn bcirc_product(x: &TubalTensor, y: &TubalTensor) -> Result<TubalTensor> {
    if x.p() != y.n() || x.l() != y.l() {
        return Err(TlsError::DimensionMismatch {
            op: "bcirc_product",
            left: x.shape(),
            right: y.shape(),
        });
    }
    fold(&(bcirc_oracle(x)? * unfold(y)), x.n(), x.l())
}
