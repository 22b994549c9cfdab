//! The t-product, computed slice-wise in the Fourier domain.

use crate::error::{Result, TlsError};
use crate::fourier::{from_fourier, half_len, to_fourier, CMat, FourierBlocks};
use crate::tensor::TubalTensor;

fn check_dims(x: &TubalTensor, y: &TubalTensor) -> Result<()> {
    if x.p() != y.n() || x.l() != y.l() {
        return Err(TlsError::DimensionMismatch {
            op: "t_product",
            left: x.shape(),
            right: y.shape(),
        });
    }
    Ok(())
}

/// Slice-wise product of two Fourier representations over the first
/// `ceil((l+1)/2)` slices, the remainder filled by conjugation.
pub fn fourier_product(x: &FourierBlocks, y: &FourierBlocks) -> FourierBlocks {
    let l = x.l();
    let half: Vec<CMat> = (0..half_len(l)).map(|k| x.block(k) * y.block(k)).collect();
    FourierBlocks::from_half(l, half)
}

/// `X * Y` for `X: n x p x l` and `Y: p x r x l`.
pub fn t_product(x: &TubalTensor, y: &TubalTensor) -> Result<TubalTensor> {
    check_dims(x, y)?;
    from_fourier(&fourier_product(&to_fourier(x), &to_fourier(y)))
}

/// Reference variant multiplying all `l` Fourier slices explicitly.
pub fn t_product_full(x: &TubalTensor, y: &TubalTensor) -> Result<TubalTensor> {
    check_dims(x, y)?;
    let (xf, yf) = (to_fourier(x), to_fourier(y));
    let blocks = (0..x.l()).map(|k| xf.block(k) * yf.block(k)).collect();
    from_fourier(&FourierBlocks::new(blocks)?)
}
