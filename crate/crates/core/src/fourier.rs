//! Tube-wise DFT between a [`TubalTensor`] and its Fourier frontal slices.
//!
//! The forward transform is unnormalized and the inverse carries the `1/l`
//! factor, so `(1/l) * sum_k ||X_hat_k||_F^2 = ||X||_F^2`.

use std::cell::RefCell;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, Shape, TlsError};
use crate::tensor::TubalTensor;

pub type CMat = DMatrix<Complex64>;

/// Largest tolerated imaginary part after the inverse transform, relative to
/// `max(1, max |real part|)`.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Number of Fourier slices that must be computed explicitly; the rest are
/// conjugates (`ceil((l+1)/2)`).
#[inline]
pub fn half_len(l: usize) -> usize {
    l / 2 + 1
}

/// Slice `k` (0-based) equals its own conjugate partner: the DC slice and,
/// for even `l`, the Nyquist slice. These slices are real for real input.
#[inline]
pub fn is_self_conjugate(k: usize, l: usize) -> bool {
    k == 0 || 2 * k == l
}

/// The `l` complex frontal slices of a tensor after a DFT along every tube.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierBlocks {
    n: usize,
    p: usize,
    l: usize,
    blocks: Vec<CMat>,
}

impl FourierBlocks {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| TlsError::InvalidTensor("no Fourier blocks".into()))?;
        let (n, p) = first.shape();
        if n == 0 || p == 0 {
            return Err(TlsError::InvalidTensor("empty Fourier block".into()));
        }
        for b in &blocks {
            if b.shape() != (n, p) {
                return Err(TlsError::DimensionMismatch {
                    op: "FourierBlocks::new",
                    left: Shape::new(n, p, 1),
                    right: Shape::new(b.nrows(), b.ncols(), 1),
                });
            }
        }
        let l = blocks.len();
        Ok(Self { n, p, l, blocks })
    }

    /// Completes the first `half_len(l)` slices by conjugate symmetry.
    pub fn from_half(l: usize, mut half: Vec<CMat>) -> Self {
        assert_eq!(half.len(), half_len(l), "expected ceil((l+1)/2) slices");
        let (n, p) = half[0].shape();
        for k in half_len(l)..l {
            let partner = half[l - k].map(|z| z.conj());
            half.push(partner);
        }
        Self {
            n,
            p,
            l,
            blocks: half,
        }
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.n, self.p, self.l)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    /// `(1/l) * sum_k ||X_hat_k||_F^2`, equal to the spatial `||X||_F^2`.
    pub fn parseval_norm_sq(&self) -> f64 {
        let s: f64 = self.blocks.iter().map(|b| b.norm_squared()).sum();
        s / self.l as f64
    }

    /// Largest deviation from conjugate symmetry, for diagnostics.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..self.l {
            let a = &self.blocks[k];
            let b = &self.blocks[self.l - k];
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((x - y.conj()).norm());
            }
        }
        worst
    }
}

fn tube_major(n: usize, p: usize, l: usize, mut value: impl FnMut(usize, usize, usize) -> Complex64) -> Vec<Complex64> {
    let mut buf = Vec::with_capacity(n * p * l);
    for j in 0..p {
        for i in 0..n {
            for k in 0..l {
                buf.push(value(i, j, k));
            }
        }
    }
    buf
}

fn run_fft(buf: &mut [Complex64], l: usize, inverse: bool) {
    if l == 1 {
        return;
    }
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let fft = if inverse {
            planner.plan_fft_inverse(l)
        } else {
            planner.plan_fft_forward(l)
        };
        fft.process(buf);
    });
}

/// Forward DFT along every tube.
pub fn to_fourier(x: &TubalTensor) -> FourierBlocks {
    let (n, p, l) = (x.n(), x.p(), x.l());
    let mut buf = tube_major(n, p, l, |i, j, k| Complex64::new(x.get(i, j, k), 0.0));
    run_fft(&mut buf, l, false);
    let mut blocks = vec![CMat::zeros(n, p); l];
    for j in 0..p {
        for i in 0..n {
            let base = (j * n + i) * l;
            for (k, b) in blocks.iter_mut().enumerate() {
                b[(i, j)] = buf[base + k];
            }
        }
    }
    FourierBlocks { n, p, l, blocks }
}

/// Inverse DFT along every tube. Fails with `ImaginaryResidue` when the
/// blocks are not conjugate-symmetric (the result would not be real).
pub fn from_fourier(f: &FourierBlocks) -> Result<TubalTensor> {
    let (n, p, l) = (f.n, f.p, f.l);
    let mut buf = tube_major(n, p, l, |i, j, k| f.blocks[k][(i, j)]);
    run_fft(&mut buf, l, true);
    let scale = 1.0 / l as f64;
    let mut data = vec![0.0; n * p * l];
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for j in 0..p {
        for i in 0..n {
            let base = (j * n + i) * l;
            for k in 0..l {
                let z = buf[base + k] * scale;
                max_re = max_re.max(z.re.abs());
                max_im = max_im.max(z.im.abs());
                data[k * n * p + j * n + i] = z.re;
            }
        }
    }
    let limit = IMAG_RESIDUE_LIMIT * max_re.max(1.0);
    if max_im > limit || !max_im.is_finite() {
        return Err(TlsError::ImaginaryResidue {
            max_imag: max_im,
            limit,
        });
    }
    TubalTensor::new(n, p, l, data)
}
