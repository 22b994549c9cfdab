//! Randomized row subsampling for tensor least squares under the t-product.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`], [`fourier`], [`product`], [`tsvd`], [`bcirc`], [`io`]:
//!   dense tubal-matrix algebra computed slice-wise in the Fourier domain,
//!   with a block-circulant brute-force oracle.
//! * [`sampling`]: uniform, leverage, shrinked-leverage and variance-optimal
//!   row distributions, and with-replacement sampling plans.
//! * [`solver`]: exact and subsampled tensor least squares.
//! * [`stats`]: first-order conditional and unconditional variance formulas.
//! * [`experiments`]: synthetic data, replicate harness, metrics and the
//!   subsampled matrix baseline.
//! * [`selfcheck`]: the oracle-equivalence suite used by `tlsq selfcheck`.

pub mod bcirc;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod io;
pub mod product;
pub mod sampling;
pub mod selfcheck;
mod slice;
pub mod solver;
pub mod stats;
pub mod tensor;
pub mod tsvd;

pub use error::{Result, Shape, TlsError};
pub use fourier::{from_fourier, to_fourier, FourierBlocks};
pub use product::t_product;
pub use sampling::{DistributionKind, SamplingDistribution, SamplingPlan};
pub use solver::{SolveMethod, TlsProblem, TlsSolution};
pub use tensor::TubalTensor;
pub use tsvd::{bcirc_extremal_sv, t_pinv, thin_t_svd, tubal_rank, ThinTSVD};
