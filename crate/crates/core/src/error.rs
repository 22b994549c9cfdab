use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Dimensions of a tubal matrix, printed as `n x p x l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub n: usize,
    pub p: usize,
    pub l: usize,
}

impl Shape {
    pub fn new(n: usize, p: usize, l: usize) -> Self {
        Self { n, p, l }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.n, self.p, self.l)
    }
}

#[derive(Debug, Error)]
pub enum TlsError {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("inverse transform left an imaginary residue of {max_imag:e} (limit {limit:e})")]
    ImaginaryResidue { max_imag: f64, limit: f64 },

    #[error("SVD of Fourier slice {slice} did not converge")]
    ConvergenceFailure { slice: usize },

    #[error("Fourier slice {slice} has rank {rank}, need {required}")]
    RankDeficient {
        slice: usize,
        rank: usize,
        required: usize,
    },

    #[error("sketched Fourier slice {slice} has rank {rank}, need {required}")]
    SketchRankDeficient {
        slice: usize,
        rank: usize,
        required: usize,
    },

    #[error("optimal distribution is degenerate: every row is fit exactly")]
    DegenerateDistribution,

    #[error("row {row} has zero sampling probability but a nonzero contribution")]
    ZeroProbabilityRow { row: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("block-circulant oracle would have {rows}x{cols} entries, above the 4e6 guard")]
    OracleTooLarge { rows: usize, cols: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TlsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TlsError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the filesystem or by unreadable files.
    pub fn is_io(&self) -> bool {
        matches!(self, TlsError::Io { .. } | TlsError::Format { .. })
    }
}

pub type Result<T> = std::result::Result<T, TlsError>;
