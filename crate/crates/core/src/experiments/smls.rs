//! Subsampled matrix least squares on the block-circulant system
//! `bcirc(X) unfold(B) = unfold(Y)`, the baseline that ignores tube structure.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::bcirc::{bcirc_oracle, fold, unfold};
use crate::error::{Result, TlsError};
use crate::sampling::{draw_plan, neumaier_sum, DistributionKind, SamplingDistribution, SamplingPlan};
use crate::slice::{default_tol, real_svd};
use crate::solver::TlsProblem;
use crate::tensor::TubalTensor;

/// `bcirc(X)` with its uniform and leverage row distributions over `nl` rows.
#[derive(Debug, Clone)]
pub struct SmlsDesign {
    n: usize,
    p: usize,
    l: usize,
    matrix: DMatrix<f64>,
    unif: SamplingDistribution,
    lev: SamplingDistribution,
}

impl SmlsDesign {
    pub fn new(x: &TubalTensor) -> Result<Self> {
        let matrix = bcirc_oracle(x)?;
        let rows = matrix.nrows();
        let (u, _, _) = real_svd(&matrix, 0)?;
        let h: Vec<f64> = (0..rows).map(|r| u.row(r).norm_squared()).collect();
        let total = neumaier_sum(&h);
        let lev = SamplingDistribution {
            kind: DistributionKind::Lev,
            probs: h.iter().map(|v| v / total).collect(),
            leverage: Some(h),
        };
        let unif = SamplingDistribution {
            kind: DistributionKind::Unif,
            probs: vec![1.0 / rows as f64; rows],
            leverage: None,
        };
        Ok(Self {
            n: x.n(),
            p: x.p(),
            l: x.l(),
            matrix,
            unif,
            lev,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn distribution(&self, kind: DistributionKind) -> Result<&SamplingDistribution> {
        match kind {
            DistributionKind::Unif => Ok(&self.unif),
            DistributionKind::Lev => Ok(&self.lev),
            other => Err(TlsError::Domain(format!(
                "matrix baseline supports unif and lev sampling, not {other}"
            ))),
        }
    }

    /// Weighted least squares on the rows of `plan`.
    pub fn solve_plan(&self, y: &TubalTensor, plan: &SamplingPlan) -> Result<SmlsSolution> {
        if y.n() != self.n || y.p() != 1 || y.l() != self.l {
            return Err(TlsError::DimensionMismatch {
                op: "matrix baseline (design vs response)",
                left: crate::Shape::new(self.n, self.p, self.l),
                right: y.shape(),
            });
        }
        let start = Instant::now();
        let rhs = unfold(y);
        let cols = self.p * self.l;
        let a = DMatrix::from_fn(plan.tau, cols, |t, j| plan.weights[t] * self.matrix[(plan.indices[t], j)]);
        let b = DMatrix::from_fn(plan.tau, 1, |t, _| plan.weights[t] * rhs[(plan.indices[t], 0)]);
        let (u, s, v) = real_svd(&a, 0)?;
        let tol = default_tol(plan.tau, cols, s.first().copied().unwrap_or(0.0));
        let rank = s.iter().filter(|&&sv| sv > tol).count();
        if rank < cols {
            return Err(TlsError::SketchRankDeficient {
                slice: 0,
                rank,
                required: cols,
            });
        }
        let mut coeffs = u.transpose() * &b;
        for (row, &sv) in s.iter().enumerate() {
            coeffs.row_mut(row).scale_mut(1.0 / sv);
        }
        let sol = v * coeffs;
        let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        let objective = (&rhs - &self.matrix * &sol).norm_squared();
        Ok(SmlsSolution {
            coef: fold(&sol, self.p, self.l)?,
            objective,
            elapsed_ms,
        })
    }

    /// Draws `tau` of the `nl` matrix rows and solves.
    pub fn solve(&self, y: &TubalTensor, kind: DistributionKind, tau: usize, seed: u64) -> Result<SmlsSolution> {
        let start = Instant::now();
        let plan = draw_plan(self.distribution(kind)?, tau, seed)?;
        let draw_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut sol = self.solve_plan(y, &plan)?;
        sol.elapsed_ms += draw_ms;
        Ok(sol)
    }
}

#[derive(Debug, Clone)]
pub struct SmlsSolution {
    /// Folded back to `p x 1 x l`.
    pub coef: TubalTensor,
    pub objective: f64,
    /// Sampling plus solve, excluding the one-off design preprocessing.
    pub elapsed_ms: f64,
}

pub fn smls_baseline(prob: &TlsProblem, kind: DistributionKind, tau: usize, seed: u64) -> Result<SmlsSolution> {
    SmlsDesign::new(prob.x())?.solve(prob.y(), kind, tau, seed)
}
