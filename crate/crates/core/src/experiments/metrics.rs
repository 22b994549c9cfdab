//! Replicate-averaged accuracy metrics.
//!
//! For estimates `B_1..B_B` with sample mean `SM`:
//!
//! ```text
//! SMRFV = mean |f(B_b) - f(B_ols)| / f(B_ols)
//! SMRE  = mean ||B_b - B_ols||^2 / ||B_ols||^2
//! SSB   = ||SM - B0||^2
//! SV    = mean ||B_b - SM||^2
//! SMSE  = mean ||B_b - B0||^2        (= SSB + SV)
//! ```
//!
//! In unconditional runs the OLS reference changes with every replicate's
//! response, so each outcome carries its own.

use std::sync::Arc;

use crate::error::{Result, TlsError};
use crate::solver::{objective, solve_ols, TlsProblem};
use crate::tensor::TubalTensor;

/// Exact least-squares fit of one replicate's response.
#[derive(Debug, Clone)]
pub struct OlsReference {
    pub coef: TubalTensor,
    pub objective: f64,
    pub response_norm_sq: f64,
}

impl OlsReference {
    pub fn solve(prob: &TlsProblem) -> Result<Self> {
        let ols = solve_ols(prob)?;
        Ok(Self {
            coef: ols.coef,
            objective: ols.objective,
            response_norm_sq: prob.y().fro_norm_sq(),
        })
    }

    /// `f(B_ols)` is zero up to rounding: the system is consistent.
    pub fn is_consistent(&self) -> bool {
        self.objective <= 1e-20 * self.response_norm_sq
    }
}

#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub coef: TubalTensor,
    pub objective: f64,
    pub ols: Arc<OlsReference>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub smrfv: f64,
    pub smre: f64,
    pub ssb: f64,
    pub sv: f64,
    pub smse: f64,
    /// Some replicate had `f(B_ols) = 0`; `smrfv` is NaN.
    pub smrfv_undefined: bool,
}

impl Metrics {
    pub const UNDEFINED: Metrics = Metrics {
        smrfv: f64::NAN,
        smre: f64::NAN,
        ssb: f64::NAN,
        sv: f64::NAN,
        smse: f64::NAN,
        smrfv_undefined: true,
    };
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Aggregates at least two replicate outcomes against the truth `b0`.
pub fn summarize(outcomes: &[ReplicateOutcome], b0: &TubalTensor) -> Result<Metrics> {
    if outcomes.len() < 2 {
        return Err(TlsError::Domain(format!(
            "metrics need at least 2 replicates, got {}",
            outcomes.len()
        )));
    }
    for o in outcomes {
        if o.coef.shape() != b0.shape() || o.ols.coef.shape() != b0.shape() {
            return Err(TlsError::DimensionMismatch {
                op: "summarize (estimate vs truth)",
                left: o.coef.shape(),
                right: b0.shape(),
            });
        }
    }
    let count = outcomes.len() as f64;
    let mut mean = vec![0.0; b0.data().len()];
    for o in outcomes {
        for (m, v) in mean.iter_mut().zip(o.coef.data()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let smrfv_undefined = outcomes.iter().any(|o| o.ols.is_consistent());
    let (mut rfv, mut re, mut sv, mut mse) = (0.0, 0.0, 0.0, 0.0);
    for o in outcomes {
        let b = o.coef.data();
        if !smrfv_undefined {
            rfv += (o.objective - o.ols.objective).abs() / o.ols.objective;
        }
        re += dist_sq(b, o.ols.coef.data()) / o.ols.coef.fro_norm_sq();
        sv += dist_sq(b, &mean);
        mse += dist_sq(b, b0.data());
    }
    Ok(Metrics {
        smrfv: if smrfv_undefined { f64::NAN } else { rfv / count },
        smre: re / count,
        ssb: dist_sq(&mean, b0.data()),
        sv: sv / count,
        smse: mse / count,
        smrfv_undefined,
    })
}

/// Metrics of `estimates` on a fixed problem with OLS fit `reference_ols`.
pub fn compute_metrics(
    estimates: &[TubalTensor],
    reference_ols: &TubalTensor,
    reference_truth: &TubalTensor,
    prob: &TlsProblem,
) -> Result<Metrics> {
    let ols = Arc::new(OlsReference {
        coef: reference_ols.clone(),
        objective: objective(prob, reference_ols)?,
        response_norm_sq: prob.y().fro_norm_sq(),
    });
    let outcomes = estimates
        .iter()
        .map(|b| {
            Ok(ReplicateOutcome {
                coef: b.clone(),
                objective: objective(prob, b)?,
                ols: Arc::clone(&ols),
                elapsed_ms: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(&outcomes, reference_truth)
}
