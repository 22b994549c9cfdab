//! CSV metrics reports.

use std::fmt::Write as _;
use std::path::Path;

use super::metrics::Metrics;
use crate::error::{Result, TlsError};

pub const HEADER: &str = "method,tau,smrfv,smre,ssb,sv,smse,mean_ms,replicates,failures";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub tau: usize,
    pub smrfv: f64,
    pub smre: f64,
    pub ssb: f64,
    pub sv: f64,
    pub smse: f64,
    /// NaN unless timing was requested.
    pub mean_ms: f64,
    /// Successful replicates the metrics average over.
    pub replicates: usize,
    pub failures: usize,
}

impl MetricsRow {
    pub fn new(method: impl Into<String>, tau: usize, m: Metrics, mean_ms: f64, replicates: usize, failures: usize) -> Self {
        Self {
            method: method.into(),
            tau,
            smrfv: m.smrfv,
            smre: m.smre,
            ssb: m.ssb,
            sv: m.sv,
            smse: m.smse,
            mean_ms,
            replicates,
            failures,
        }
    }

    /// Bitwise equality, with NaN equal to NaN.
    pub fn same_bits(&self, other: &Self) -> bool {
        let a = [self.smrfv, self.smre, self.ssb, self.sv, self.smse, self.mean_ms];
        let b = [other.smrfv, other.smre, other.ssb, other.sv, other.smse, other.mean_ms];
        self.method == other.method
            && self.tau == other.tau
            && self.replicates == other.replicates
            && self.failures == other.failures
            && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    /// Sorts by method name, then `tau`.
    pub fn new(mut rows: Vec<MetricsRow>) -> Self {
        rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.tau.cmp(&b.tau)));
        Self { rows }
    }

    pub fn get(&self, method: &str, tau: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.method == method && r.tau == tau)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                r.method, r.tau, r.smrfv, r.smre, r.ssb, r.sv, r.smse, r.mean_ms, r.replicates, r.failures
            );
        }
        out
    }

    pub fn parse_csv(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == HEADER => {}
            Some(h) => return Err(format!("unexpected header '{h}'")),
            None => return Err("empty report".into()),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(format!("line {}: expected 10 fields, got {}", i + 2, f.len()));
            }
            let real = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2));
            let int = |s: &str| s.parse::<usize>().map_err(|e| format!("line {}: {e}", i + 2));
            rows.push(MetricsRow {
                method: f[0].to_string(),
                tau: int(f[1])?,
                smrfv: real(f[2])?,
                smre: real(f[3])?,
                ssb: real(f[4])?,
                sv: real(f[5])?,
                smse: real(f[6])?,
                mean_ms: real(f[7])?,
                replicates: int(f[8])?,
                failures: int(f[9])?,
            });
        }
        Ok(Self { rows })
    }
}

pub fn write_report(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_csv()).map_err(|e| TlsError::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<MetricsReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| TlsError::io(path, e))?;
    MetricsReport::parse_csv(&text).map_err(|reason| TlsError::Format {
        path: path.to_path_buf(),
        reason,
    })
}
