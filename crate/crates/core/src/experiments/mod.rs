//! The simulation protocol: synthetic data, replicate harness, metrics,
//! the matrix baseline and CSV reports.

pub mod config;
pub mod data;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod smls;

pub use config::{ExperimentConfig, Mode, PlanMode, SmlsMode};
pub use data::{gen_design, gen_noise, gen_response, true_coef, DesignKind};
pub use metrics::{compute_metrics, summarize, Metrics, OlsReference, ReplicateOutcome};
pub use report::{read_report, write_report, MetricsReport, MetricsRow};
pub use runner::{compare_mls, run_experiment, split_seed};
pub use smls::{smls_baseline, SmlsDesign, SmlsSolution};
