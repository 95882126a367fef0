//! Scenario files, ε-sweeps, rate fits and reports.

pub mod checks;
pub mod config;
pub mod report;
pub mod sweep;

pub use config::SweepConfig;
pub use report::{emit_report, load_report, ReportPaths, SweepSummary};
pub use sweep::{beta_theory, fit_rate, run_case, run_sweep, CaseRecord, RateFit, RatePoint, SweepReport};
