//! Sweep output: CSV records, a JSON summary and log-log plot data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::VariantName;
use super::sweep::{evaluate_flags, CaseRecord, RateFit, RateWindow, SweepFlags, SweepReport};

pub const CSV_HEADER: &str = "epsilon,sup_error,yr_wiener,bound_ratio,l2_drift,runtime_s";

/// Shortest decimal form that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn records_to_csv(records: &[CaseRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let fields = [r.epsilon, r.sup_error, r.yr_wiener, r.bound_ratio, r.l2_drift, r.runtime_s];
        let line: Vec<String> = fields.iter().map(|&v| num(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<CaseRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Config("CSV header does not match".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let v = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Config(format!("CSV row {}: {e}", i + 1)))?;
            if v.len() != 6 {
                return Err(Error::Config(format!("CSV row {} has {} fields", i + 1, v.len())));
            }
            Ok(CaseRecord {
                epsilon: v[0],
                sup_error: v[1],
                yr_wiener: v[2],
                bound_ratio: v[3],
                l2_drift: v[4],
                runtime_s: v[5],
            })
        })
        .collect()
}

/// Structured summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub name: String,
    pub alpha: f64,
    pub variant: VariantName,
    pub beta_theory: f64,
    pub fit: Option<RateFit>,
    pub fit_note: Option<String>,
    pub window: RateWindow,
    pub drift_limit: f64,
    pub flags: SweepFlags,
    /// Set when `β̂` exceeds the theory exponent by more than two standard errors.
    pub note: Option<String>,
    pub csv: String,
}

impl SweepSummary {
    pub fn of(report: &SweepReport, csv: &str) -> Self {
        let note = report.fit.and_then(|f| {
            (f.beta > report.beta_theory + 2.0 * f.stderr).then(|| {
                format!(
                    "observed rate {:.3} exceeds the theoretical {:.3}; the law is an upper bound",
                    f.beta, report.beta_theory
                )
            })
        });
        Self {
            name: report.name.clone(),
            alpha: report.alpha,
            variant: report.variant,
            beta_theory: report.beta_theory,
            fit: report.fit,
            fit_note: report.fit_note.clone(),
            window: report.window,
            drift_limit: report.drift_limit,
            flags: report.flags,
            note,
            csv: csv.to_string(),
        }
    }

    /// Flags recomputed from reloaded records and the stored thresholds.
    pub fn recheck(&self, records: &[CaseRecord]) -> SweepFlags {
        evaluate_flags(records, self.fit.as_ref(), self.window, self.drift_limit)
    }
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub error_plot: PathBuf,
    pub yr_plot: PathBuf,
}

impl ReportPaths {
    pub fn in_dir(dir: &Path, name: &str) -> Self {
        Self {
            csv: dir.join(format!("{name}.csv")),
            summary: dir.join(format!("{name}_summary.json")),
            error_plot: dir.join(format!("{name}_error.dat")),
            yr_plot: dir.join(format!("{name}_yr.dat")),
        }
    }
}

/// Two-column `log10 ε, log10 value` pairs; non-positive values are skipped.
pub fn plot_data(records: &[CaseRecord], value: impl Fn(&CaseRecord) -> f64, label: &str) -> String {
    let mut out = format!("# log10(epsilon) log10({label})\n");
    for r in records {
        let v = value(r);
        if v > 0.0 && v.is_finite() {
            let _ = writeln!(out, "{} {}", num(r.epsilon.log10()), num(v.log10()));
        }
    }
    out
}

pub fn emit_report(report: &SweepReport, paths: &ReportPaths) -> Result<()> {
    for p in [&paths.csv, &paths.summary, &paths.error_plot, &paths.yr_plot] {
        if let Some(dir) = p.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
    }
    std::fs::write(&paths.csv, records_to_csv(&report.records))?;
    let csv_name = paths.csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let summary = SweepSummary::of(report, &csv_name);
    std::fs::write(&paths.summary, serde_json::to_string_pretty(&summary)?)?;
    std::fs::write(&paths.error_plot, plot_data(&report.records, |r| r.sup_error, "sup_error"))?;
    std::fs::write(&paths.yr_plot, plot_data(&report.records, |r| r.yr_wiener, "yr_wiener"))?;
    Ok(())
}

/// Reads a summary and its CSV back from disk.
pub fn load_report(summary_path: &Path) -> Result<(SweepSummary, Vec<CaseRecord>)> {
    let summary: SweepSummary = serde_json::from_str(&std::fs::read_to_string(summary_path)?)?;
    let dir = summary_path.parent().unwrap_or(Path::new("."));
    let records = records_from_csv(&std::fs::read_to_string(dir.join(&summary.csv))?)?;
    Ok((summary, records))
}
