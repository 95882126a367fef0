//! Single cases, ε-sweeps and the rate fit.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{residual_terms, sup_error, yr_bound_check, BoundCheck};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::solver::{propagate, RefinementInfo, SolverConfig};
use crate::spectral::{Grid, GridSpec};
use crate::wkb::{assemble_u_app, build_amplitudes, build_initial_data, is_critical};

use super::config::SweepConfig;

/// Convergence exponent of the error law: `1` for `α = 1` or `α ≥ 2`,
/// `α − 1` in between.
pub fn beta_theory(alpha: f64) -> f64 {
    if is_critical(alpha) || alpha >= 2.0 {
        1.0
    } else {
        alpha - 1.0
    }
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub epsilon: f64,
    /// Max over snapshots of `‖u − u_app‖_{L∞}`.
    pub sup_error: f64,
    /// Max over snapshots of `‖Y_R‖_W`.
    pub yr_wiener: f64,
    /// Max over snapshots of the cross-mode bound ratio; NaN for one mode.
    pub bound_ratio: f64,
    pub l2_drift: f64,
    pub runtime_s: f64,
}

impl CaseRecord {
    /// Field-wise equality treating NaN as equal to NaN.
    pub fn same_as(&self, other: &Self) -> bool {
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        eq(self.epsilon, other.epsilon)
            && eq(self.sup_error, other.sup_error)
            && eq(self.yr_wiener, other.yr_wiener)
            && eq(self.bound_ratio, other.bound_ratio)
            && eq(self.l2_drift, other.l2_drift)
            && eq(self.runtime_s, other.runtime_s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotDiagnostics {
    pub time: f64,
    pub sup_error: f64,
    pub yr_wiener: f64,
    pub bound: Option<BoundCheck>,
    /// Max over modes of `|‖A_j(t)‖_{L²} − ‖a_j‖_{L²}|`.
    pub mode_mass_drift: f64,
}

/// Everything a case measures beyond its CSV line.
#[derive(Debug, Clone, Serialize)]
pub struct CaseDiagnostics {
    pub epsilon: f64,
    pub points: usize,
    pub refinement: RefinementInfo,
    pub snapshots: Vec<SnapshotDiagnostics>,
}

impl CaseDiagnostics {
    pub fn mode_mass_drift(&self) -> f64 {
        self.snapshots.iter().map(|s| s.mode_mass_drift).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub record: CaseRecord,
    pub diagnostics: CaseDiagnostics,
}

/// Grid chosen by the resolution rule for `ε`.
pub fn case_grid(cfg: &SweepConfig, epsilon: f64) -> Result<Grid> {
    let modes = cfg.mode_spec();
    let points = cfg.grid.policy().points_for(&modes, epsilon, cfg.length())?;
    Grid::new(GridSpec::new(cfg.dimension, points, cfg.length()))
}

/// Solver settings of one case on its grid.
pub fn case_solver(cfg: &SweepConfig, epsilon: f64, grid: &Grid) -> Result<SolverConfig> {
    let kernel = Kernel::new(cfg.kernel.family()?, grid);
    let mut solver = SolverConfig::new(epsilon, cfg.alpha, cfg.final_time, kernel)
        .with_snapshots(cfg.times())
        .with_dt_initial(cfg.dt_initial())
        .with_refine_tol(cfg.solver.refine_tol);
    solver.max_halvings = cfg.solver.max_halvings;
    solver.l2_drift_limit = cfg.solver.l2_drift_limit;
    Ok(solver)
}

/// Propagates `u^ε`, builds `u_app` at every snapshot and measures the error
/// and the remainder diagnostics.
pub fn run_case(cfg: &SweepConfig, epsilon: f64) -> Result<CaseOutcome> {
    let start = Instant::now();
    let modes = cfg.mode_spec();
    let grid = case_grid(cfg, epsilon)?;
    let solver = case_solver(cfg, epsilon, &grid)?;
    let kernel = solver.kernel.clone();
    let u0 = build_initial_data(&modes, epsilon, &grid)?;
    let trajectory = propagate(&solver, &u0)?;

    let variant = cfg.variant.at(epsilon);
    let initial_mass: Vec<f64> = modes.profiles(&grid)?.iter().map(|a| a.l2_norm()).collect();
    let mut snapshots = Vec::with_capacity(trajectory.snapshots.len());
    for snap in &trajectory.snapshots {
        let amplitudes = build_amplitudes(&modes, snap.time, &kernel, cfg.alpha, variant)?;
        let u_app = assemble_u_app(&amplitudes, &modes, snap.time, epsilon)?;
        let error = sup_error(&snap.field, &u_app)?;
        let residuals = residual_terms(&amplitudes, &modes, &kernel, epsilon, cfg.alpha, snap.time)?;
        let bound = if modes.len() >= 2 {
            Some(yr_bound_check(&residuals, &amplitudes, &modes, &kernel, epsilon)?)
        } else {
            None
        };
        let mode_mass_drift =
            amplitudes.amplitudes.iter().zip(&initial_mass).map(|(a, m)| (a.l2_norm() - m).abs()).fold(0.0, f64::max);
        snapshots.push(SnapshotDiagnostics {
            time: snap.time,
            sup_error: error,
            yr_wiener: residuals.yr_wiener,
            bound,
            mode_mass_drift,
        });
    }

    let max = |f: &dyn Fn(&SnapshotDiagnostics) -> f64| snapshots.iter().map(f).fold(0.0, f64::max);
    let bound_ratio = if modes.len() >= 2 { max(&|s| s.bound.map(|b| b.ratio).unwrap_or(0.0)) } else { f64::NAN };
    let record = CaseRecord {
        epsilon,
        sup_error: max(&|s| s.sup_error),
        yr_wiener: max(&|s| s.yr_wiener),
        bound_ratio,
        l2_drift: trajectory.l2_drift,
        runtime_s: if cfg.timings { start.elapsed().as_secs_f64() } else { 0.0 },
    };
    Ok(CaseOutcome {
        record,
        diagnostics: CaseDiagnostics { epsilon, points: grid.points(), refinement: trajectory.refinement, snapshots },
    })
}

/// A point of the log-log fit; points with `error < floor` are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub epsilon: f64,
    pub error: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Least-squares slope of `log error` against `log ε`.
    pub beta: f64,
    pub stderr: f64,
    /// `log error` at `ε = 1`.
    pub intercept: f64,
    pub used: usize,
    pub dropped: usize,
}

/// Least-squares slope in log-log coordinates over the points above their
/// floor, with the usual standard error of the slope.
pub fn fit_rate(points: &[RatePoint]) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.error > 0.0 && p.error.is_finite() && p.error >= p.floor)
        .map(|p| (p.epsilon.ln(), p.error.ln()))
        .collect();
    let dropped = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(Error::InsufficientPoints { usable: usable.len(), dropped });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("rate fit needs distinct epsilon values".into()));
    }
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let ssr: f64 = usable.iter().map(|p| (p.1 - intercept - beta * p.0).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(RateFit { beta, stderr, intercept, used: usable.len(), dropped })
}

/// Fit inputs of a sweep: floors at `floor_factor · η ε²`.
pub fn rate_points(cfg: &SweepConfig, records: &[CaseRecord]) -> Vec<RatePoint> {
    records
        .iter()
        .map(|r| RatePoint {
            epsilon: r.epsilon,
            error: r.sup_error,
            floor: cfg.fit.floor_factor * cfg.solver.refine_tol * r.epsilon * r.epsilon,
        })
        .collect()
}

/// Pass flags of a sweep, recomputable from the records and thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepFlags {
    pub rate: bool,
    pub conservation: bool,
    pub bound: bool,
    pub all: bool,
}

/// The acceptance window `[rate_min, rate_max]` for `β̂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateWindow {
    pub min: f64,
    pub max: Option<f64>,
}

impl RateWindow {
    pub fn of(cfg: &SweepConfig) -> Self {
        Self { min: cfg.fit.rate_min.unwrap_or(beta_theory(cfg.alpha) - 0.2), max: cfg.fit.rate_max }
    }

    pub fn contains(&self, beta: f64) -> bool {
        beta >= self.min && self.max.is_none_or(|m| beta <= m)
    }
}

pub fn evaluate_flags(
    records: &[CaseRecord],
    fit: Option<&RateFit>,
    window: RateWindow,
    drift_limit: f64,
) -> SweepFlags {
    let rate = fit.is_some_and(|f| window.contains(f.beta));
    let conservation = records.iter().all(|r| r.l2_drift <= drift_limit);
    let bound = records.iter().all(|r| r.bound_ratio.is_nan() || r.bound_ratio <= 1.0 + 1e-6);
    SweepFlags { rate, conservation, bound, all: rate && conservation && bound }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub name: String,
    pub alpha: f64,
    pub variant: super::config::VariantName,
    pub beta_theory: f64,
    pub records: Vec<CaseRecord>,
    pub diagnostics: Vec<CaseDiagnostics>,
    pub fit: Option<RateFit>,
    /// Why no fit is available.
    pub fit_note: Option<String>,
    pub window: RateWindow,
    pub drift_limit: f64,
    pub flags: SweepFlags,
}

impl SweepReport {
    /// Fits and flags a finished set of cases.
    pub fn assemble(cfg: &SweepConfig, outcomes: Vec<CaseOutcome>) -> Self {
        let (records, diagnostics): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.record, o.diagnostics)).unzip();
        let (fit, fit_note) = match fit_rate(&rate_points(cfg, &records)) {
            Ok(f) => (Some(f), None),
            Err(e @ Error::InsufficientPoints { .. }) => (None, Some(format!("insufficient points: {e}"))),
            Err(e) => (None, Some(e.to_string())),
        };
        let window = RateWindow::of(cfg);
        let drift_limit = cfg.solver.l2_drift_limit;
        let flags = evaluate_flags(&records, fit.as_ref(), window, drift_limit);
        Self {
            name: cfg.name.clone(),
            alpha: cfg.alpha,
            variant: cfg.variant,
            beta_theory: beta_theory(cfg.alpha),
            records,
            diagnostics,
            fit,
            fit_note,
            window,
            drift_limit,
            flags,
        }
    }
}

/// Runs every `ε` of the config on a pool of `cfg.workers` threads and
/// assembles the report in the order of the `ε` list.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<CaseOutcome>> =
        pool.install(|| cfg.epsilons.par_iter().map(|&eps| run_case(cfg, eps)).collect());
    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (eps, r) in cfg.epsilons.iter().zip(results) {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(format!("epsilon {eps:e}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(Error::CaseFailures(failures.join("; ")));
    }
    Ok(SweepReport::assemble(cfg, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(eps: &[f64], f: impl Fn(f64) -> f64) -> Vec<RatePoint> {
        eps.iter().map(|&e| RatePoint { epsilon: e, error: f(e), floor: 0.0 }).collect()
    }

    const EPS: [f64; 5] = [0.25, 0.125, 0.0625, 0.03125, 0.015625];

    #[test]
    fn exact_power_laws() {
        let fit = fit_rate(&points(&EPS, |e| 0.3 * e)).unwrap();
        assert!((fit.beta - 1.0).abs() < 1e-12 && fit.stderr < 1e-12);
        let fit = fit_rate(&points(&EPS, |e| 2.0 * e.sqrt())).unwrap();
        assert!((fit.beta - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn standard_error_of_noisy_fit() {
        // residuals ±δ alternate around a line: hand-computed slope error
        let data = points(&[1.0, 0.5, 0.25, 0.125], |e| e * if e == 1.0 || e == 0.25 { 1.1 } else { 1.0 / 1.1 });
        let fit = fit_rate(&data).unwrap();
        let x: Vec<f64> = [1.0f64, 0.5, 0.25, 0.125].iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = data.iter().map(|p| p.error.ln()).collect();
        let mx = x.iter().sum::<f64>() / 4.0;
        let my = y.iter().sum::<f64>() / 4.0;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let b = x.iter().zip(&y).map(|(a, c)| (a - mx) * (c - my)).sum::<f64>() / sxx;
        let a = my - b * mx;
        let ssr: f64 = x.iter().zip(&y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
        assert!((fit.beta - b).abs() < 1e-14);
        assert!((fit.stderr - (ssr / 2.0 / sxx).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn floor_filter_and_insufficient_points() {
        let mut data = points(&EPS, |e| e);
        for p in data.iter_mut().skip(3) {
            p.floor = 1.0;
        }
        let fit = fit_rate(&data).unwrap();
        assert_eq!((fit.used, fit.dropped), (3, 2));
        assert!((fit.beta - 1.0).abs() < 1e-12);
        data[2].floor = 1.0;
        assert!(matches!(fit_rate(&data), Err(Error::InsufficientPoints { usable: 2, dropped: 3 })));
        assert!(matches!(fit_rate(&data[..1]), Err(Error::InsufficientPoints { usable: 1, dropped: 0 })));
    }

    #[test]
    fn dropped_count_grows_as_tolerance_loosens() {
        let errors = |e: f64| 0.25 * e + 0.01 * e * e;
        let mut last = 0;
        for eta in [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let data: Vec<RatePoint> =
                EPS.iter().map(|&e| RatePoint { epsilon: e, error: errors(e), floor: 100.0 * eta * e * e }).collect();
            let dropped = data.iter().filter(|p| p.error < p.floor).count();
            assert!(dropped >= last);
            last = dropped;
            if let Ok(fit) = fit_rate(&data) {
                assert_eq!(fit.dropped, dropped);
            }
        }
        assert!(last > 0);
    }

    #[test]
    fn theory_exponents() {
        let table = [(1.0, 1.0), (1.25, 0.25), (1.5, 0.5), (1.75, 0.75), (2.0, 1.0), (3.0, 1.0)];
        for (alpha, beta) in table {
            assert!((beta_theory(alpha) - beta).abs() < 1e-15, "alpha {alpha}");
        }
    }
}
