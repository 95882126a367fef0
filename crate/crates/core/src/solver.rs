//! Strang-split spectral propagation of
//!
//! ```text
//! iε ∂_t u = -(ε²/2) Δu + ε^α (K ∗ |u|²) u
//! ```
//!
//! Both sub-flows are solved exactly: the linear one is the multiplier
//! `e^{-iεt|ξ|²/2}`, the nonlinear one a pointwise phase rotation by the real
//! potential `ε^{α-1} K∗|u|²`, which leaves `|u|` and hence the potential
//! unchanged. The only discretization error is the splitting commutator.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::spectral::{Field, Representation};

/// Default refinement target factor `η` in `η ε²`.
pub const DEFAULT_REFINE_TOL: f64 = 0.1;
pub const DEFAULT_MAX_HALVINGS: usize = 12;
pub const DEFAULT_L2_DRIFT_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub final_time: f64,
    pub dt_initial: f64,
    /// `η`: accepted once two successive halvings differ by less than `η ε²`.
    pub refine_tol: f64,
    pub kernel: Kernel,
    pub snapshot_times: Vec<f64>,
    pub max_halvings: usize,
    pub l2_drift_limit: f64,
}

impl SolverConfig {
    /// Defaults: `dt_initial = T/8`, `η = 0.1`, one snapshot at `T`.
    pub fn new(epsilon: f64, alpha: f64, final_time: f64, kernel: Kernel) -> Self {
        Self {
            epsilon,
            alpha,
            final_time,
            dt_initial: final_time / 8.0,
            refine_tol: DEFAULT_REFINE_TOL,
            kernel,
            snapshot_times: vec![final_time],
            max_halvings: DEFAULT_MAX_HALVINGS,
            l2_drift_limit: DEFAULT_L2_DRIFT_LIMIT,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_dt_initial(mut self, dt: f64) -> Self {
        self.dt_initial = dt;
        self
    }

    pub fn with_refine_tol(mut self, eta: f64) -> Self {
        self.refine_tol = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon {} not in (0, 1]", self.epsilon));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be >= 1", self.alpha));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("final time {} must be positive", self.final_time));
        }
        if !(self.dt_initial > 0.0 && self.refine_tol > 0.0) {
            return bad("dt_initial and refine_tol must be positive".into());
        }
        if self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return bad("snapshot times must be sorted".into());
        }
        if self.snapshot_times.iter().any(|&t| !(0.0..=self.final_time).contains(&t)) {
            return bad("snapshot times must lie in [0, T]".into());
        }
        Ok(())
    }

    /// Prefactor `ε^{α-1}` of the potential in `∂_t u`.
    pub fn coupling(&self) -> f64 {
        self.epsilon.powf(self.alpha - 1.0)
    }
}

/// One Strang step `Δt` with precomputed half-step multiplier.
struct Stepper<'a> {
    cfg: &'a SolverConfig,
    dt: f64,
    half: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a SolverConfig, dt: f64) -> Self {
        let grid = cfg.kernel.grid();
        let eps = cfg.epsilon;
        let half = grid.sample_multiplier(|xi| {
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            Complex64::from_polar(1.0, -eps * dt * r2 / 4.0)
        });
        Self { cfg, dt, half }
    }

    fn step(&self, u: &Field) -> Result<Field> {
        let half = u.apply_multiplier_samples(&self.half, Representation::Physical)?;
        let potential = self.cfg.kernel.convolve(&half.abs_sqr())?;
        let rate = self.cfg.coupling() * self.dt;
        let rotated = half.zip_map(&potential, |v, p| v * Complex64::from_polar(1.0, -rate * p.re));
        let out = rotated.apply_multiplier_samples(&self.half, Representation::Physical)?;
        if !out.is_finite() {
            return Err(Error::NonFinite("solution (unstable step)".into()));
        }
        Ok(out)
    }
}

/// Half linear step, exact nonlinear phase rotation with the midpoint
/// potential, half linear step. `u` must be in physical representation.
pub fn strang_step(u: &Field, dt: f64, cfg: &SolverConfig) -> Result<Field> {
    if u.representation() != Representation::Physical {
        return Err(Error::Representation { expected: Representation::Physical, found: u.representation() });
    }
    if u.grid() != cfg.kernel.grid() {
        return Err(Error::GridMismatch);
    }
    Stepper::new(cfg, dt).step(u)
}

/// Exact free evolution `e^{iεtΔ/2} u`.
pub fn free_evolution(u: &Field, t: f64, epsilon: f64) -> Field {
    u.apply_multiplier(
        |xi| {
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            Complex64::from_polar(1.0, -epsilon * t * r2 / 2.0)
        },
        Representation::Physical,
    )
    .expect("unimodular multiplier is finite")
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub field: Field,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementInfo {
    pub accepted_dt: f64,
    /// Max-norm difference at `T` between the accepted run and the one before.
    pub difference: f64,
    pub halvings: usize,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub snapshots: Vec<Snapshot>,
    /// Solution at the final time.
    pub final_state: Field,
    /// Max relative deviation of `‖u‖_{L²}` from its initial value.
    pub l2_drift: f64,
    pub refinement: RefinementInfo,
}

struct FixedRun {
    snapshots: Vec<Snapshot>,
    final_state: Field,
    l2_drift: f64,
    steps: usize,
}

fn run_fixed(cfg: &SolverConfig, u0: &Field, dt: f64) -> Result<FixedRun> {
    let stepper = Stepper::new(cfg, dt);
    let mass0 = u0.l2_norm();
    let mut drift = 0.0f64;
    let mut u = u0.to_physical();
    let mut t = 0.0;
    let mut steps = 0;
    let mut snapshots = Vec::with_capacity(cfg.snapshot_times.len());
    let mut targets: Vec<f64> = cfg.snapshot_times.clone();
    targets.push(cfg.final_time);
    let mut sub_cache: Option<(f64, Stepper)> = None;
    for (i, &target) in targets.iter().enumerate() {
        let span = target - t;
        if span > 0.0 {
            let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let local = if h == dt {
                &stepper
            } else {
                if sub_cache.as_ref().map(|(s, _)| *s != h).unwrap_or(true) {
                    sub_cache = Some((h, Stepper::new(cfg, h)));
                }
                &sub_cache.as_ref().unwrap().1
            };
            for _ in 0..n {
                u = local.step(&u)?;
                if mass0 > 0.0 {
                    drift = drift.max((u.l2_norm() - mass0).abs() / mass0);
                }
            }
            steps += n;
            t = target;
        }
        if i < cfg.snapshot_times.len() {
            snapshots.push(Snapshot { time: target, field: u.clone() });
        }
    }
    Ok(FixedRun { snapshots, final_state: u, l2_drift: drift, steps })
}

/// Propagation with a fixed step (snapshot intervals are split into equal
/// sub-steps no longer than `dt`). No refinement and no drift rejection.
pub fn propagate_fixed(cfg: &SolverConfig, u0: &Field, dt: f64) -> Result<Trajectory> {
    cfg.validate()?;
    let run = run_fixed(cfg, u0, dt)?;
    Ok(Trajectory {
        config: cfg.clone(),
        snapshots: run.snapshots,
        final_state: run.final_state,
        l2_drift: run.l2_drift,
        refinement: RefinementInfo { accepted_dt: dt, difference: f64::NAN, halvings: 0, steps: run.steps },
    })
}

/// Propagates to `T`, halving `Δt` from `dt_initial` until two successive
/// runs differ by less than `η ε²` in the max norm at `T`, and returns the
/// snapshots of the finer run.
pub fn propagate(cfg: &SolverConfig, u0: &Field) -> Result<Trajectory> {
    cfg.validate()?;
    if u0.grid() != cfg.kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let target = cfg.refine_tol * cfg.epsilon * cfg.epsilon;
    let mut dt = cfg.dt_initial;
    let mut previous = run_fixed(cfg, u0, dt)?;
    let mut difference = f64::INFINITY;
    for halvings in 1..=cfg.max_halvings {
        dt /= 2.0;
        let current = run_fixed(cfg, u0, dt)?;
        difference = current.final_state.max_abs_diff(&previous.final_state)?;
        if difference < target {
            if current.l2_drift > cfg.l2_drift_limit {
                return Err(Error::L2Drift { drift: current.l2_drift, limit: cfg.l2_drift_limit });
            }
            return Ok(Trajectory {
                config: cfg.clone(),
                snapshots: current.snapshots,
                final_state: current.final_state,
                l2_drift: current.l2_drift,
                refinement: RefinementInfo { accepted_dt: dt, difference, halvings, steps: current.steps },
            });
        }
        previous = current;
    }
    Err(Error::Instability { halvings: cfg.max_halvings, difference })
}
