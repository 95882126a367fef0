//! Scenario files.
//!
//! One TOML file describes one sweep:
//!
//! ```toml
//! name = "critical"
//! dimension = 1
//! alpha = 1.0
//! variant = "standard"            # or "epsilon_modulated"
//! epsilons = [0.25, 0.125, 0.0625]
//! final_time = 0.5
//! snapshots = 11                  # uniform times in [0, T]; or snapshot_times = [...]
//! box_length_pi = 32.0            # or box_length = 100.53
//! output_dir = "out/critical"
//! workers = 4
//!
//! [kernel]
//! family = "exponential1d"        # zero | constant | yukawa3d | exponential1d
//! sign = 1.0
//! lambda = 1.0
//!
//! [[modes]]
//! wavevector = [-1.0]
//! center = [0.0]
//! width = 1.0
//! weight = [1.0, 0.0]             # real and imaginary part
//! ```
//!
//! Optional tables `[solver]`, `[grid]` and `[fit]` override the step
//! control, the resolution rule and the acceptance window of the rate fit.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::solver::{DEFAULT_L2_DRIFT_LIMIT, DEFAULT_MAX_HALVINGS, DEFAULT_REFINE_TOL};
use crate::wkb::{Mode, ModeSpec, Profile, ResolutionPolicy, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Standard,
    EpsilonModulated,
}

impl VariantName {
    pub fn at(self, epsilon: f64) -> Variant {
        match self {
            Self::Standard => Variant::Standard,
            Self::EpsilonModulated => Variant::EpsilonModulated { epsilon },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Zero,
    Constant,
    Yukawa3d,
    Exponential1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: FamilyName,
    #[serde(default = "one")]
    pub sign: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    /// Multiplier value of the constant family.
    #[serde(default)]
    pub value: f64,
    /// Bound the hypothesis suprema are checked against; unbounded if absent.
    pub bound: Option<f64>,
}

impl KernelConfig {
    pub fn family(&self) -> Result<KernelFamily> {
        if self.sign.abs() != 1.0 {
            return Err(Error::Config(format!("kernel sign must be +1 or -1, got {}", self.sign)));
        }
        let positive = |l: f64| {
            if l > 0.0 && l.is_finite() {
                Ok(l)
            } else {
                Err(Error::Config(format!("kernel lambda must be positive, got {l}")))
            }
        };
        Ok(match self.family {
            FamilyName::Zero => KernelFamily::Zero,
            FamilyName::Constant => KernelFamily::Constant(self.value),
            FamilyName::Yukawa3d => KernelFamily::Yukawa3d { sign: self.sign, lambda: positive(self.lambda)? },
            FamilyName::Exponential1d => {
                KernelFamily::Exponential1d { sign: self.sign, lambda: positive(self.lambda)? }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub wavevector: Vec<f64>,
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "unit_weight")]
    pub weight: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Initial step; defaults to `T/8`.
    pub dt_initial: Option<f64>,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: usize,
    #[serde(default = "default_drift_limit")]
    pub l2_drift_limit: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt_initial: None,
            refine_tol: DEFAULT_REFINE_TOL,
            max_halvings: DEFAULT_MAX_HALVINGS,
            l2_drift_limit: DEFAULT_L2_DRIFT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_spectral_widths")]
    pub spectral_widths: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        let p = ResolutionPolicy::default();
        Self { safety: p.safety, spectral_widths: p.spectral_widths, max_points: p.max_points }
    }
}

impl GridSettings {
    pub fn policy(&self) -> ResolutionPolicy {
        ResolutionPolicy { safety: self.safety, spectral_widths: self.spectral_widths, max_points: self.max_points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSettings {
    /// Points with `error < floor_factor · η ε²` are dropped from the fit.
    #[serde(default = "default_floor_factor")]
    pub floor_factor: f64,
    /// Lower end of the accepted `β̂` window; defaults to `β_theory − 0.2`.
    pub rate_min: Option<f64>,
    /// Upper end; unbounded when absent.
    pub rate_max: Option<f64>,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { floor_factor: default_floor_factor(), rate_min: None, rate_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    pub dimension: usize,
    pub alpha: f64,
    #[serde(default = "default_variant")]
    pub variant: VariantName,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    /// Number of uniform snapshot times in `[0, T]`, endpoints included.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Explicit snapshot times; overrides `snapshots`.
    pub snapshot_times: Option<Vec<f64>>,
    pub box_length: Option<f64>,
    /// Box length in units of `π`.
    pub box_length_pi: Option<f64>,
    pub kernel: KernelConfig,
    pub modes: Vec<ModeConfig>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub fit: FitSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// When false the `runtime_s` column is written as zero, making the CSV
    /// reproducible byte for byte.
    #[serde(default = "yes")]
    pub timings: bool,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a scenario file; a relative `output_dir` is resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(1..=3).contains(&self.dimension) {
            return bad(format!("dimension {} not in 1..=3", self.dimension));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be >= 1", self.alpha));
        }
        if self.epsilons.is_empty() {
            return bad("epsilon list is empty".into());
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("every epsilon must lie in (0, 1]".into());
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("final time {} must be positive", self.final_time));
        }
        if self.snapshot_times.is_none() && self.snapshots < 1 {
            return bad("need at least one snapshot".into());
        }
        match (self.box_length, self.box_length_pi) {
            (Some(_), Some(_)) => return bad("give box_length or box_length_pi, not both".into()),
            (None, None) => return bad("box_length or box_length_pi is required".into()),
            _ => {}
        }
        if !(self.length() > 0.0 && self.length().is_finite()) {
            return bad("box length must be positive".into());
        }
        if self.modes.is_empty() {
            return Err(Error::NoModes);
        }
        for (j, m) in self.modes.iter().enumerate() {
            if m.wavevector.len() != self.dimension || m.center.len() != self.dimension {
                return bad(format!("mode {j}: wavevector and center need {} components", self.dimension));
            }
            if !(m.width > 0.0 && m.width.is_finite()) {
                return bad(format!("mode {j}: width must be positive"));
            }
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        self.kernel.family()?;
        crate::wkb::check_min_gap(&self.mode_spec())?;
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.box_length.unwrap_or_else(|| self.box_length_pi.unwrap_or(0.0) * PI)
    }

    pub fn mode_spec(&self) -> ModeSpec {
        ModeSpec::new(
            self.modes
                .iter()
                .map(|m| Mode {
                    wavevector: m.wavevector.clone(),
                    profile: Profile::gaussian(m.center.clone(), m.width, Complex64::new(m.weight[0], m.weight[1])),
                })
                .collect(),
        )
    }

    pub fn times(&self) -> Vec<f64> {
        match &self.snapshot_times {
            Some(t) => t.clone(),
            None if self.snapshots == 1 => vec![self.final_time],
            None => {
                let n = self.snapshots - 1;
                (0..=n).map(|i| self.final_time * i as f64 / n as f64).collect()
            }
        }
    }

    pub fn dt_initial(&self) -> f64 {
        self.solver.dt_initial.unwrap_or(self.final_time / 8.0)
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn unit_weight() -> [f64; 2] {
    [1.0, 0.0]
}
fn default_refine_tol() -> f64 {
    DEFAULT_REFINE_TOL
}
fn default_max_halvings() -> usize {
    DEFAULT_MAX_HALVINGS
}
fn default_drift_limit() -> f64 {
    DEFAULT_L2_DRIFT_LIMIT
}
fn default_safety() -> f64 {
    ResolutionPolicy::default().safety
}
fn default_spectral_widths() -> f64 {
    ResolutionPolicy::default().spectral_widths
}
fn default_max_points() -> usize {
    ResolutionPolicy::default().max_points
}
fn default_floor_factor() -> f64 {
    100.0
}
fn default_variant() -> VariantName {
    VariantName::Standard
}
fn default_final_time() -> f64 {
    0.5
}
fn default_snapshots() -> usize {
    11
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_workers() -> usize {
    1
}
