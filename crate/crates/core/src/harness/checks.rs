//! The `check` suites: kernel hypotheses, Wiener-algebra inequalities and
//! WKB invariants, each reported as a list of named outcomes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{cal_a_norm, random_band_limited, wiener_norm, wiener_suites, young_suite, SuiteReport};
use crate::error::Result;
use crate::kernels::{verify_kernel_hypothesis, Kernel};
use crate::spectral::Grid;
use crate::wkb::{
    assemble_u_app, build_amplitudes, build_initial_data, check_min_gap, transport_residual, ModeSpec, Variant,
};

use super::config::{SweepConfig, VariantName};
use super::sweep::case_grid;

/// Trials per randomized suite.
pub const SUITE_TRIALS: usize = 100;
pub const SUITE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    fn from_suite(r: SuiteReport) -> Self {
        let detail = format!("{} trials, {} violations, worst excess {:e}", r.trials, r.violations, r.worst_excess);
        Self::new(r.name.clone(), r.passed(), detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Kernel,
    Wiener,
    Wkb,
}

pub fn run_suite(cfg: &SweepConfig, suite: Suite) -> Result<Vec<CheckOutcome>> {
    match suite {
        Suite::Kernel => kernel_checks(cfg),
        Suite::Wiener => {
            Ok(wiener_suites(SUITE_TRIALS, SUITE_SEED).into_iter().map(CheckOutcome::from_suite).collect())
        }
        Suite::Wkb => wkb_checks(cfg),
    }
}

/// Grid of the smallest `ε`, the finest lattice of the sweep.
fn finest_grid(cfg: &SweepConfig) -> Result<(f64, Grid)> {
    let eps = cfg.epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((eps, case_grid(cfg, eps)?))
}

pub fn kernel_checks(cfg: &SweepConfig) -> Result<Vec<CheckOutcome>> {
    let (_, grid) = finest_grid(cfg)?;
    let kernel = Kernel::new(cfg.kernel.family()?, &grid);
    let bound = cfg.kernel.bound.unwrap_or(f64::INFINITY);
    let h = verify_kernel_hypothesis(&kernel, bound)?;
    let mut out = vec![
        CheckOutcome::new("multiplier bounded", h.bounded, format!("sup|K̂| = {:e}", h.sup_khat)),
        CheckOutcome::new("(1+|ξ|) K̂ bounded", h.decay, format!("sup = {:e}", h.sup_weighted)),
        CheckOutcome::new("|ξ| K̂ bounded", h.gradient, format!("sup = {:e}", h.sup_gradient)),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let band = grid.points() / 8;
    let (mut commute, mut imag) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let f = random_band_limited(&grid, band, &mut rng);
        let v: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let a = kernel.convolve(&f.translate(&v)?)?;
        let b = kernel.convolve(&f)?.translate(&v)?;
        commute = commute.max(a.max_abs_diff(&b)?);
        let real = f.real_part();
        imag = imag.max(kernel.convolve(&real)?.max_imag() / real.linf_norm().max(f64::MIN_POSITIVE));
    }
    out.push(CheckOutcome::new(
        "convolution commutes with translation",
        commute <= 1e-10,
        format!("max difference {commute:e}"),
    ));
    out.push(CheckOutcome::new(
        "convolution preserves realness",
        imag <= 1e-10,
        format!("max relative imaginary part {imag:e}"),
    ));
    out.push(CheckOutcome::from_suite(young_suite(SUITE_TRIALS, SUITE_SEED)));
    Ok(out)
}

/// Largest `| |A_j(t)| − |a_j(· − tk_j)| |` and `| ‖A_j(t)‖ − ‖a_j‖ |` over modes.
fn transport_deviation(modes: &ModeSpec, kernel: &Kernel, alpha: f64, variant: Variant, t: f64) -> Result<(f64, f64)> {
    let amps = build_amplitudes(modes, t, kernel, alpha, variant)?;
    let profiles = modes.profiles(kernel.grid())?;
    let mut modulus = 0.0f64;
    let mut mass = 0.0f64;
    for ((a, env), p) in amps.amplitudes.iter().zip(&amps.envelopes).zip(&profiles) {
        let m = a.samples().iter().zip(env.samples()).map(|(x, y)| (x.norm() - y.norm()).abs()).fold(0.0, f64::max);
        modulus = modulus.max(m);
        mass = mass.max((a.l2_norm() - p.l2_norm()).abs());
    }
    Ok((modulus, mass))
}

pub fn wkb_checks(cfg: &SweepConfig) -> Result<Vec<CheckOutcome>> {
    let modes = cfg.mode_spec();
    let mut out = Vec::new();

    let gaps = check_min_gap(&modes)?;
    out.push(CheckOutcome::new(
        "wavevectors separated",
        gaps.min_gap > 0.0,
        format!("min gap {:e}, |Λ|∞ = {:e}", gaps.min_gap, gaps.lambda_inf),
    ));

    let mut lattice = Vec::new();
    for &eps in &cfg.epsilons {
        let grid = case_grid(cfg, eps)?;
        if modes.lattice_indices(&grid, eps).is_err() {
            lattice.push(eps);
        }
    }
    out.push(CheckOutcome::new(
        "carriers on the reciprocal lattice",
        lattice.is_empty(),
        if lattice.is_empty() { "every epsilon compatible".to_string() } else { format!("incompatible: {lattice:?}") },
    ));

    let eikonal = modes
        .wavevectors()
        .map(|k| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            (-k2 / 2.0 + k2 / 2.0).abs()
        })
        .fold(0.0, f64::max);
    out.push(CheckOutcome::new("eikonal identity", eikonal == 0.0, format!("max |∂_tφ + |∇φ|²/2| = {eikonal:e}")));

    let eps = cfg.epsilons.iter().cloned().fold(0.0, f64::max);
    let grid = case_grid(cfg, eps)?;
    let kernel = Kernel::new(cfg.kernel.family()?, &grid);
    let variant = cfg.variant.at(eps);
    let times = cfg.times();

    let (mut modulus, mut mass) = (0.0f64, 0.0f64);
    for &t in &times {
        let (m, q) = transport_deviation(&modes, &kernel, cfg.alpha, variant, t)?;
        modulus = modulus.max(m);
        mass = mass.max(q);
    }
    out.push(CheckOutcome::new("modulus transport", modulus <= 1e-10, format!("max deviation {modulus:e}")));
    out.push(CheckOutcome::new("per-mode mass", mass <= 1e-10, format!("max deviation {mass:e}")));

    if cfg.variant == VariantName::Standard && !crate::wkb::is_critical(cfg.alpha) {
        let amps = build_amplitudes(&modes, cfg.final_time, &kernel, cfg.alpha, variant)?;
        let s = amps.phases.iter().map(|p| p.linf_norm()).fold(0.0, f64::max);
        out.push(CheckOutcome::new("no slow phase above the critical scaling", s == 0.0, format!("max |S_j| = {s:e}")));
    }

    let u0 = build_initial_data(&modes, eps, &grid)?;
    let at_zero = assemble_u_app(&build_amplitudes(&modes, 0.0, &kernel, cfg.alpha, variant)?, &modes, 0.0, eps)?;
    let d0 = at_zero.max_abs_diff(&u0)?;
    out.push(CheckOutcome::new("u_app(0) equals initial data", d0 <= 1e-12, format!("max difference {d0:e}")));

    let mut excess = f64::NEG_INFINITY;
    for &t in &times {
        let amps = build_amplitudes(&modes, t, &kernel, cfg.alpha, variant)?;
        let u = assemble_u_app(&amps, &modes, t, eps)?;
        excess = excess.max(wiener_norm(&u) - cal_a_norm(&amps));
    }
    out.push(CheckOutcome::new("‖u_app‖_W ≤ ‖A‖_𝒜", excess <= 1e-10, format!("max excess {excess:e}")));

    let mut gauge = 0.0f64;
    for mode in &modes.modes {
        let single = ModeSpec::new(vec![mode.clone()]);
        for &t in &times {
            let a = build_amplitudes(&single, t, &kernel, cfg.alpha, Variant::Standard)?;
            let b = build_amplitudes(&single, t, &kernel, cfg.alpha, Variant::EpsilonModulated { epsilon: eps })?;
            let ua = assemble_u_app(&a, &single, t, eps)?;
            let ub = assemble_u_app(&b, &single, t, eps)?;
            let d = ua.samples().iter().zip(ub.samples()).map(|(x, y)| (x.norm() - y.norm()).abs()).fold(0.0, f64::max);
            gauge = gauge.max(d);
        }
    }
    out.push(CheckOutcome::new(
        "single-mode gauge consistency",
        gauge <= 1e-12,
        format!("max |u_app| difference {gauge:e}"),
    ));

    let t_mid = cfg.final_time / 2.0;
    let steps = [0.04, 0.02, 0.01].map(|dt| dt * cfg.final_time);
    let residuals: Vec<f64> = steps
        .iter()
        .map(|&dt| {
            transport_residual(&modes, &kernel, cfg.alpha, variant, t_mid, dt)
                .map(|r| r.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    let second_order = residuals[2] < 1e-12 || ratios.iter().all(|r| (3.5..=4.5).contains(r));
    out.push(CheckOutcome::new(
        "transport residual is second order in the stencil",
        second_order,
        format!("residuals {residuals:?}, ratios {ratios:?}"),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO: &str = r#"
name = "check"
dimension = 1
alpha = 1.0
epsilons = [0.25, 0.125]
box_length_pi = 32.0

[kernel]
family = "exponential1d"

[[modes]]
wavevector = [-1.0]
center = [0.0]
width = 1.0

[[modes]]
wavevector = [2.0]
center = [2.0]
width = 1.0
weight = [0.8, 0.3]
"#;

    #[test]
    fn kernel_suite_passes_for_exponential_kernel() {
        let cfg = SweepConfig::from_toml(SCENARIO).unwrap();
        for c in run_suite(&cfg, Suite::Kernel).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn kernel_suite_flags_constant_kernel() {
        let text = SCENARIO.replace("family = \"exponential1d\"", "family = \"constant\"\nvalue = 0.5");
        let cfg = SweepConfig::from_toml(&text).unwrap();
        let out = run_suite(&cfg, Suite::Kernel).unwrap();
        assert!(out[0].passed);
        assert!(!out[1].passed && !out[2].passed);
    }

    #[test]
    fn wkb_suite_passes_for_both_variants() {
        for (alpha, variant) in [("1.0", "standard"), ("1.5", "epsilon_modulated"), ("2.5", "standard")] {
            let text = SCENARIO.replace("alpha = 1.0", &format!("alpha = {alpha}\nvariant = \"{variant}\""));
            let cfg = SweepConfig::from_toml(&text).unwrap();
            for c in run_suite(&cfg, Suite::Wkb).unwrap() {
                assert!(c.passed, "alpha {alpha}: {c:?}");
            }
        }
    }
}
