//! Wiener-algebra norms, the WKB remainder terms and the cross-mode bound.
//!
//! On the torus the Wiener norm is the `ℓ¹` norm of the Fourier-series
//! coefficients, `‖f‖_W = Σ_m |c_m| = (2π)^{-d/2} Σ_m |f̂_m| (2π/L)^d`, the
//! discrete counterpart of `(2π)^{-d/2} ‖f̂‖_{L¹}`. With this normalization
//! `sup|f| ≤ ‖f‖_W`, `‖fg‖_W ≤ ‖f‖_W ‖g‖_W`, and convolution obeys
//! `‖K∗g‖_W ≤ sup|(2π)^{d/2} K̂| ‖g‖_W`.
//!
//! With `R(u) = iε∂_t u + ε²/2 Δu − ε^α (K∗|u|²) u`, the approximate solution
//! leaves the remainder
//!
//! ```text
//! X₂  = ½ Σ_j e^{iφ_j/ε} ΔA_j
//! Y   = −(K ∗ Σ_ℓ |A_ℓ|²) u_app
//! Y_R = −(K ∗ Σ_{ℓ≠m} A_ℓ Ā_m e^{i(φ_ℓ−φ_m)/ε}) u_app
//! ```
//!
//! combined as `ε²X₂ + εY_R` at `α = 1`, `ε²X₂ + ε^α(Y + Y_R)` for `α > 1`
//! and `ε²X₂ + ε^α Y_R` for the ε-modulated amplitudes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelFamily};
use crate::spectral::{Field, Grid, GridSpec, Representation};
use crate::wkb::{assemble_u_app, check_min_gap, is_critical, phase_factors, AmplitudeSet, ModeSpec, Variant};

/// `Σ_m |c_m|`, summed in lattice storage order.
pub fn wiener_norm(f: &Field) -> f64 {
    let spec = f.to_spectral();
    let sum: f64 = spec.samples().iter().map(|c| c.norm()).sum();
    sum * f.grid().coefficient_weight()
}

/// `‖A‖_𝒜 = Σ_j ‖A_j‖_W`.
pub fn cal_a_norm(amplitudes: &AmplitudeSet) -> f64 {
    amplitudes.amplitudes.iter().map(wiener_norm).sum()
}

/// `Σ_j Σ_n ‖∂_n A_j‖_W`.
pub fn gradient_cal_a_norm(amplitudes: &AmplitudeSet) -> f64 {
    amplitudes.gradients().iter().flatten().map(wiener_norm).sum()
}

/// `Σ_j ‖ΔA_j‖_W`.
pub fn laplacian_cal_a_norm(amplitudes: &AmplitudeSet) -> f64 {
    amplitudes.laplacians().iter().map(wiener_norm).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub wiener: f64,
    pub l2: f64,
    pub linf: f64,
    pub per_mode_wiener: Vec<f64>,
}

impl NormReport {
    pub fn of(field: &Field, amplitudes: Option<&AmplitudeSet>) -> Self {
        Self {
            wiener: wiener_norm(field),
            l2: field.l2_norm(),
            linf: field.linf_norm(),
            per_mode_wiener: amplitudes.map(|a| a.amplitudes.iter().map(wiener_norm).collect()).unwrap_or_default(),
        }
    }
}

/// The remainder pieces of the WKB ansatz at one time and their Wiener norms.
#[allow(non_snake_case)]
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub epsilon: f64,
    pub alpha: f64,
    pub time: f64,
    pub X2: Field,
    pub Y: Field,
    pub YR: Field,
    pub remainder: Field,
    pub x2_wiener: f64,
    pub y_wiener: f64,
    pub yr_wiener: f64,
    pub remainder_wiener: f64,
}

/// `ε`-weights `(c_X₂, c_Y, c_{Y_R})` of the remainder combination.
pub fn remainder_weights(epsilon: f64, alpha: f64, variant: Variant) -> (f64, f64, f64) {
    let eps2 = epsilon * epsilon;
    match variant {
        Variant::Standard if is_critical(alpha) => (eps2, 0.0, epsilon),
        Variant::Standard => {
            let e = epsilon.powf(alpha);
            (eps2, e, e)
        }
        Variant::EpsilonModulated { .. } => (eps2, 0.0, epsilon.powf(alpha)),
    }
}

pub fn residual_terms(
    amplitudes: &AmplitudeSet,
    modes: &ModeSpec,
    kernel: &Kernel,
    epsilon: f64,
    alpha: f64,
    t: f64,
) -> Result<ResidualReport> {
    let grid = amplitudes.grid();
    if grid != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let factors = phase_factors(modes, grid, t, epsilon)?;
    let u_app = assemble_u_app(amplitudes, modes, t, epsilon)?;

    let mut x2 = Field::zeros(grid);
    for (lap, w) in amplitudes.laplacians().iter().zip(&factors) {
        x2 = x2.axpy(Complex64::new(0.5, 0.0), &(lap * w));
    }

    let mut density = Field::zeros(grid);
    for a in &amplitudes.amplitudes {
        density = &density + &a.abs_sqr();
    }
    let y = -&(&kernel.convolve(&density)? * &u_app);

    let yr = if modes.len() < 2 || kernel.is_zero() {
        Field::zeros(grid)
    } else {
        let cross = &u_app.abs_sqr() - &density;
        -&(&kernel.convolve(&cross)? * &u_app)
    };

    let (cx, cy, cr) = remainder_weights(epsilon, alpha, amplitudes.variant);
    let remainder =
        x2.scale(Complex64::new(cx, 0.0)).axpy(Complex64::new(cy, 0.0), &y).axpy(Complex64::new(cr, 0.0), &yr);

    Ok(ResidualReport {
        epsilon,
        alpha,
        time: t,
        x2_wiener: wiener_norm(&x2),
        y_wiener: wiener_norm(&y),
        yr_wiener: wiener_norm(&yr),
        remainder_wiener: wiener_norm(&remainder),
        X2: x2,
        Y: y,
        YR: yr,
        remainder,
    })
}

/// Ratio of `‖Y_R‖_W` to `ε C_K ‖A‖²_𝒜 (‖A‖_𝒜 + ‖∇A‖_𝒜)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub yr_wiener: f64,
    pub bound: f64,
    pub ratio: f64,
    pub c_k: f64,
    pub lambda_inf: f64,
    pub amplitude_norm: f64,
    pub gradient_norm: f64,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.ratio <= 1.0 + 1e-6
    }
}

/// `max_n sup |ξ_n (2π)^{d/2} K̂(ξ)|`.
pub fn kernel_gradient_sup(kernel: &Kernel) -> f64 {
    let grid = kernel.grid();
    let d = grid.dim();
    kernel
        .convolution_multiplier()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let xi = grid.frequency(i);
            xi[..d].iter().map(|x| x.abs()).fold(0.0, f64::max) * m.abs()
        })
        .fold(0.0, f64::max)
}

/// `C_K = |Λ|_∞ max(d sup|ξ_n M|, 2 sup|M|)` with `M = (2π)^{d/2} K̂`.
pub fn bound_constant(modes: &ModeSpec, kernel: &Kernel) -> Result<f64> {
    let gaps = check_min_gap(modes)?;
    let d = kernel.grid().dim() as f64;
    Ok(gaps.lambda_inf * (d * kernel_gradient_sup(kernel)).max(2.0 * kernel.wiener_bound()))
}

pub fn yr_bound_check(
    report: &ResidualReport,
    amplitudes: &AmplitudeSet,
    modes: &ModeSpec,
    kernel: &Kernel,
    epsilon: f64,
) -> Result<BoundCheck> {
    if modes.len() < 2 {
        return Err(Error::TooFewModes(modes.len()));
    }
    let c_k = bound_constant(modes, kernel)?;
    let lambda_inf = check_min_gap(modes)?.lambda_inf;
    let a = cal_a_norm(amplitudes);
    let g = gradient_cal_a_norm(amplitudes);
    let bound = epsilon * c_k * a * a * (a + g);
    let ratio = if report.yr_wiener == 0.0 { 0.0 } else { report.yr_wiener / bound };
    Ok(BoundCheck { yr_wiener: report.yr_wiener, bound, ratio, c_k, lambda_inf, amplitude_norm: a, gradient_norm: g })
}

/// `max_n |u(x_n) − v(x_n)|`.
pub fn sup_error(u: &Field, v: &Field) -> Result<f64> {
    u.max_abs_diff(v)
}

/// Result of one randomized inequality suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` seen (negative when every trial had room).
    pub worst_excess: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Absolute slack allowed in the randomized inequalities.
pub const SUITE_SLACK: f64 = 1e-9;

struct Tally {
    name: &'static str,
    trials: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, trials: 0, violations: 0, worst: f64::NEG_INFINITY }
    }

    fn record(&mut self, lhs: f64, rhs: f64, slack: f64) {
        self.trials += 1;
        let excess = lhs - rhs;
        self.worst = self.worst.max(excess);
        // NaN counts as a violation.
        if excess.is_nan() || excess > slack {
            self.violations += 1;
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name.into(),
            trials: self.trials,
            violations: self.violations,
            worst_excess: self.worst,
        }
    }
}

/// Random field with Fourier-series coefficients supported on `|m_a| ≤ band`,
/// normalized to unit Wiener norm.
pub fn random_band_limited(grid: &Grid, band: usize, rng: &mut ChaCha8Rng) -> Field {
    let d = grid.dim();
    let dxi = grid.frequency_spacing();
    let decay: f64 = rng.gen_range(0.0..0.5);
    let data: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let xi = grid.frequency(i);
            let inside = xi[..d].iter().all(|x| (x / dxi).round().abs() <= band as f64);
            if inside {
                let r: f64 = xi[..d].iter().map(|x| (x / dxi).abs()).sum();
                let amp = (-decay * r).exp();
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp
            } else {
                Complex64::default()
            }
        })
        .collect();
    let f = Field::new(grid.clone(), data, Representation::Spectral).expect("grid sized").to_physical();
    let w = wiener_norm(&f);
    f.scale(Complex64::new(rng.gen_range(0.2..3.0) / w, 0.0))
}

fn suite_grid(rng: &mut ChaCha8Rng) -> Grid {
    let dim = rng.gen_range(1..=2);
    let points = if dim == 1 { 128 } else { 32 };
    let length = rng.gen_range(2.0..40.0);
    Grid::new(GridSpec::new(dim, points, length)).expect("valid grid")
}

fn suite_kernel(grid: &Grid, rng: &mut ChaCha8Rng) -> Kernel {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let lambda = rng.gen_range(0.3..3.0);
    let family = if grid.dim() == 1 {
        KernelFamily::Exponential1d { sign, lambda }
    } else {
        let (a, b) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        KernelFamily::custom(move |xi| sign * a / (1.0 + b * xi.iter().map(|x| x * x).sum::<f64>()))
    };
    Kernel::new(family, grid)
}

/// `‖fg‖_W ≤ ‖f‖_W ‖g‖_W` on random band-limited pairs.
pub fn submultiplicativity_suite(trials: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("submultiplicativity");
    for _ in 0..trials {
        let grid = suite_grid(&mut rng);
        let band = grid.points() / 5;
        let f = random_band_limited(&grid, band, &mut rng);
        let g = random_band_limited(&grid, band, &mut rng);
        tally.record(wiener_norm(&(&f * &g)), wiener_norm(&f) * wiener_norm(&g), SUITE_SLACK);
    }
    tally.finish()
}

/// `‖e^{itε|ξ|²/2} f‖_W = ‖f‖_W`, recorded as the absolute deviation.
pub fn unitarity_suite(trials: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("unitarity");
    for _ in 0..trials {
        let grid = suite_grid(&mut rng);
        let f = random_band_limited(&grid, grid.points() / 4, &mut rng);
        let (t, eps) = (rng.gen_range(-5.0..5.0), rng.gen_range(1e-3..1.0));
        let g = f
            .apply_multiplier(
                |xi| Complex64::from_polar(1.0, t * eps * xi.iter().map(|x| x * x).sum::<f64>() / 2.0),
                Representation::Physical,
            )
            .expect("finite multiplier");
        let before = wiener_norm(&f);
        tally.record((wiener_norm(&g) - before).abs(), 0.0, 1e-12 * before.max(1.0));
    }
    tally.finish()
}

/// `‖(K∗(uv))w‖_W ≤ sup|M| ‖u‖_W ‖v‖_W ‖w‖_W`.
pub fn trilinear_suite(trials: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("trilinear");
    for _ in 0..trials {
        let grid = suite_grid(&mut rng);
        let kernel = suite_kernel(&grid, &mut rng);
        let band = grid.points() / 7;
        let u = random_band_limited(&grid, band, &mut rng);
        let v = random_band_limited(&grid, band, &mut rng);
        let w = random_band_limited(&grid, band, &mut rng);
        let lhs = wiener_norm(&(&kernel.convolve(&(&u * &v)).expect("same grid") * &w));
        let rhs = kernel.wiener_bound() * wiener_norm(&u) * wiener_norm(&v) * wiener_norm(&w);
        tally.record(lhs, rhs, SUITE_SLACK);
    }
    tally.finish()
}

/// `‖K∗(uv)‖_W ≤ sup|M| ‖uv‖_W`.
pub fn young_suite(trials: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("young");
    for _ in 0..trials {
        let grid = suite_grid(&mut rng);
        let kernel = suite_kernel(&grid, &mut rng);
        let band = grid.points() / 5;
        let uv = &random_band_limited(&grid, band, &mut rng) * &random_band_limited(&grid, band, &mut rng);
        let lhs = wiener_norm(&kernel.convolve(&uv).expect("same grid"));
        tally.record(lhs, kernel.wiener_bound() * wiener_norm(&uv), SUITE_SLACK);
    }
    tally.finish()
}

/// `‖Σ_j b_j e^{ik_j·x/ε}‖_W ≤ Σ_j ‖b_j‖_W`, with equality enforced when the
/// shifted spectra are disjoint on the lattice. Each trial contributes one
/// record; disjoint trials record the absolute gap to equality.
pub fn shift_suite(trials: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("shift");
    for _ in 0..trials {
        let grid = Grid::new(GridSpec::new(1, 256, rng.gen_range(2.0..40.0))).expect("valid grid");
        let band = rng.gen_range(2..12usize);
        let count = rng.gen_range(1..=4usize);
        let mut shifts: Vec<i64> = Vec::new();
        let mut total = Field::zeros(&grid);
        let mut sum = 0.0;
        for _ in 0..count {
            let b = random_band_limited(&grid, band, &mut rng);
            let m = rng.gen_range(-100..=100i64);
            shifts.push(m);
            sum += wiener_norm(&b);
            total = &total + &(&b * &grid.plane_wave(&[m]));
        }
        let lhs = wiener_norm(&total);
        let disjoint = shifts
            .iter()
            .enumerate()
            .all(|(i, a)| shifts[i + 1..].iter().all(|b| (a - b).unsigned_abs() as usize > 2 * band));
        if disjoint {
            tally.record((lhs - sum).abs(), 0.0, 1e-10);
        } else {
            tally.record(lhs, sum, 1e-10);
        }
    }
    tally.finish()
}

/// The four Wiener-algebra suites of the `check --suite wiener` verb.
pub fn wiener_suites(trials: usize, seed: u64) -> Vec<SuiteReport> {
    vec![
        submultiplicativity_suite(trials, seed),
        unitarity_suite(trials, seed.wrapping_add(1)),
        trilinear_suite(trials, seed.wrapping_add(2)),
        shift_suite(trials, seed.wrapping_add(3)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wkb::{build_amplitudes, build_initial_data, Mode, Profile};
    use std::f64::consts::PI;

    fn scenario_modes() -> ModeSpec {
        ModeSpec::new(vec![
            Mode { wavevector: vec![-1.0], profile: Profile::gaussian(vec![0.0], 1.0, Complex64::new(1.0, 0.0)) },
            Mode { wavevector: vec![2.0], profile: Profile::gaussian(vec![2.0], 1.0, Complex64::new(0.8, 0.3)) },
        ])
    }

    fn grid(n: usize) -> Grid {
        Grid::new(GridSpec::new(1, n, 32.0 * PI)).unwrap()
    }

    fn exp_kernel(g: &Grid) -> Kernel {
        Kernel::new(KernelFamily::Exponential1d { sign: 1.0, lambda: 1.0 }, g)
    }

    #[test]
    fn wiener_norm_of_pure_mode_is_modulus() {
        let g = grid(64);
        let a = Complex64::new(-0.6, 0.8) * 2.5;
        let f = g.plane_wave(&[7]).scale(a);
        assert!((wiener_norm(&f) - a.norm()).abs() < 1e-13);
    }

    #[test]
    fn wiener_norm_of_gaussian_is_one() {
        // (2π)^{-1/2} ∫ e^{-ξ²/2} dξ = 1
        let g = grid(2048);
        let f = Field::from_real_fn(&g, |x| (-x[0] * x[0] / 2.0).exp());
        assert!((wiener_norm(&f) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wiener_norm_dominates_sup() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = suite_grid(&mut rng);
            let f = random_band_limited(&g, g.points() / 4, &mut rng);
            assert!(f.linf_norm() <= wiener_norm(&f) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cal_a_norm_is_sum_and_homogeneous() {
        let g = grid(512);
        let kernel = exp_kernel(&g);
        let modes = scenario_modes();
        let amps = build_amplitudes(&modes, 0.3, &kernel, 1.0, Variant::Standard).unwrap();
        let sum: f64 = amps.amplitudes.iter().map(wiener_norm).sum();
        assert_eq!(cal_a_norm(&amps), sum);

        let c = Complex64::new(-1.5, 2.0);
        let mut scaled = amps.clone();
        scaled.amplitudes = amps.amplitudes.iter().map(|a| a.scale(c)).collect();
        assert!((cal_a_norm(&scaled) - c.norm() * cal_a_norm(&amps)).abs() < 1e-12);

        let mut single = amps.clone();
        single.amplitudes.truncate(1);
        assert_eq!(cal_a_norm(&single), wiener_norm(&amps.amplitudes[0]));
    }

    #[test]
    fn u_app_wiener_norm_is_bounded_by_cal_a_norm() {
        let eps = 1.0 / 16.0;
        let g = grid(4096);
        let kernel = exp_kernel(&g);
        let modes = scenario_modes();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let t = rng.gen_range(0.0..0.5);
            let amps = build_amplitudes(&modes, t, &kernel, 1.0, Variant::Standard).unwrap();
            let u = assemble_u_app(&amps, &modes, t, eps).unwrap();
            assert!(wiener_norm(&u) <= cal_a_norm(&amps) + 1e-10);
        }
    }

    #[test]
    fn initial_data_wiener_norm_is_epsilon_independent() {
        let modes = scenario_modes();
        let g = grid(8192);
        let profiles: f64 = modes.profiles(&g).unwrap().iter().map(wiener_norm).sum();
        for eps in [0.125, 1.0 / 16.0, 1.0 / 64.0] {
            let u0 = build_initial_data(&modes, eps, &g).unwrap();
            assert!((wiener_norm(&u0) - profiles).abs() < 1e-10, "eps {eps}");
        }
    }

    #[test]
    fn single_mode_has_no_cross_residual() {
        let g = grid(1024);
        let kernel = exp_kernel(&g);
        let mut modes = scenario_modes();
        modes.modes.truncate(1);
        let amps = build_amplitudes(&modes, 0.25, &kernel, 1.0, Variant::Standard).unwrap();
        let r = residual_terms(&amps, &modes, &kernel, 0.125, 1.0, 0.25).unwrap();
        assert_eq!(r.YR.linf_norm(), 0.0);
        assert!(matches!(yr_bound_check(&r, &amps, &modes, &kernel, 0.125), Err(Error::TooFewModes(1))));
    }

    #[test]
    fn zero_kernel_leaves_only_dispersive_remainder() {
        let g = grid(1024);
        let kernel = Kernel::new(KernelFamily::Zero, &g);
        let modes = scenario_modes();
        let eps = 0.125;
        let amps = build_amplitudes(&modes, 0.25, &kernel, 1.0, Variant::Standard).unwrap();
        let r = residual_terms(&amps, &modes, &kernel, eps, 1.0, 0.25).unwrap();
        assert_eq!(r.Y.linf_norm(), 0.0);
        assert_eq!(r.YR.linf_norm(), 0.0);
        let expected = r.X2.scale(Complex64::new(eps * eps, 0.0));
        assert!(r.remainder.max_abs_diff(&expected).unwrap() < 1e-15);
        let check = yr_bound_check(&r, &amps, &modes, &kernel, eps).unwrap();
        assert_eq!(check.ratio, 0.0);
    }

    #[test]
    fn residual_norms_obey_algebra_estimates() {
        let eps = 1.0 / 32.0;
        let g = grid(8192);
        let kernel = exp_kernel(&g);
        let modes = scenario_modes();
        let amps = build_amplitudes(&modes, 0.25, &kernel, 1.0, Variant::Standard).unwrap();
        let r = residual_terms(&amps, &modes, &kernel, eps, 1.0, 0.25).unwrap();
        assert!(r.x2_wiener <= 0.5 * laplacian_cal_a_norm(&amps) + 1e-9);
        assert!(r.y_wiener <= kernel.wiener_bound() * cal_a_norm(&amps).powi(3) + 1e-9);
        let check = yr_bound_check(&r, &amps, &modes, &kernel, eps).unwrap();
        assert!(check.passed(), "{check:?}");
    }

    #[test]
    fn remainder_matches_direct_residual_of_u_app() {
        // R(u) = iε∂_t u + ε²/2 Δu − ε^α (K∗|u|²) u, with ∂_t of the slow
        // amplitudes by a fine central difference and everything else exact
        let eps = 1.0 / 8.0;
        let g = grid(2048);
        let kernel = exp_kernel(&g);
        let modes = scenario_modes();
        let t = 0.3;
        let dt = 2.5e-4;
        for (alpha, variant) in
            [(1.0, Variant::Standard), (2.0, Variant::Standard), (1.5, Variant::EpsilonModulated { epsilon: eps })]
        {
            let now = build_amplitudes(&modes, t, &kernel, alpha, variant).unwrap();
            let before = build_amplitudes(&modes, t - dt, &kernel, alpha, variant).unwrap();
            let after = build_amplitudes(&modes, t + dt, &kernel, alpha, variant).unwrap();
            let factors = phase_factors(&modes, &g, t, eps).unwrap();
            let u = assemble_u_app(&now, &modes, t, eps).unwrap();
            let mut time_part = Field::zeros(&g);
            for (j, factor) in factors.iter().enumerate() {
                let dadt = (&after.amplitudes[j] - &before.amplitudes[j]).scale(Complex64::new(1.0 / (2.0 * dt), 0.0));
                let k2: f64 = modes.modes[j].wavevector.iter().map(|k| k * k).sum();
                let term = dadt.scale(Complex64::new(0.0, eps)).axpy(Complex64::new(k2 / 2.0, 0.0), &now.amplitudes[j]);
                time_part = &time_part + &(&term * factor);
            }
            let nonlinear = &kernel.convolve(&u.abs_sqr()).unwrap() * &u;
            let direct = time_part
                .axpy(Complex64::new(eps * eps / 2.0, 0.0), &u.laplacian())
                .axpy(Complex64::new(-eps.powf(alpha), 0.0), &nonlinear);
            let r = residual_terms(&now, &modes, &kernel, eps, alpha, t).unwrap();
            let diff = direct.max_abs_diff(&r.remainder).unwrap();
            assert!(diff < 1e-6 * eps, "alpha {alpha}: {diff:e}");
        }
    }

    #[test]
    fn bound_constant_of_scenario_kernel() {
        // M = 2/(1+ξ²): sup|M| = 2, sup|ξ M| = 1 at ξ = 1 (on the lattice for L = 32π)
        let g = grid(1024);
        let kernel = exp_kernel(&g);
        assert!((kernel.wiener_bound() - 2.0).abs() < 1e-12);
        assert!((kernel_gradient_sup(&kernel) - 1.0).abs() < 1e-12);
        let c = bound_constant(&scenario_modes(), &kernel).unwrap();
        assert!((c - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sup_error_examples() {
        let g = grid(64);
        let u = Field::from_real_fn(&g, |x| x[0].sin());
        assert_eq!(sup_error(&u, &u).unwrap(), 0.0);
        let c = Complex64::new(0.3, -0.4);
        let v = u.map(|z| z + c);
        assert!((sup_error(&u, &v).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(sup_error(&u, &Field::zeros(&grid(32))), Err(Error::GridMismatch)));
    }

    #[test]
    fn randomized_suites_have_no_violations() {
        for report in wiener_suites(100, 2024).into_iter().chain([young_suite(100, 7)]) {
            assert_eq!(report.trials, 100);
            assert!(report.passed(), "{report:?}");
        }
    }
}
