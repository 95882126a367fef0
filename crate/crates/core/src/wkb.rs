//! The multiphase WKB approximation
//!
//! ```text
//! u_app(t,x) = Σ_j A_j(t,x) e^{i(k_j·x − t|k_j|²/2)/ε},   A_j = a_j(x − t k_j) e^{i S_j(t,x)}
//! ```
//!
//! The fast phases `φ_j = k_j·x − t|k_j|²/2` solve the eikonal equation
//! exactly, so no caustics form. The amplitudes are transported along the
//! group velocity `k_j` and, in the critical scaling `α = 1`, pick up the
//! slow self-modulation phase
//!
//! ```text
//! S_j(t,·) = −∫_0^t K ∗ Σ_ℓ |a_ℓ(· + (τ − t) k_j − τ k_ℓ)|² dτ.
//! ```
//!
//! The phase integral is evaluated by composite Simpson quadrature whose
//! τ-slices are assembled in frequency space: each `K∗|a_ℓ|²` is transformed
//! once and every translation is a phase multiplier.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::spectral::{Field, Grid, Representation, MAX_DIM};

/// Lattice-compatibility tolerance, in units of the reciprocal spacing.
pub const LATTICE_TOL: f64 = 1e-9;

/// Initial amplitude profile `a_j`.
#[derive(Debug, Clone)]
pub enum Profile {
    /// `w e^{−|x−c|²/(2σ²)}`, periodized over the neighbouring boxes.
    Gaussian { center: Vec<f64>, width: f64, weight: Complex64 },
    /// Samples on a fixed grid; only usable on that grid.
    Samples(Field),
}

impl Profile {
    pub fn gaussian(center: Vec<f64>, width: f64, weight: Complex64) -> Self {
        Self::Gaussian { center, width, weight }
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        match self {
            Self::Gaussian { center, width, weight } => {
                if center.len() != grid.dim() {
                    return Err(Error::Config(format!(
                        "profile center has {} components on a {}-d grid",
                        center.len(),
                        grid.dim()
                    )));
                }
                let l = grid.length();
                let s2 = 2.0 * width * width;
                let axis =
                    |x: f64, c: f64| -> f64 { (-1..=1).map(|n| (-(x - c + n as f64 * l).powi(2) / s2).exp()).sum() };
                Ok(Field::from_fn(grid, |x| {
                    let g: f64 = x.iter().zip(center).map(|(&xa, &ca)| axis(xa, ca)).product();
                    weight * g
                }))
            }
            Self::Samples(f) => {
                if f.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                Ok(f.to_physical())
            }
        }
    }

    /// Spread of `|â|` around its mean frequency: `1/σ` for a Gaussian,
    /// the `|â|`-weighted RMS radius for sampled data.
    pub fn spectral_width(&self) -> f64 {
        match self {
            Self::Gaussian { width, .. } => 1.0 / width,
            Self::Samples(f) => {
                let spec = f.to_spectral();
                let grid = f.grid();
                let d = grid.dim();
                let (mut num, mut den) = (0.0, 0.0);
                for (i, c) in spec.samples().iter().enumerate() {
                    let r2: f64 = grid.frequency(i)[..d].iter().map(|v| v * v).sum();
                    num += r2 * c.norm();
                    den += c.norm();
                }
                if den > 0.0 {
                    (num / den).sqrt()
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub wavevector: Vec<f64>,
    pub profile: Profile,
}

/// A finite family of modulated plane waves `Σ_j a_j(x) e^{i k_j·x/ε}`.
#[derive(Debug, Clone)]
pub struct ModeSpec {
    pub modes: Vec<Mode>,
}

impl ModeSpec {
    pub fn new(modes: Vec<Mode>) -> Self {
        Self { modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn wavevectors(&self) -> impl Iterator<Item = &[f64]> {
        self.modes.iter().map(|m| m.wavevector.as_slice())
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.wavevectors().map(norm).fold(0.0, f64::max)
    }

    pub fn profiles(&self, grid: &Grid) -> Result<Vec<Field>> {
        self.modes.iter().map(|m| m.profile.sample(grid)).collect()
    }

    /// Integer lattice coordinates of `k_j/ε`, or an error naming the first
    /// incompatible mode.
    pub fn lattice_indices(&self, grid: &Grid, epsilon: f64) -> Result<Vec<[i64; MAX_DIM]>> {
        self.modes
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let scaled: Vec<f64> = m.wavevector.iter().map(|k| k / epsilon).collect();
                grid.lattice_coordinates(&scaled, LATTICE_TOL).ok_or(Error::LatticeIncompatible { mode: j, epsilon })
            })
            .collect()
    }
}

/// `Λ_{ℓm} = (k_ℓ − k_m)/|k_ℓ − k_m|²` for one ordered pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairGap {
    pub first: usize,
    pub second: usize,
    pub gap: f64,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub min_gap: f64,
    /// `|Λ|_∞ = sup |Λ_{ℓm}| = 1 / min gap`; zero for a single mode.
    pub lambda_inf: f64,
    pub pairs: Vec<PairGap>,
}

pub fn check_min_gap(modes: &ModeSpec) -> Result<GapReport> {
    if modes.is_empty() {
        return Err(Error::NoModes);
    }
    let mut pairs = Vec::new();
    let mut min_gap = f64::INFINITY;
    for (l, kl) in modes.wavevectors().enumerate() {
        for (m, km) in modes.wavevectors().enumerate() {
            if l == m {
                continue;
            }
            let diff: Vec<f64> = kl.iter().zip(km).map(|(a, b)| a - b).collect();
            let gap = norm(&diff);
            if gap == 0.0 {
                return Err(Error::DuplicateWavevector { first: l.min(m), second: l.max(m) });
            }
            min_gap = min_gap.min(gap);
            let lambda = diff.iter().map(|v| v / (gap * gap)).collect();
            pairs.push(PairGap { first: l, second: m, gap, lambda });
        }
    }
    let lambda_inf = if pairs.is_empty() { 0.0 } else { 1.0 / min_gap };
    Ok(GapReport { min_gap, lambda_inf, pairs })
}

/// `Σ_j a_j(x) e^{i k_j·x/ε}` on the grid.
pub fn build_initial_data(modes: &ModeSpec, epsilon: f64, grid: &Grid) -> Result<Field> {
    let indices = modes.lattice_indices(grid, epsilon)?;
    let mut u = Field::zeros(grid);
    for (profile, m) in modes.profiles(grid)?.iter().zip(&indices) {
        let wave = grid.plane_wave(&m[..grid.dim()]);
        u = &u + &(profile * &wave);
    }
    Ok(u)
}

/// How the slow phase enters the amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    /// `A_j = a_j(x − tk_j) e^{iS_j}` at `α = 1`, no phase for `α > 1`.
    Standard,
    /// `A_j = a_j(x − tk_j) e^{iε^{α−1} S_j}` for every `α ≥ 1`.
    EpsilonModulated { epsilon: f64 },
}

/// `α = 1`, up to parsing noise.
pub fn is_critical(alpha: f64) -> bool {
    (alpha - 1.0).abs() < 1e-12
}

impl Variant {
    /// Factor multiplying `S_j` in the amplitude phase.
    pub fn phase_scale(&self, alpha: f64) -> f64 {
        match self {
            Self::Standard if is_critical(alpha) => 1.0,
            Self::Standard => 0.0,
            Self::EpsilonModulated { epsilon } => epsilon.powf(alpha - 1.0),
        }
    }
}

/// Composite Simpson control for the phase integral.
#[derive(Debug, Clone, Copy)]
pub struct PhaseQuadrature {
    pub initial_nodes: usize,
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for PhaseQuadrature {
    fn default() -> Self {
        Self { initial_nodes: 9, tol: 1e-9, max_doublings: 12 }
    }
}

/// Converged phases and the node count that was accepted.
#[derive(Debug, Clone)]
pub struct PhaseSolution {
    pub phases: Vec<Field>,
    pub nodes: usize,
}

/// Spectral samples of `K∗|a_ℓ|²` for every mode.
fn smoothed_densities(profiles: &[Field], kernel: &Kernel) -> Result<Vec<Field>> {
    profiles.iter().map(|a| Ok(kernel.convolve(&a.abs_sqr())?.to_spectral())).collect()
}

/// `Σ_ℓ w_ℓ(τ) (K∗|a_ℓ|²)(· − (t−τ)k_j − τk_ℓ)` in spectral form, accumulated
/// with weight `w` into `acc`.
fn accumulate_slice(
    acc: &mut [Complex64],
    densities: &[Field],
    modes: &ModeSpec,
    j: usize,
    t: f64,
    tau: f64,
    weight: f64,
) {
    let grid = densities[0].grid();
    let d = grid.dim();
    let kj = &modes.modes[j].wavevector;
    for (density, mode) in densities.iter().zip(&modes.modes) {
        let shift: Vec<f64> = kj.iter().zip(&mode.wavevector).map(|(a, b)| (t - tau) * a + tau * b).collect();
        for (i, (slot, c)) in acc.iter_mut().zip(density.samples()).enumerate() {
            let xi = grid.frequency(i);
            let phase: f64 = xi[..d].iter().zip(&shift).map(|(x, s)| x * s).sum();
            *slot += weight * c * Complex64::from_polar(1.0, -phase);
        }
    }
}

fn simpson_phases(densities: &[Field], modes: &ModeSpec, t: f64, intervals: usize) -> Vec<Field> {
    let grid = densities[0].grid().clone();
    let h = t / intervals as f64;
    (0..modes.len())
        .map(|j| {
            let mut acc = vec![Complex64::default(); grid.len()];
            for i in 0..=intervals {
                let w = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                accumulate_slice(&mut acc, densities, modes, j, t, i as f64 * h, -w * h / 3.0);
            }
            Field::new(grid.clone(), acc, Representation::Spectral).expect("grid sized").to_physical().real_part()
        })
        .collect()
}

/// Midpoint rule with `intervals` cells; used as an independent check.
pub fn midpoint_phases(modes: &ModeSpec, t: f64, kernel: &Kernel, intervals: usize) -> Result<Vec<Field>> {
    let profiles = modes.profiles(kernel.grid())?;
    let densities = smoothed_densities(&profiles, kernel)?;
    let grid = kernel.grid().clone();
    let h = t / intervals as f64;
    Ok((0..modes.len())
        .map(|j| {
            let mut acc = vec![Complex64::default(); grid.len()];
            for i in 0..intervals {
                accumulate_slice(&mut acc, &densities, modes, j, t, (i as f64 + 0.5) * h, -h);
            }
            Field::new(grid.clone(), acc, Representation::Spectral).expect("grid sized").to_physical().real_part()
        })
        .collect())
}

/// Slow phases `S_j(t,·)`, one real field per mode, with the default
/// convergence tolerance.
pub fn compute_phase_s(modes: &ModeSpec, t: f64, kernel: &Kernel, quadrature_nodes: usize) -> Result<Vec<Field>> {
    let quad = PhaseQuadrature { initial_nodes: quadrature_nodes, ..Default::default() };
    Ok(compute_phase_s_with(modes, t, kernel, &quad)?.phases)
}

/// Composite Simpson in `τ`, doubling the node count until successive
/// results differ by less than `quad.tol` in the max norm.
pub fn compute_phase_s_with(
    modes: &ModeSpec,
    t: f64,
    kernel: &Kernel,
    quad: &PhaseQuadrature,
) -> Result<PhaseSolution> {
    if quad.initial_nodes < 2 {
        return Err(Error::Config("phase quadrature needs at least 2 nodes".into()));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("phase time".into()));
    }
    let grid = kernel.grid();
    if t == 0.0 || kernel.is_zero() {
        return Ok(PhaseSolution { phases: vec![Field::zeros(grid); modes.len()], nodes: 0 });
    }
    let profiles = modes.profiles(grid)?;
    let densities = smoothed_densities(&profiles, kernel)?;
    let mut intervals = (quad.initial_nodes - 1).max(2);
    intervals += intervals % 2;
    let mut previous = simpson_phases(&densities, modes, t, intervals);
    let mut change = f64::INFINITY;
    for _ in 0..quad.max_doublings {
        intervals *= 2;
        let current = simpson_phases(&densities, modes, t, intervals);
        change = current.iter().zip(&previous).map(|(a, b)| a.max_abs_diff(b).expect("same grid")).fold(0.0, f64::max);
        if change < quad.tol {
            return Ok(PhaseSolution { phases: current, nodes: intervals + 1 });
        }
        previous = current;
    }
    Err(Error::QuadratureDiverged { doublings: quad.max_doublings, change })
}

/// Transported amplitudes at one time.
#[derive(Debug, Clone)]
pub struct AmplitudeSet {
    pub time: f64,
    pub variant: Variant,
    pub alpha: f64,
    /// `a_j(x − t k_j)`.
    pub envelopes: Vec<Field>,
    /// Unscaled slow phases `S_j(t,·)`.
    pub phases: Vec<Field>,
    /// Factor applied to `S_j` inside the exponential.
    pub phase_scale: f64,
    /// `A_j(t,·)`.
    pub amplitudes: Vec<Field>,
}

impl AmplitudeSet {
    pub fn grid(&self) -> &Grid {
        self.amplitudes[0].grid()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    fn scaled_phase(&self, j: usize) -> Field {
        self.phases[j].scale(Complex64::new(self.phase_scale, 0.0))
    }

    /// `∇A_j` per mode and axis, by the product rule on the envelope and the
    /// slow phase.
    pub fn gradients(&self) -> Vec<Vec<Field>> {
        (0..self.len())
            .map(|j| {
                let s = self.scaled_phase(j);
                let grad_env = self.envelopes[j].gradient();
                let grad_s = s.gradient();
                let rotation = s.map(|v| Complex64::from_polar(1.0, v.re));
                grad_env
                    .iter()
                    .zip(&grad_s)
                    .map(|(ge, gs)| {
                        let inner = ge.axpy(Complex64::i(), &(&self.envelopes[j] * gs));
                        &inner * &rotation
                    })
                    .collect()
            })
            .collect()
    }

    /// `ΔA_j` per mode:
    /// `(Δa + 2i∇a·∇S + i a ΔS − a|∇S|²) e^{iS}` with `S` the scaled phase.
    pub fn laplacians(&self) -> Vec<Field> {
        (0..self.len())
            .map(|j| {
                let env = &self.envelopes[j];
                let s = self.scaled_phase(j);
                let grad_env = env.gradient();
                let grad_s = s.gradient();
                let lap_s = s.laplacian();
                let mut inner = env.laplacian();
                let mut grad_s_sq = Field::zeros(env.grid());
                for (ge, gs) in grad_env.iter().zip(&grad_s) {
                    inner = inner.axpy(Complex64::new(0.0, 2.0), &(ge * gs));
                    grad_s_sq = &grad_s_sq + &(gs * gs);
                }
                inner = inner.axpy(Complex64::i(), &(env * &lap_s));
                inner = inner.axpy(Complex64::new(-1.0, 0.0), &(env * &grad_s_sq));
                let rotation = s.map(|v| Complex64::from_polar(1.0, v.re));
                &inner * &rotation
            })
            .collect()
    }
}

/// Builds `A_j(t,·)` with the default phase quadrature.
pub fn build_amplitudes(
    modes: &ModeSpec,
    t: f64,
    kernel: &Kernel,
    alpha: f64,
    variant: Variant,
) -> Result<AmplitudeSet> {
    build_amplitudes_with(modes, t, kernel, alpha, variant, &PhaseQuadrature::default())
}

pub fn build_amplitudes_with(
    modes: &ModeSpec,
    t: f64,
    kernel: &Kernel,
    alpha: f64,
    variant: Variant,
    quad: &PhaseQuadrature,
) -> Result<AmplitudeSet> {
    if modes.is_empty() {
        return Err(Error::NoModes);
    }
    let grid = kernel.grid();
    let profiles = modes.profiles(grid)?;
    let envelopes = profiles
        .iter()
        .zip(&modes.modes)
        .map(|(a, m)| {
            let shift: Vec<f64> = m.wavevector.iter().map(|k| t * k).collect();
            a.translate(&shift)
        })
        .collect::<Result<Vec<_>>>()?;
    let phase_scale = variant.phase_scale(alpha);
    let phases = if phase_scale == 0.0 {
        vec![Field::zeros(grid); modes.len()]
    } else {
        compute_phase_s_with(modes, t, kernel, quad)?.phases
    };
    let amplitudes = envelopes
        .iter()
        .zip(&phases)
        .map(|(env, s)| {
            if t == 0.0 {
                env.clone()
            } else {
                env.zip_map(s, |a, p| a * Complex64::from_polar(1.0, phase_scale * p.re))
            }
        })
        .collect();
    Ok(AmplitudeSet { time: t, variant, alpha, envelopes, phases, phase_scale, amplitudes })
}

/// Fast phase factors `e^{iφ_j(t,x)/ε}`, built from exact lattice plane waves.
pub fn phase_factors(modes: &ModeSpec, grid: &Grid, t: f64, epsilon: f64) -> Result<Vec<Field>> {
    let indices = modes.lattice_indices(grid, epsilon)?;
    Ok(modes
        .modes
        .iter()
        .zip(&indices)
        .map(|(mode, m)| {
            let k2: f64 = mode.wavevector.iter().map(|k| k * k).sum();
            let temporal = Complex64::from_polar(1.0, -t * k2 / (2.0 * epsilon));
            let wave = grid.plane_wave(&m[..grid.dim()]);
            if t == 0.0 {
                wave
            } else {
                wave.scale(temporal)
            }
        })
        .collect())
}

/// `u_app(t,·) = Σ_j A_j e^{i(k_j·x − t|k_j|²/2)/ε}`.
pub fn assemble_u_app(amplitudes: &AmplitudeSet, modes: &ModeSpec, t: f64, epsilon: f64) -> Result<Field> {
    let grid = amplitudes.grid();
    let factors = phase_factors(modes, grid, t, epsilon)?;
    let mut u = Field::zeros(grid);
    for (a, w) in amplitudes.amplitudes.iter().zip(&factors) {
        u = &u + &(a * w);
    }
    Ok(u)
}

/// `V_eff(A) = K ∗ Σ_ℓ |A_ℓ|²`.
pub fn effective_potential(amplitudes: &AmplitudeSet, kernel: &Kernel) -> Result<Field> {
    let grid = kernel.grid();
    let mut density = Field::zeros(grid);
    for a in &amplitudes.amplitudes {
        if a.grid() != grid {
            return Err(Error::GridMismatch);
        }
        density = &density + &a.abs_sqr();
    }
    kernel.convolve(&density)
}

/// Max-norm residual of `∂_t A_j + k_j·∇A_j + i c V_eff(A) A_j` per mode,
/// with `∂_t` by central difference over `t ± dt`, `∇` spectral, and `c` the
/// coupling implied by `α` and the variant.
pub fn transport_residual(
    modes: &ModeSpec,
    kernel: &Kernel,
    alpha: f64,
    variant: Variant,
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let now = build_amplitudes(modes, t, kernel, alpha, variant)?;
    let before = build_amplitudes(modes, t - dt, kernel, alpha, variant)?;
    let after = build_amplitudes(modes, t + dt, kernel, alpha, variant)?;
    let coupling = variant.phase_scale(alpha);
    let potential = effective_potential(&now, kernel)?;
    let inv = Complex64::new(1.0 / (2.0 * dt), 0.0);
    Ok((0..modes.len())
        .map(|j| {
            let a = &now.amplitudes[j];
            let mut r = (&after.amplitudes[j] - &before.amplitudes[j]).scale(inv);
            for (axis, g) in a.gradient().iter().enumerate() {
                r = r.axpy(Complex64::new(modes.modes[j].wavevector[axis], 0.0), g);
            }
            if coupling != 0.0 {
                r = r.axpy(Complex64::new(0.0, coupling), &(&potential * a));
            }
            r.linf_norm()
        })
        .collect())
}

/// Minimal grid resolution for the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPolicy {
    /// Safety factor on the required band edge.
    pub safety: f64,
    /// Multiples of the widest amplitude spectral width added to `max|k|/ε`.
    pub spectral_widths: f64,
    pub max_points: usize,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        Self { safety: 2.0, spectral_widths: 8.0, max_points: 32768 }
    }
}

impl ResolutionPolicy {
    /// Smallest power of two `N` whose Nyquist frequency `πN/L` is at least
    /// `safety · (max|k_j|/ε + spectral_widths · max_j width(â_j))`.
    pub fn points_for(&self, modes: &ModeSpec, epsilon: f64, length: f64) -> Result<usize> {
        let width = modes.modes.iter().map(|m| m.profile.spectral_width()).fold(0.0, f64::max);
        let band = self.safety * (modes.max_wavenumber() / epsilon + self.spectral_widths * width);
        let needed = (band * length / PI).ceil().max(2.0) as usize;
        let n = needed.next_power_of_two();
        if n > self.max_points {
            return Err(Error::Config(format!(
                "resolution rule asks for {n} points at epsilon {epsilon:e}, above the cap {}",
                self.max_points
            )));
        }
        Ok(n)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
