//! Interaction kernels given by their Fourier multiplier `K̂(ξ)`.
//!
//! Under the transform convention of [`crate::spectral`], convolution acts on
//! spectral samples as multiplication by `(2π)^{d/2} K̂(ξ)`. That product is
//! what every Wiener-norm estimate in the crate uses as "the" kernel bound.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid, Representation};

/// A real, even multiplier supplied by the caller.
pub type CustomMultiplier = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelFamily {
    Zero,
    /// `K̂ ≡ c`; the delta-like kernel, bounded but without decay.
    Constant(f64),
    /// `K̂(ξ) = ±1/(λ² + |ξ|²)`.
    Yukawa3d {
        sign: f64,
        lambda: f64,
    },
    /// `K(x) = ±e^{-λ|x|}`, so `K̂(ξ) = ±(2/π)^{1/2} λ/(λ² + ξ²)`.
    Exponential1d {
        sign: f64,
        lambda: f64,
    },
    Custom(CustomMultiplier),
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Yukawa3d { sign, lambda } => write!(f, "Yukawa3d {{ sign: {sign}, lambda: {lambda} }}"),
            Self::Exponential1d { sign, lambda } => {
                write!(f, "Exponential1d {{ sign: {sign}, lambda: {lambda} }}")
            }
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl KernelFamily {
    pub fn custom(m: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(m))
    }

    /// `K̂(ξ)` under the `(2π)^{-d/2}` transform convention.
    pub fn multiplier_at(&self, xi: &[f64]) -> f64 {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Yukawa3d { sign, lambda } => sign / (lambda * lambda + r2),
            Self::Exponential1d { sign, lambda } => sign * FRAC_2_PI.sqrt() * lambda / (lambda * lambda + r2),
            Self::Custom(m) => m(xi),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

/// Free-function form of [`KernelFamily::multiplier_at`].
pub fn multiplier_at(family: &KernelFamily, xi: &[f64]) -> f64 {
    family.multiplier_at(xi)
}

/// A kernel family with its multiplier cached on a grid lattice.
#[derive(Clone, Debug)]
pub struct Kernel {
    family: KernelFamily,
    grid: Grid,
    khat: Vec<f64>,
    convolution: Vec<f64>,
}

impl Kernel {
    pub fn new(family: KernelFamily, grid: &Grid) -> Self {
        let khat = grid.sample_multiplier(|xi| family.multiplier_at(xi));
        let factor = convolution_factor(grid.dim());
        let convolution = khat.iter().map(|k| factor * k).collect();
        Self { family, grid: grid.clone(), khat, convolution }
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Cached `K̂` samples in lattice storage order.
    pub fn samples(&self) -> &[f64] {
        &self.khat
    }

    /// Cached convolution multiplier `(2π)^{d/2} K̂`.
    pub fn convolution_multiplier(&self) -> &[f64] {
        &self.convolution
    }

    pub fn is_zero(&self) -> bool {
        self.family.is_zero()
    }

    /// `sup |(2π)^{d/2} K̂|`, the constant in `‖K∗g‖_W ≤ C ‖g‖_W`.
    pub fn wiener_bound(&self) -> f64 {
        self.convolution.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `sup |ξ| |(2π)^{d/2} K̂|`, the constant controlling `∇K`.
    pub fn gradient_bound(&self) -> f64 {
        let d = self.grid.dim();
        self.convolution
            .iter()
            .enumerate()
            .map(|(i, v)| norm(&self.grid.frequency(i)[..d]) * v.abs())
            .fold(0.0, f64::max)
    }

    /// `K ∗ f`, returned in physical representation.
    pub fn convolve(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if self.convolution.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel multiplier".into()));
        }
        if self.is_zero() {
            return Ok(Field::zeros(&self.grid));
        }
        Ok(f.apply_real_multiplier(&self.convolution, Representation::Physical))
    }
}

/// `(2π)^{d/2}`: convolution `K∗f` multiplies `f̂` by this times `K̂`.
pub fn convolution_factor(dim: usize) -> f64 {
    (2.0 * PI).powf(dim as f64 / 2.0)
}

pub fn convolve(kernel: &Kernel, f: &Field) -> Result<Field> {
    kernel.convolve(f)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Lattice suprema of `|K̂|`, `(1+|ξ|)|K̂|` and `|ξ||K̂|`.
///
/// A quantity passes when its supremum is at most `bound` and it does not
/// grow towards the lattice edge: the supremum over the outer half of the
/// lattice (`|ξ| ≥ ξ_max/2`) may not exceed the supremum over the inner half.
/// A multiplier that is bounded on every finite lattice but grows without
/// bound, like `(1+|ξ|)c`, fails the second test on any grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub sup_khat: f64,
    pub sup_weighted: f64,
    pub sup_gradient: f64,
    pub bound: f64,
    /// `K̂ ∈ L∞`, needed for local existence.
    pub bounded: bool,
    /// `(1+|ξ|) K̂ ∈ L∞`.
    pub decay: bool,
    /// `|ξ| K̂ ∈ L∞`, the `∇K` hypothesis of the remainder bound.
    pub gradient: bool,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.bounded && self.decay && self.gradient
    }
}

pub fn verify_kernel_hypothesis(kernel: &Kernel, bound: f64) -> Result<HypothesisReport> {
    if kernel.khat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel multiplier sample".into()));
    }
    let grid = &kernel.grid;
    let d = grid.dim();
    let radii: Vec<f64> = (0..grid.len()).map(|i| norm(&grid.frequency(i)[..d])).collect();
    let edge = radii.iter().cloned().fold(0.0, f64::max);

    let check = |weight: &dyn Fn(f64) -> f64| {
        let (mut inner, mut outer) = (0.0f64, 0.0f64);
        for (r, k) in radii.iter().zip(&kernel.khat) {
            let v = weight(*r) * k.abs();
            if *r < edge / 2.0 {
                inner = inner.max(v);
            } else {
                outer = outer.max(v);
            }
        }
        let sup = inner.max(outer);
        let ok = sup <= bound && outer <= inner * (1.0 + 1e-12);
        (sup, ok)
    };
    let (sup_khat, bounded) = check(&|_| 1.0);
    let (sup_weighted, decay) = check(&|r| 1.0 + r);
    let (sup_gradient, gradient) = check(&|r| r);
    Ok(HypothesisReport { sup_khat, sup_weighted, sup_gradient, bound, bounded, decay, gradient })
}
