//! Periodic grids, sampled fields and Fourier multipliers.
//!
//! The whole space is replaced by the torus `[-L/2, L/2)^d` sampled with `N`
//! points per axis. Spectral samples approximate the continuous transform
//!
//! ```text
//! f̂(ξ) = (2π)^{-d/2} ∫ f(x) e^{-i x·ξ} dx
//! ```
//!
//! by the Riemann sum with weight `h^d (2π)^{-d/2}`, `h = L/N`, evaluated on the
//! reciprocal lattice `ξ_m = (2π/L) m`, `m ∈ {-N/2, …, N/2-1}^d`. The sample
//! nodes start at `-L/2`, so the raw FFT output picks up the factor
//! `e^{i L ξ_m / 2} = (-1)^m` per axis. Every other normalization in the crate
//! (convolution, Wiener norm, Parseval) is derived from this one definition:
//!
//! * inverse: `f(x_n) = (2π)^{d/2} L^{-d} Σ_m f̂_m e^{i x_n·ξ_m}`
//! * Fourier-series coefficients: `c_m = (2π)^{d/2} L^{-d} f̂_m`, so `f = Σ c_m e^{i x·ξ_m}`
//! * Parseval: `h^d Σ_n |f(x_n)|² = (2π/L)^d Σ_m |f̂_m|²`

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial dimension, 1 to 3.
    pub dim: usize,
    /// Samples per axis, a power of two.
    pub points: usize,
    /// Box length per axis; the box is `[-L/2, L/2)` along every axis.
    pub length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64) -> Self {
        Self { dim, points, length }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!("dimension {} not in 1..=3", self.dim)));
        }
        if self.points < 2 || !self.points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("{} points is not a power of two", self.points)));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {} must be positive", self.length)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

struct GridInner {
    spec: GridSpec,
    total: usize,
    nodes: Vec<f64>,
    /// Frequencies in FFT storage order.
    freqs: Vec<f64>,
    /// `e^{2πi r/N}` for `r = 0..N`, used for exact lattice plane waves.
    twiddles: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// A validated grid with its node set, frequency lattice and FFT plans.
///
/// Cloning is cheap; clones share the precomputed tables.
#[derive(Clone)]
pub struct Grid(Arc<GridInner>);

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Grid").field(&self.0.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.points;
        let h = spec.length / n as f64;
        let nodes = (0..n).map(|i| -spec.length / 2.0 + i as f64 * h).collect();
        let dk = 2.0 * PI / spec.length;
        let freqs = (0..n).map(|i| signed_index(i, n) as f64 * dk).collect();
        let twiddles = (0..n).map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64)).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self(Arc::new(GridInner { spec, total: n.pow(spec.dim as u32), nodes, freqs, twiddles, forward, inverse })))
    }

    pub fn spec(&self) -> GridSpec {
        self.0.spec
    }

    pub fn dim(&self) -> usize {
        self.0.spec.dim
    }

    pub fn points(&self) -> usize {
        self.0.spec.points
    }

    pub fn length(&self) -> f64 {
        self.0.spec.length
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.0.total
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.length() / self.points() as f64
    }

    /// Reciprocal lattice spacing `2π/L`.
    pub fn frequency_spacing(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Largest representable frequency magnitude per axis, `πN/L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points() as f64 / self.length()
    }

    /// One-dimensional node coordinates, shared by every axis.
    pub fn axis_nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    /// One-dimensional frequencies in FFT storage order.
    pub fn axis_frequencies(&self) -> &[f64] {
        &self.0.freqs
    }

    /// Per-axis indices of a flat (row-major, last axis fastest) index.
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let n = self.points();
        let mut idx = [0; MAX_DIM];
        let mut rest = flat;
        for a in (0..self.dim()).rev() {
            idx[a] = rest % n;
            rest /= n;
        }
        idx
    }

    pub fn node(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            x[a] = self.0.nodes[idx[a]];
        }
        x
    }

    pub fn frequency(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut xi = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            xi[a] = self.0.freqs[idx[a]];
        }
        xi
    }

    /// Samples `m(ξ)` over the lattice in storage order.
    pub fn sample_multiplier<T>(&self, m: impl Fn(&[f64]) -> T) -> Vec<T> {
        let d = self.dim();
        (0..self.len()).map(|i| m(&self.frequency(i)[..d])).collect()
    }

    /// Converts a physical wavevector into integer lattice coordinates, if it
    /// lies on the reciprocal lattice within `tol` (in lattice units).
    pub fn lattice_coordinates(&self, k: &[f64], tol: f64) -> Option<[i64; MAX_DIM]> {
        if k.len() != self.dim() {
            return None;
        }
        let mut m = [0i64; MAX_DIM];
        for (a, &ka) in k.iter().enumerate() {
            let units = ka / self.frequency_spacing();
            let rounded = units.round();
            if !units.is_finite() || (units - rounded).abs() > tol {
                return None;
            }
            m[a] = rounded as i64;
        }
        Some(m)
    }

    /// Samples of `e^{i ξ_m·x}` for the lattice frequency with integer
    /// coordinates `m`, computed from the exact phase `-πm + 2π m n / N`.
    pub fn plane_wave(&self, m: &[i64]) -> Field {
        let n = self.points() as i64;
        let mut data = Vec::with_capacity(self.len());
        for flat in 0..self.len() {
            let idx = self.multi_index(flat);
            let mut value = Complex64::new(1.0, 0.0);
            for a in 0..self.dim() {
                let r = (m[a] * idx[a] as i64).rem_euclid(n) as usize;
                let mut factor = self.0.twiddles[r];
                if m[a].rem_euclid(2) == 1 {
                    factor = -factor;
                }
                value *= factor;
            }
            data.push(value);
        }
        Field::from_parts(self.clone(), data, Representation::Physical)
    }

    /// Factor converting spectral samples `f̂_m` into Fourier-series
    /// coefficients `c_m`: `(2π)^{d/2} / L^d`.
    pub fn coefficient_weight(&self) -> f64 {
        let d = self.dim() as i32;
        (2.0 * PI).powf(d as f64 / 2.0) / self.length().powi(d)
    }

    fn fft_all_axes(&self, data: &mut [Complex64], direction: Direction) {
        let n = self.points();
        let fft = match direction {
            Direction::Forward => &self.0.forward,
            Direction::Inverse => &self.0.inverse,
        };
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim().saturating_sub(1) {
            let stride = n.pow((self.dim() - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        data[start + j * stride] = *value;
                    }
                }
            }
        }
    }

    /// Product of `(-1)^{m_a}` over axes for a storage index.
    fn parity_sign(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let odd = idx[..self.dim()].iter().map(|&i| i & 1).sum::<usize>() & 1;
        if odd == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Builds a grid from its spec.
pub fn make_grid(spec: GridSpec) -> Result<Grid> {
    Grid::new(spec)
}

/// Complex samples on a grid, tagged with their representation.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    data: Vec<Complex64>,
    repr: Representation,
}

impl Field {
    pub fn new(grid: Grid, data: Vec<Complex64>, repr: Representation) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} samples for a grid of {} points", data.len(), grid.len())));
        }
        Ok(Self::from_parts(grid, data, repr))
    }

    pub(crate) fn from_parts(grid: Grid, data: Vec<Complex64>, repr: Representation) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data, repr }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_parts(grid.clone(), vec![Complex64::default(); grid.len()], Representation::Physical)
    }

    /// Samples a function of position on the grid nodes.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let d = grid.dim();
        let data = (0..grid.len()).map(|i| f(&grid.node(i)[..d])).collect();
        Self::from_parts(grid.clone(), data, Representation::Physical)
    }

    pub fn from_real_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.data
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    /// Forward (physical → spectral) or inverse transform. The field must be
    /// in the representation the direction starts from.
    pub fn transform(&self, direction: Direction) -> Result<Field> {
        let expected = match direction {
            Direction::Forward => Representation::Physical,
            Direction::Inverse => Representation::Spectral,
        };
        if self.repr != expected {
            return Err(Error::Representation { expected, found: self.repr });
        }
        let grid = &self.grid;
        let mut data = self.data.clone();
        match direction {
            Direction::Forward => {
                grid.fft_all_axes(&mut data, Direction::Forward);
                let d = grid.dim() as i32;
                let scale = grid.spacing().powi(d) / (2.0 * PI).powf(d as f64 / 2.0);
                for (i, v) in data.iter_mut().enumerate() {
                    *v *= scale * grid.parity_sign(i);
                }
                Ok(Self::from_parts(grid.clone(), data, Representation::Spectral))
            }
            Direction::Inverse => {
                let weight = grid.coefficient_weight();
                for (i, v) in data.iter_mut().enumerate() {
                    *v *= weight * grid.parity_sign(i);
                }
                grid.fft_all_axes(&mut data, Direction::Inverse);
                Ok(Self::from_parts(grid.clone(), data, Representation::Physical))
            }
        }
    }

    pub fn to_spectral(&self) -> Field {
        match self.repr {
            Representation::Spectral => self.clone(),
            Representation::Physical => self.transform(Direction::Forward).expect("tag checked"),
        }
    }

    pub fn to_physical(&self) -> Field {
        match self.repr {
            Representation::Physical => self.clone(),
            Representation::Spectral => self.transform(Direction::Inverse).expect("tag checked"),
        }
    }

    pub fn into_representation(self, repr: Representation) -> Field {
        if self.repr == repr {
            self
        } else {
            match repr {
                Representation::Physical => self.to_physical(),
                Representation::Spectral => self.to_spectral(),
            }
        }
    }

    /// Multiplies spectral samples pointwise by `m(ξ)` and returns the result
    /// in `out`. Fails if `m` is not finite at some lattice point.
    pub fn apply_multiplier(&self, m: impl Fn(&[f64]) -> Complex64, out: Representation) -> Result<Field> {
        let samples = self.grid.sample_multiplier(m);
        self.apply_multiplier_samples(&samples, out)
    }

    /// Same as [`Field::apply_multiplier`] with precomputed lattice samples.
    pub fn apply_multiplier_samples(&self, m: &[Complex64], out: Representation) -> Result<Field> {
        if m.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        if m.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("Fourier multiplier".into()));
        }
        let mut spec = self.to_spectral();
        for (v, f) in spec.data.iter_mut().zip(m) {
            *v *= f;
        }
        Ok(spec.into_representation(out))
    }

    pub(crate) fn apply_real_multiplier(&self, m: &[f64], out: Representation) -> Field {
        debug_assert_eq!(m.len(), self.grid.len());
        let mut spec = self.to_spectral();
        for (v, f) in spec.data.iter_mut().zip(m) {
            *v *= *f;
        }
        spec.into_representation(out)
    }

    /// Samples of `x ↦ f(x - v)` by the phase multiplier `e^{-iξ·v}`. Exact
    /// for band-limited data; the zero shift returns the field unchanged.
    pub fn translate(&self, v: &[f64]) -> Result<Field> {
        if v.len() != self.grid.dim() {
            return Err(Error::InvalidGrid(format!("shift of length {} on a {}-d grid", v.len(), self.grid.dim())));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("translation vector".into()));
        }
        if v.iter().all(|&c| c == 0.0) {
            return Ok(self.clone());
        }
        let out = self.repr;
        let mut spec = self.to_spectral();
        let d = self.grid.dim();
        for (i, c) in spec.data.iter_mut().enumerate() {
            let xi = self.grid.frequency(i);
            let phase: f64 = xi[..d].iter().zip(v).map(|(a, b)| a * b).sum();
            *c *= Complex64::from_polar(1.0, -phase);
        }
        Ok(spec.into_representation(out))
    }

    /// Spectral partial derivative along `axis`, physical output.
    pub fn derivative(&self, axis: usize) -> Field {
        assert!(axis < self.grid.dim(), "axis {axis} out of range");
        let mut spec = self.to_spectral();
        for (i, c) in spec.data.iter_mut().enumerate() {
            let xi = self.grid.frequency(i)[axis];
            *c *= Complex64::new(0.0, xi);
        }
        spec.to_physical()
    }

    /// Spectral gradient, one physical field per axis.
    pub fn gradient(&self) -> Vec<Field> {
        let spec = self.to_spectral();
        (0..self.grid.dim()).map(|a| spec.derivative(a)).collect()
    }

    /// Spectral Laplacian, physical output.
    pub fn laplacian(&self) -> Field {
        let mut spec = self.to_spectral();
        for (i, c) in spec.data.iter_mut().enumerate() {
            let xi = self.grid.frequency(i);
            let r2: f64 = xi.iter().map(|a| a * a).sum();
            *c *= -r2;
        }
        spec.to_physical()
    }

    /// `‖f‖_{L²}` on the torus (Riemann sum in physical space).
    pub fn l2_norm(&self) -> f64 {
        let phys = self.to_physical();
        let sum: f64 = phys.data.iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.spacing().powi(self.grid.dim() as i32)).sqrt()
    }

    /// `‖f̂‖_{L²}` over the lattice, equal to [`Field::l2_norm`] by Parseval.
    pub fn spectral_l2_norm(&self) -> f64 {
        let spec = self.to_spectral();
        let sum: f64 = spec.data.iter().map(|v| v.norm_sqr()).sum();
        (sum * self.grid.frequency_spacing().powi(self.grid.dim() as i32)).sqrt()
    }

    /// Maximum modulus over the nodes.
    pub fn linf_norm(&self) -> f64 {
        self.to_physical().data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Maximum of `|f - g|` over the nodes.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let a = self.to_physical();
        let b = other.to_physical();
        Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }

    /// Largest imaginary part in modulus, in physical space.
    pub fn max_imag(&self) -> f64 {
        self.to_physical().data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Pointwise map in physical space.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        let phys = self.to_physical();
        let data = phys.data.iter().map(|&v| f(v)).collect();
        Self::from_parts(self.grid.clone(), data, Representation::Physical)
    }

    /// Pointwise combination in physical space. Panics on grid mismatch.
    pub fn zip_map(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        assert!(self.grid == other.grid, "pointwise operation on different grids");
        let a = self.to_physical();
        let b = other.to_physical();
        let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect();
        Self::from_parts(self.grid.clone(), data, Representation::Physical)
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    /// `|f|²` as a (real) physical field.
    pub fn abs_sqr(&self) -> Field {
        self.map(|v| Complex64::new(v.norm_sqr(), 0.0))
    }

    /// Drops the imaginary part.
    pub fn real_part(&self) -> Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Field {
        let data = self.data.iter().map(|v| v * c).collect();
        Self::from_parts(self.grid.clone(), data, self.repr)
    }

    /// `self + c * other`, in the representation of `self`.
    pub fn axpy(&self, c: Complex64, other: &Field) -> Field {
        assert!(self.grid == other.grid, "pointwise operation on different grids");
        let other = other.clone().into_representation(self.repr);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect();
        Self::from_parts(self.grid.clone(), data, self.repr)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.axpy(Complex64::new(1.0, 0.0), rhs)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.axpy(Complex64::new(-1.0, 0.0), rhs)
    }
}

/// Pointwise product in physical space.
impl Mul for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}
