//! Uniform periodic grid on the torus `[-π, π)`, Fourier transforms and the
//! exact kinetic and potential subflows.
//!
//! Conventions used throughout the crate:
//!
//! * nodes `x_k = -π + k h`, `h = 2π / M`, `k = 0..M`;
//! * the forward transform is the unnormalized DFT, the inverse carries `1/M`;
//! * transform bin `i` holds wavenumber `i` for `i < M/2` and `i - M` otherwise,
//!   so the unpaired Nyquist bin carries `-M/2`;
//! * `exp(i t ∂ₓ²/2)` acts on wavenumber `k` as the multiplier `exp(-i k² t / 2)`.
//!
//! Fields stay in physical space between operations; each kinetic step does its
//! own forward/inverse pair.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Uniform grid with `M` nodes on `[-π, π)` and cached FFT plans.
#[derive(Clone)]
pub struct TorusGrid {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("size", &self.size)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
    }
}

impl TorusGrid {
    /// `size` must be a power of two, at least 2.
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two >= 2, got {size}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -PI + k as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size).map(|k| self.node(k)).collect()
    }

    /// Signed wavenumber stored in transform bin `index`.
    pub fn wavenumber(&self, index: usize) -> i64 {
        let half = self.size / 2;
        if index < half {
            index as i64
        } else {
            index as i64 - self.size as i64
        }
    }

    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.size).map(|i| self.wavenumber(i)).collect()
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    pub(crate) fn forward_inplace(&self, values: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(values, scratch);
    }

    pub(crate) fn inverse_inplace(&self, values: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(values, scratch);
    }

    /// Unnormalized forward DFT of physical samples.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = values.to_vec();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.forward_inplace(&mut out, &mut scratch);
        out
    }

    /// Inverse DFT including the `1/M` normalization.
    pub fn inverse(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        let mut out = coefficients.to_vec();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.inverse_inplace(&mut out, &mut scratch);
        let scale = 1.0 / self.size as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    fn check(&self, other: &TorusGrid) -> Result<()> {
        if self.size != other.size {
            return Err(Error::GridMismatch {
                expected: self.size,
                found: other.size,
            });
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size {
            return Err(Error::GridMismatch {
                expected: self.size,
                found: len,
            });
        }
        Ok(())
    }
}

/// Initial data for the wave function.
#[derive(Clone)]
pub enum InitialData {
    /// `sqrt(8/π) exp(-8 x²)`.
    Gaussian,
    /// `exp(i k x)`.
    PlaneWave(i64),
    Custom(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Gaussian => write!(f, "Gaussian"),
            InitialData::PlaneWave(k) => write!(f, "PlaneWave({k})"),
            InitialData::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl InitialData {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            InitialData::Gaussian => Complex64::new((8.0 / PI).sqrt() * (-8.0 * x * x).exp(), 0.0),
            InitialData::PlaneWave(k) => Complex64::from_polar(1.0, *k as f64 * x),
            InitialData::Custom(f) => f(x),
        }
    }
}

/// Complex field sampled on the nodes of a [`TorusGrid`].
#[derive(Clone, Debug)]
pub struct WaveField {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: &TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::NonFinite("wave field".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.size()],
        }
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.size()).map(|k| f(grid.node(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }
}

/// Samples initial data at the grid nodes.
pub fn sample_initial(grid: &TorusGrid, kind: &InitialData) -> Result<WaveField> {
    if let InitialData::PlaneWave(k) = kind {
        if k.unsigned_abs() as usize >= grid.size() / 2 {
            return Err(Error::InvalidArgument(format!(
                "plane wave k = {k} not representable on M = {}",
                grid.size()
            )));
        }
    }
    WaveField::from_fn(grid, |x| kind.eval(x))
}

/// Multipliers `exp(-i k² t / 2) / M` in transform order.
pub(crate) fn kinetic_multipliers(grid: &TorusGrid, t: f64) -> Vec<Complex64> {
    let scale = 1.0 / grid.size() as f64;
    (0..grid.size())
        .map(|i| {
            let k = grid.wavenumber(i) as f64;
            Complex64::from_polar(scale, -0.5 * k * k * t)
        })
        .collect()
}

/// Pointwise `exp(-i t V)`.
pub(crate) fn potential_multipliers(potential: &[f64], t: f64) -> Vec<Complex64> {
    potential
        .iter()
        .map(|&v| Complex64::from_polar(1.0, -t * v))
        .collect()
}

/// Transform, multiply by normalized kinetic multipliers, transform back.
#[inline]
pub(crate) fn apply_kinetic(
    grid: &TorusGrid,
    values: &mut [Complex64],
    multipliers: &[Complex64],
    scratch: &mut [Complex64],
) {
    grid.forward_inplace(values, scratch);
    for (v, m) in values.iter_mut().zip(multipliers) {
        *v *= m;
    }
    grid.inverse_inplace(values, scratch);
}

#[inline]
pub(crate) fn apply_pointwise(values: &mut [Complex64], multipliers: &[Complex64]) {
    for (v, m) in values.iter_mut().zip(multipliers) {
        *v *= m;
    }
}

/// Exact free flow `exp(i t ∂ₓ²/2)` for time `t` (negative `t` runs backwards).
pub fn kinetic_step(f: &WaveField, t: f64) -> WaveField {
    let grid = f.grid();
    let multipliers = kinetic_multipliers(grid, t);
    let mut scratch = vec![Complex64::default(); grid.scratch_len()];
    let mut out = f.clone();
    apply_kinetic(grid, &mut out.values, &multipliers, &mut scratch);
    out
}

/// Exact potential flow: pointwise multiplication by `exp(-i t V(x_k))`.
pub fn potential_step(f: &WaveField, potential: &[f64], t: f64) -> Result<WaveField> {
    f.grid().check_len(potential.len())?;
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("potential".into()));
    }
    let mut out = f.clone();
    apply_pointwise(&mut out.values, &potential_multipliers(potential, t));
    Ok(out)
}

/// Spectral first derivative; the Nyquist bin is zeroed.
pub fn spectral_derivative(f: &WaveField) -> WaveField {
    let grid = f.grid();
    let mut out = f.clone();
    let mut scratch = vec![Complex64::default(); grid.scratch_len()];
    differentiate_inplace(grid, &mut out.values, &mut scratch);
    out
}

pub(crate) fn differentiate_inplace(
    grid: &TorusGrid,
    values: &mut [Complex64],
    scratch: &mut [Complex64],
) {
    let m = grid.size();
    let scale = 1.0 / m as f64;
    grid.forward_inplace(values, scratch);
    for (i, v) in values.iter_mut().enumerate() {
        if i == m / 2 {
            *v = Complex64::default();
        } else {
            let k = grid.wavenumber(i) as f64;
            *v *= Complex64::new(0.0, k * scale);
        }
    }
    grid.inverse_inplace(values, scratch);
}

/// `sqrt(h Σ |f_k|²)`.
pub fn discrete_l2_norm(f: &WaveField) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in f.values() {
        acc.add(v.norm_sqr());
    }
    (f.grid().spacing() * acc.value()).sqrt()
}

/// Discrete L² norm of a real field on `grid`.
pub fn real_l2_norm(grid: &TorusGrid, values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v * v);
    }
    (grid.spacing() * acc.value()).sqrt()
}

pub(crate) fn same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    a.check(b)
}
