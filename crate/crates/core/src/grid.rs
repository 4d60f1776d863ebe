//! Uniform periodic grids and the continuous-normalization Fourier transform.
//!
//! Every transform here approximates
//!
//! ```text
//! f̂(k) = ∫ e^{-2πi k·x} f(x) dx,        f(x) = ∫ e^{2πi k·x} f̂(k) dk
//! ```
//!
//! on the torus `[-L, L)^n`, so derivative weights are `2πi k` and analytic
//! Fourier pairs are reproduced to spectral accuracy for well-resolved fields.
//!
//! Ordering contract: both position and wavenumber samples are stored in
//! *centered* order. Along an axis of `N` points, index `j` maps to
//! `x_j = -L + j·dx` and `k_j = (j - N/2)·dk` with `dk = 1/(2L)`. Two-dimensional
//! arrays are flattened row-major with axis 0 varying slowest. Code outside
//! this module goes through [`Axis`] and [`SpatialGrid`] accessors instead of
//! doing index arithmetic.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A uniform, centered one-dimensional sample axis `start + j·step`, `j = 0..len`,
/// with `start = -(len/2)·step`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    len: usize,
    step: f64,
}

impl Axis {
    pub fn centered(len: usize, step: f64) -> Self {
        Self { len, step }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        -((self.len / 2) as f64) * self.step
    }

    /// Total periodic extent `len·step`.
    pub fn extent(&self) -> f64 {
        self.len as f64 * self.step
    }

    pub fn value(&self, j: usize) -> f64 {
        (j as f64 - (self.len / 2) as f64) * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.value(j)).collect()
    }

    /// Index of the sample sitting exactly at zero.
    pub fn zero_index(&self) -> usize {
        self.len / 2
    }

    /// Largest |value| on the axis.
    pub fn max_abs(&self) -> f64 {
        self.start().abs()
    }

    /// The reciprocal axis under the discrete Fourier transform.
    pub fn dual(&self) -> Axis {
        Axis::centered(self.len, 1.0 / self.extent())
    }
}

/// Precomputed plans and phase corrections for transforming along one [`Axis`].
pub struct AxisTransform {
    axis: Axis,
    dual: Axis,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    fwd_pre: Vec<C64>,
    fwd_post: Vec<C64>,
    inv_pre: Vec<C64>,
    inv_post: Vec<C64>,
}

impl fmt::Debug for AxisTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AxisTransform")
            .field("axis", &self.axis)
            .finish_non_exhaustive()
    }
}

impl AxisTransform {
    pub fn new(axis: Axis) -> Self {
        let n = axis.len();
        let dual = axis.dual();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let (x0, k0) = (axis.start(), dual.start());
        let (dx, dk) = (axis.step(), dual.step());
        // e^{-2πi k_j x_m} = e^{-2πi k_j x0} · e^{-2πi k0 m dx} · e^{-2πi jm/N}
        let fwd_pre: Vec<C64> = (0..n)
            .map(|m| C64::from_polar(1.0, -2.0 * PI * k0 * m as f64 * dx))
            .collect();
        let fwd_post: Vec<C64> = (0..n)
            .map(|j| C64::from_polar(dx, -2.0 * PI * dual.value(j) * x0))
            .collect();
        let inv_pre: Vec<C64> = (0..n)
            .map(|j| C64::from_polar(1.0, 2.0 * PI * dual.value(j) * x0))
            .collect();
        let inv_post: Vec<C64> = (0..n)
            .map(|m| C64::from_polar(dk, 2.0 * PI * k0 * m as f64 * dx))
            .collect();
        Self {
            axis,
            dual,
            forward,
            inverse,
            fwd_pre,
            fwd_post,
            inv_pre,
            inv_post,
        }
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn dual(&self) -> Axis {
        self.dual
    }

    /// Position samples to wavenumber samples, in place.
    pub fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.axis.len());
        for (b, p) in buf.iter_mut().zip(&self.fwd_pre) {
            *b *= p;
        }
        self.forward.process(buf);
        for (b, p) in buf.iter_mut().zip(&self.fwd_post) {
            *b *= p;
        }
    }

    /// Wavenumber samples back to position samples, in place.
    pub fn inverse(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.axis.len());
        for (b, p) in buf.iter_mut().zip(&self.inv_pre) {
            *b *= p;
        }
        self.inverse.process(buf);
        for (b, p) in buf.iter_mut().zip(&self.inv_post) {
            *b *= p;
        }
    }

    /// Transform every contiguous row of a row-major `rows × len` array.
    pub fn forward_rows(&self, data: &mut [C64]) {
        for row in data.chunks_exact_mut(self.axis.len()) {
            self.forward(row);
        }
    }

    pub fn inverse_rows(&self, data: &mut [C64]) {
        for row in data.chunks_exact_mut(self.axis.len()) {
            self.inverse(row);
        }
    }

    /// Transform every column of a row-major `len × cols` array.
    pub fn forward_cols(&self, data: &mut [C64], cols: usize) {
        self.apply_cols(data, cols, false)
    }

    pub fn inverse_cols(&self, data: &mut [C64], cols: usize) {
        self.apply_cols(data, cols, true)
    }

    fn apply_cols(&self, data: &mut [C64], cols: usize, inverse: bool) {
        let rows = self.axis.len();
        debug_assert_eq!(data.len(), rows * cols);
        let mut col = vec![C64::new(0.0, 0.0); rows];
        for c in 0..cols {
            for r in 0..rows {
                col[r] = data[r * cols + c];
            }
            if inverse {
                self.inverse(&mut col);
            } else {
                self.forward(&mut col);
            }
            for r in 0..rows {
                data[r * cols + c] = col[r];
            }
        }
    }
}

/// Uniform isotropic periodic discretization of `[-L, L)^n`, `n ∈ {1, 2}`.
#[derive(Clone)]
pub struct SpatialGrid {
    dim: usize,
    half_width: f64,
    transform: Arc<AxisTransform>,
}

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("dim", &self.dim)
            .field("points_per_axis", &self.points_per_axis())
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl PartialEq for SpatialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points_per_axis() == other.points_per_axis()
            && self.half_width == other.half_width
    }
}

/// Smallest accepted number of points per axis.
pub const MIN_POINTS: usize = 64;

pub fn make_grid(dim: usize, points_per_axis: usize, half_width: f64) -> Result<SpatialGrid> {
    SpatialGrid::new(dim, points_per_axis, half_width)
}

impl SpatialGrid {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !points_per_axis.is_power_of_two() || points_per_axis < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= {MIN_POINTS}, got {points_per_axis}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        let axis = Axis::centered(points_per_axis, 2.0 * half_width / points_per_axis as f64);
        Ok(Self {
            dim,
            half_width,
            transform: Arc::new(AxisTransform::new(axis)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.transform.axis().len()
    }

    /// Total number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.points_per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.transform.axis().step()
    }

    pub fn dk(&self) -> f64 {
        self.transform.dual().step()
    }

    /// Position axis (identical on every dimension).
    pub fn axis(&self) -> Axis {
        self.transform.axis()
    }

    /// Wavenumber axis (identical on every dimension).
    pub fn wavenumber_axis(&self) -> Axis {
        self.transform.dual()
    }

    pub fn axis_transform(&self) -> &AxisTransform {
        &self.transform
    }

    /// Cell volume `dx^n`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Spectral cell volume `dk^n`.
    pub fn spectral_cell_volume(&self) -> f64 {
        self.dk().powi(self.dim as i32)
    }

    /// Largest |k| per axis, `N/(4L)`.
    pub fn k_max(&self) -> f64 {
        self.wavenumber_axis().max_abs()
    }

    fn split_index(&self, idx: usize) -> [usize; 2] {
        let n = self.points_per_axis();
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / n, idx % n]
        }
    }

    /// Position of flat sample `idx`; unused components are zero.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let a = self.axis();
        let [i, j] = self.split_index(idx);
        if self.dim == 1 {
            [a.value(i), 0.0]
        } else {
            [a.value(i), a.value(j)]
        }
    }

    /// Wavenumber of flat spectral sample `idx`; unused components are zero.
    pub fn wavenumber(&self, idx: usize) -> [f64; 2] {
        let a = self.wavenumber_axis();
        let [i, j] = self.split_index(idx);
        if self.dim == 1 {
            [a.value(i), 0.0]
        } else {
            [a.value(i), a.value(j)]
        }
    }

    pub fn wavenumber_norm_sq(&self, idx: usize) -> f64 {
        let k = self.wavenumber(idx);
        k[0] * k[0] + k[1] * k[1]
    }

    pub fn positions(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(|i| self.position(i))
    }

    pub fn wavenumbers(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(|i| self.wavenumber(i))
    }

    fn transform_in_place(&self, data: &mut [C64], inverse: bool) {
        let t = &self.transform;
        let n = self.points_per_axis();
        if inverse {
            t.inverse_rows(data);
            if self.dim == 2 {
                t.inverse_cols(data, n);
            }
        } else {
            t.forward_rows(data);
            if self.dim == 2 {
                t.forward_cols(data, n);
            }
        }
    }

    /// Check that a vector argument has one component per dimension.
    pub fn check_vector(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "{what} has {} components on a {}-dimensional grid",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("{what} is not finite")));
        }
        Ok(())
    }
}

/// Complex wavefunction samples on a [`SpatialGrid`] carrying its semiclassical
/// parameter.
#[derive(Clone, Debug)]
pub struct SampledField {
    grid: SpatialGrid,
    values: Vec<C64>,
    epsilon: f64,
}

/// Spectrum of a [`SampledField`] on the centered wavenumber grid.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: SpatialGrid,
    values: Vec<C64>,
    epsilon: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

fn check_values(grid: &SpatialGrid, values: &[C64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} samples, got {}",
            grid.len(),
            values.len()
        )));
    }
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numerical("field contains NaN or infinite samples".into()));
    }
    Ok(())
}

impl SampledField {
    pub fn new(grid: SpatialGrid, values: Vec<C64>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_values(&grid, &values)?;
        Ok(Self { grid, values, epsilon })
    }

    /// Sample `f` at every grid position. `f` receives `dim` coordinates.
    pub fn from_fn(grid: SpatialGrid, epsilon: f64, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let dim = grid.dim();
        let values = grid.positions().map(|p| f(&p[..dim])).collect();
        Self::new(grid, values, epsilon)
    }

    pub(crate) fn from_parts(grid: SpatialGrid, values: Vec<C64>, epsilon: f64) -> Self {
        Self { grid, values, epsilon }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_values(&self, values: Vec<C64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.epsilon)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `∫|f|² dx` as a Riemann sum.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// Rescale to unit discrete L² norm, returning the factor that was applied.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.l2_norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize a field of norm {norm}")));
        }
        let factor = 1.0 / norm;
        for v in &mut self.values {
            *v *= factor;
        }
        Ok(factor)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Mass located outside the central box `[-L/2, L/2]^n`.
    pub fn margin_mass(&self) -> f64 {
        let half = 0.5 * self.grid.half_width();
        let dim = self.grid.dim();
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let p = self.grid.position(*i);
                p[..dim].iter().any(|c| c.abs() > half)
            })
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// Fail when more than `limit` of the mass sits in the outer margin.
    pub fn check_margin(&self, limit: f64) -> Result<()> {
        let mass = self.margin_mass();
        if mass > limit {
            return Err(Error::MarginViolation { mass, limit });
        }
        Ok(())
    }

    /// `‖f - g‖_{L²}` for fields on the same grid.
    pub fn l2_distance(&self, other: &SampledField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// Linear combination `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &SampledField, b: C64) -> Result<SampledField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        self.with_values(values)
    }

    /// Pointwise multiplication by `f(x)`.
    pub fn modulate(&self, f: impl Fn(&[f64]) -> C64) -> SampledField {
        let dim = self.grid.dim();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * f(&self.grid.position(i)[..dim]))
            .collect();
        Self::from_parts(self.grid.clone(), values, self.epsilon)
    }

    /// Spectrum with the continuous normalization.
    pub fn spectrum(&self) -> SpectralField {
        forward_transform(self)
    }
}

impl SpectralField {
    pub fn new(grid: SpatialGrid, values: Vec<C64>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_values(&grid, &values)?;
        Ok(Self { grid, values, epsilon })
    }

    pub fn from_fn(grid: SpatialGrid, epsilon: f64, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let dim = grid.dim();
        let values = grid.wavenumbers().map(|k| f(&k[..dim])).collect();
        Self::new(grid, values, epsilon)
    }

    pub(crate) fn from_parts(grid: SpatialGrid, values: Vec<C64>, epsilon: f64) -> Self {
        Self { grid, values, epsilon }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `∫|f̂|² dk`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spectral_cell_volume()
    }

    /// `∫ w(k) |f̂(k)|^p dk`.
    pub fn weighted_sum(&self, p: f64, w: impl Fn(&[f64]) -> f64) -> f64 {
        let dim = self.grid.dim();
        let total: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = self.grid.wavenumber(i);
                let m = v.norm();
                let mp = if p == 2.0 {
                    m * m
                } else if p == 1.0 {
                    m
                } else {
                    m.powf(p)
                };
                w(&k[..dim]) * mp
            })
            .sum();
        total * self.grid.spectral_cell_volume()
    }

    /// Fraction of `∫|f̂|` sitting in the outer 10% of the wavenumber box.
    pub fn tail_fraction(&self) -> f64 {
        let dim = self.grid.dim();
        let cut = 0.9 * self.grid.k_max();
        let mut tail = 0.0;
        let mut total = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let k = self.grid.wavenumber(i);
            let m = v.norm();
            total += m;
            if k[..dim].iter().any(|c| c.abs() > cut) {
                tail += m;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn map(&self, f: impl Fn(&[f64], C64) -> C64) -> SpectralField {
        let dim = self.grid.dim();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| f(&self.grid.wavenumber(i)[..dim], *v))
            .collect();
        Self::from_parts(self.grid.clone(), values, self.epsilon)
    }
}

/// Continuous-normalization forward transform `f ↦ f̂`.
pub fn forward_transform(field: &SampledField) -> SpectralField {
    let mut data = field.values.clone();
    field.grid.transform_in_place(&mut data, false);
    SpectralField::from_parts(field.grid.clone(), data, field.epsilon)
}

/// Exact inverse of [`forward_transform`].
pub fn inverse_transform(spectral: &SpectralField) -> SampledField {
    let mut data = spectral.values.clone();
    spectral.grid.transform_in_place(&mut data, true);
    SampledField::from_parts(spectral.grid.clone(), data, spectral.epsilon)
}

/// Samples of the band-limited interpolant translated by `offset`, i.e.
/// `x ↦ f(x - offset)`, computed as `f̂(k)·e^{-2πi k·offset}`.
pub fn spectral_shift(field: &SampledField, offset: &[f64]) -> Result<SampledField> {
    let grid = field.grid();
    grid.check_vector(offset, "shift offset")?;
    if let Some(o) = offset.iter().find(|o| o.abs() >= grid.half_width()) {
        return Err(Error::ShiftTooLarge {
            offset: *o,
            half_width: grid.half_width(),
        });
    }
    if offset.iter().all(|o| *o == 0.0) {
        return Ok(field.clone());
    }
    let shifted = forward_transform(field).map(|k, v| {
        let phase: f64 = k.iter().zip(offset).map(|(k, o)| k * o).sum();
        v * C64::from_polar(1.0, -2.0 * PI * phase)
    });
    Ok(inverse_transform(&shifted))
}

/// Spectral partial derivative `∂^order/∂x_axis^order`.
pub fn derivative(field: &SampledField, axis: usize, order: u32) -> Result<SampledField> {
    if axis >= field.grid().dim() {
        return Err(Error::InvalidInput(format!(
            "axis {axis} out of range for a {}-dimensional grid",
            field.grid().dim()
        )));
    }
    let spec = forward_transform(field).map(|k, v| v * (C64::new(0.0, 2.0 * PI * k[axis])).powu(order));
    Ok(inverse_transform(&spec))
}

/// `‖f‖_{H^s}` with weight `(1 + |2πk|²)^s`, so that `‖∇f‖_{L²} ≤ ‖f‖_{H¹}`.
pub fn sobolev_norm(field: &SampledField, s: f64) -> f64 {
    let spec = forward_transform(field);
    spec.weighted_sum(2.0, |k| {
        let k2: f64 = k.iter().map(|c| c * c).sum();
        (1.0 + 4.0 * PI * PI * k2).powf(s)
    })
    .sqrt()
}

/// `‖∇f‖_{L²}` computed spectrally.
pub fn gradient_norm(field: &SampledField) -> f64 {
    gradient_norm_spectral(&forward_transform(field))
}

pub(crate) fn gradient_norm_spectral(spec: &SpectralField) -> f64 {
    spec.weighted_sum(2.0, |k| {
        let k2: f64 = k.iter().map(|c| c * c).sum();
        4.0 * PI * PI * k2
    })
    .sqrt()
}

/// `‖f‖_{L^p}` as a Riemann sum; `p = ∞` gives the max modulus.
pub fn lp_norm(field: &SampledField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidInput(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    let sum: f64 = field.values().iter().map(|v| v.norm().powf(p)).sum();
    Ok((sum * field.grid().cell_volume()).powf(1.0 / p))
}
