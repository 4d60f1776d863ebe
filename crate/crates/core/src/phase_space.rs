//! Wigner transforms on the one-dimensional phase plane, free transport, and
//! distances measured through the Fourier–Wigner transform.
//!
//! Conventions (all with the `e^{-2πi·}` forward transform):
//!
//! ```text
//! W(x,k)   = ∫ e^{-2πiky} ψ(x+εy/2) ψ̄(x-εy/2) dy
//! P(x,K)   = F_{k→K} W = ψ(x-εK/2) ψ̄(x+εK/2)
//! Ŵ(X,K)   = F_{x→X} P
//! ```
//!
//! Phase-space arrays are row-major with the first variable (`x` or `X`)
//! varying slowest.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{free_propagate, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{derivative, forward_transform, Axis, AxisTransform, SampledField};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Lines below this fraction of the peak may be sheared off the grid.
const NEGLIGIBLE: f64 = 1e-10;

/// Product of two centered axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub first: Axis,
    pub second: Axis,
}

impl PhaseGrid {
    pub fn new(first: Axis, second: Axis) -> Self {
        Self { first, second }
    }

    pub fn len(&self) -> usize {
        self.first.len() * self.second.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.first.step() * self.second.step()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.second.len() + j
    }

    pub fn point(&self, idx: usize) -> (f64, f64) {
        let n = self.second.len();
        (self.first.value(idx / n), self.second.value(idx % n))
    }

    /// Grid of the 2D transform.
    pub fn dual(&self) -> PhaseGrid {
        PhaseGrid::new(self.first.dual(), self.second.dual())
    }
}

fn transform_2d(grid: &PhaseGrid, data: &mut [C64], inverse: bool) {
    let t0 = AxisTransform::new(grid.first);
    let t1 = AxisTransform::new(grid.second);
    let cols = grid.second.len();
    if inverse {
        data.par_chunks_exact_mut(cols).for_each(|row| t1.inverse(row));
        t0.inverse_cols(data, cols);
    } else {
        data.par_chunks_exact_mut(cols).for_each(|row| t1.forward(row));
        t0.forward_cols(data, cols);
    }
}

/// A function on the `(x, k)` phase plane.
#[derive(Clone, Debug)]
pub struct PhaseSpaceFunction {
    grid: PhaseGrid,
    values: Vec<C64>,
}

/// A function on the `(X, K)` Fourier side of the phase plane.
#[derive(Clone, Debug)]
pub struct PhaseSpectrum {
    grid: PhaseGrid,
    values: Vec<C64>,
}

macro_rules! phase_accessors {
    ($t:ty) => {
        impl $t {
            pub fn new(grid: PhaseGrid, values: Vec<C64>) -> Result<Self> {
                if values.len() != grid.len() {
                    return Err(Error::InvalidInput(format!(
                        "expected {} phase-space samples, got {}",
                        grid.len(),
                        values.len()
                    )));
                }
                if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::Numerical("phase-space samples are not finite".into()));
                }
                Ok(Self { grid, values })
            }

            pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> C64) -> Self {
                let values = (0..grid.len())
                    .map(|i| {
                        let (a, b) = grid.point(i);
                        f(a, b)
                    })
                    .collect();
                Self { grid, values }
            }

            pub fn grid(&self) -> &PhaseGrid {
                &self.grid
            }

            pub fn values(&self) -> &[C64] {
                &self.values
            }

            pub fn get(&self, i: usize, j: usize) -> C64 {
                self.values[self.grid.index(i, j)]
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
        }
    };
}

phase_accessors!(PhaseSpaceFunction);
phase_accessors!(PhaseSpectrum);

impl PhaseSpaceFunction {
    pub fn transform(&self) -> PhaseSpectrum {
        let mut data = self.values.clone();
        transform_2d(&self.grid, &mut data, false);
        PhaseSpectrum {
            grid: self.grid.dual(),
            values: data,
        }
    }

    /// `∬ f dx dk`.
    pub fn integral(&self) -> C64 {
        self.values.iter().sum::<C64>() * self.grid.cell_area()
    }

    /// `∫ f(x,k) dk` for every `x`.
    pub fn marginal_over_second(&self) -> Vec<C64> {
        let n = self.grid.second.len();
        self.values
            .chunks_exact(n)
            .map(|row| row.iter().sum::<C64>() * self.grid.second.step())
            .collect()
    }

    /// `∫ f(x,k) dx` for every `k`.
    pub fn marginal_over_first(&self) -> Vec<C64> {
        let n = self.grid.second.len();
        let mut out = vec![ZERO; n];
        for row in self.values.chunks_exact(n) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter().map(|v| v * self.grid.first.step()).collect()
    }

    /// Largest imaginary part relative to the largest modulus.
    pub fn imaginary_residue(&self) -> f64 {
        let m = self.max_abs();
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / m.max(f64::MIN_POSITIVE)
    }
}

impl PhaseSpectrum {
    pub fn inverse(&self) -> PhaseSpaceFunction {
        let mut data = self.values.clone();
        transform_2d(&self.grid, &mut data, true);
        PhaseSpaceFunction {
            grid: self.grid.dual(),
            values: data,
        }
    }

    /// `sup |f̂(X,K)| / (1+|X|+|K|)^s`.
    pub fn weighted_sup(&self, s: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (a, b) = self.grid.point(i);
                v.norm() / (1.0 + a.abs() + b.abs()).powf(s)
            })
            .fold(0.0, f64::max)
    }

    /// `∬ (1+|X|+|K|)^s |f̂| dX dK`.
    pub fn weighted_l1(&self, s: f64) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (a, b) = self.grid.point(i);
                (1.0 + a.abs() + b.abs()).powf(s) * v.norm()
            })
            .sum();
        sum * self.grid.cell_area()
    }

    /// Fraction of `∬|f̂|` in the outer 10% of either axis.
    pub fn tail_fraction(&self) -> f64 {
        let ca = 0.9 * self.grid.first.max_abs();
        let cb = 0.9 * self.grid.second.max_abs();
        let mut tail = 0.0;
        let mut total = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let (a, b) = self.grid.point(i);
            let m = v.norm();
            total += m;
            if a.abs() > ca || b.abs() > cb {
                tail += m;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn map(&self, f: impl Fn(f64, f64, C64) -> C64) -> PhaseSpectrum {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (a, b) = self.grid.point(i);
                f(a, b, *v)
            })
            .collect();
        PhaseSpectrum {
            grid: self.grid,
            values,
        }
    }
}

/// Wigner transform `W^ε[ψ](x,k)` of a one-dimensional field.
#[derive(Clone, Debug)]
pub struct WignerField {
    pub function: PhaseSpaceFunction,
    pub epsilon: f64,
}

/// `Ŵ(X,K)`, the full phase-space transform of the Wigner function.
#[derive(Clone, Debug)]
pub struct FourierWigner {
    pub spectrum: PhaseSpectrum,
    pub epsilon: f64,
}

impl FourierWigner {
    /// Value at `(X, K) = (0, 0)`.
    pub fn at_origin(&self) -> C64 {
        let g = self.spectrum.grid();
        self.spectrum.get(g.first.zero_index(), g.second.zero_index())
    }
}

fn require_1d(field: &SampledField) -> Result<()> {
    if field.grid().dim() != 1 {
        return Err(Error::Unsupported(
            "phase-space transforms are one-dimensional only".into(),
        ));
    }
    Ok(())
}

/// Correlation variable `y` (or `K`) whose shift `εy` runs over one grid
/// step per sample, so the half-shifts `±εy/2` span the whole box.
fn correlation_axis(field: &SampledField) -> Axis {
    let g = field.grid();
    Axis::centered(g.points_per_axis(), g.dx() / field.epsilon())
}

/// `ψ(x - offset)` for a list of offsets, sharing one forward transform.
struct Shifter<'a> {
    field: &'a SampledField,
    spectrum: Vec<C64>,
    wavenumbers: Vec<f64>,
}

impl<'a> Shifter<'a> {
    fn new(field: &'a SampledField) -> Self {
        let spectrum = forward_transform(field).into_values();
        Self {
            field,
            spectrum,
            wavenumbers: field.grid().wavenumber_axis().values(),
        }
    }

    fn shifted(&self, offset: f64) -> Vec<C64> {
        if offset == 0.0 {
            return self.field.values().to_vec();
        }
        let mut data: Vec<C64> = self
            .spectrum
            .iter()
            .zip(&self.wavenumbers)
            .map(|(v, k)| v * C64::from_polar(1.0, -2.0 * PI * k * offset))
            .collect();
        self.field.grid().axis_transform().inverse(&mut data);
        data
    }
}

/// The correlation is cut off at total shift `L`; fields wider than half
/// the box lose their tails there.
fn warn_if_truncated(edge: &[C64], field: &SampledField) {
    let peak = field.max_abs().powi(2);
    let cut = edge.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if cut > 1e-8 * peak {
        log::warn!(
            "Wigner correlation is still {:.1e} of its peak at shift L = {}; widen the domain",
            cut / peak,
            field.grid().half_width()
        );
    }
}

/// `W^ε[ψ]` on the grid `x × dual(y)`: half-shifts are spectral and the
/// correlation variable `y` has step `dx/ε`.
pub fn wigner_transform(field: &SampledField) -> Result<WignerField> {
    require_1d(field)?;
    let eps = field.epsilon();
    let axis = field.grid().axis();
    let yaxis = correlation_axis(field);
    let n = axis.len();
    let shifter = Shifter::new(field);
    // Column j holds y_j; computed in parallel then scattered into rows of x.
    let columns: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let y = yaxis.value(j);
            let plus = shifter.shifted(-0.5 * eps * y);
            let minus = shifter.shifted(0.5 * eps * y);
            plus.iter().zip(&minus).map(|(a, b)| a * b.conj()).collect()
        })
        .collect();
    let mut data = vec![ZERO; n * n];
    for (j, col) in columns.iter().enumerate() {
        for (m, v) in col.iter().enumerate() {
            data[m * n + j] = *v;
        }
    }
    warn_if_truncated(&columns[0], field);
    let t = AxisTransform::new(yaxis);
    data.par_chunks_exact_mut(n).for_each(|row| t.forward(row));
    Ok(WignerField {
        function: PhaseSpaceFunction {
            grid: PhaseGrid::new(axis, yaxis.dual()),
            values: data,
        },
        epsilon: eps,
    })
}

/// The `K` axis used for Fourier–Wigner arrays, optionally restricted to
/// `|K| ≤ window`.
fn k_axis(field: &SampledField, window: Option<f64>) -> Axis {
    let full = correlation_axis(field);
    match window {
        Some(w) if w < full.max_abs() => {
            let half = ((w / full.step()).floor() as usize).max(1);
            Axis::centered(2 * half, full.step())
        }
        _ => full,
    }
}

/// Visit `Ŵ(·, K)` for every `K` on the Fourier–Wigner axis, in parallel.
fn fourier_wigner_columns<T: Send>(
    field: &SampledField,
    window: Option<f64>,
    visit: impl Fn(f64, &[C64]) -> T + Sync,
) -> Result<(Axis, Vec<T>)> {
    require_1d(field)?;
    let eps = field.epsilon();
    let kaxis = k_axis(field, window);
    let shifter = Shifter::new(field);
    let t = field.grid().axis_transform();
    let out = (0..kaxis.len())
        .into_par_iter()
        .map(|j| {
            let k = kaxis.value(j);
            let a = shifter.shifted(0.5 * eps * k);
            let b = shifter.shifted(-0.5 * eps * k);
            let mut col: Vec<C64> = a.iter().zip(&b).map(|(u, v)| u * v.conj()).collect();
            t.forward(&mut col);
            visit(k, &col)
        })
        .collect();
    Ok((kaxis, out))
}

/// `Ŵ(X,K) = ∫ e^{-2πixX} ψ(x-εK/2) ψ̄(x+εK/2) dx`, one transform per `K`.
pub fn fourier_wigner(field: &SampledField) -> Result<FourierWigner> {
    fourier_wigner_window(field, None)
}

/// [`fourier_wigner`] restricted to `|K| ≤ window`.
pub fn fourier_wigner_window(field: &SampledField, window: Option<f64>) -> Result<FourierWigner> {
    let (kaxis, cols) = fourier_wigner_columns(field, window, |_, col| col.to_vec())?;
    let xaxis = field.grid().wavenumber_axis();
    let nk = kaxis.len();
    let mut data = vec![ZERO; xaxis.len() * nk];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * nk + j] = *v;
        }
    }
    Ok(FourierWigner {
        spectrum: PhaseSpectrum {
            grid: PhaseGrid::new(xaxis, kaxis),
            values: data,
        },
        epsilon: field.epsilon(),
    })
}

fn weight(x: f64, k: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (1.0 + x.abs() + k.abs()).powf(s)
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "distance order must be non-negative, got {s}"
        )));
    }
    Ok(())
}

/// `sup |Ŵ(X,K) - e^{-2πi(X·X₀ + K·K₀/2π)}| / (1+|X|+|K|)^s`, the weighted
/// Fourier-side distance to `δ(x - X₀, k - K₀/2π)`.
pub fn delta_distance(w: &FourierWigner, x0: f64, k0: f64, s: f64) -> Result<f64> {
    check_order(s)?;
    let kc = k0 / (2.0 * PI);
    let spec = &w.spectrum;
    Ok(spec
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (xx, kk) = spec.grid().point(i);
            let target = C64::from_polar(1.0, -2.0 * PI * (xx * x0 + kk * kc));
            (v - target).norm() / weight(xx, kk, s)
        })
        .fold(0.0, f64::max))
}

/// [`delta_distance`] computed column by column without storing `Ŵ`.
pub fn delta_distance_of_field(field: &SampledField, x0: f64, k0: f64, s: f64, window: Option<f64>) -> Result<f64> {
    check_order(s)?;
    let kc = k0 / (2.0 * PI);
    let xaxis = field.grid().wavenumber_axis();
    let (_, sups) = fourier_wigner_columns(field, window, |kk, col| {
        col.iter()
            .enumerate()
            .map(|(i, v)| {
                let xx = xaxis.value(i);
                let target = C64::from_polar(1.0, -2.0 * PI * (xx * x0 + kk * kc));
                (v - target).norm() / weight(xx, kk, s)
            })
            .fold(0.0, f64::max)
    })?;
    Ok(sups.into_iter().fold(0.0, f64::max))
}

/// Weighted sup distance between the Fourier–Wigner transforms of two fields.
pub fn fourier_wigner_distance(a: &SampledField, b: &SampledField, s: f64, window: Option<f64>) -> Result<f64> {
    check_order(s)?;
    if a.grid() != b.grid() || a.epsilon() != b.epsilon() {
        return Err(Error::GridMismatch);
    }
    let eps = a.epsilon();
    let kaxis = k_axis(a, window);
    let xaxis = a.grid().wavenumber_axis();
    let (sa, sb) = (Shifter::new(a), Shifter::new(b));
    let t = a.grid().axis_transform();
    // Both columns for one `K` at a time, so memory stays linear in N.
    let column = |shifter: &Shifter, k: f64| {
        let u = shifter.shifted(0.5 * eps * k);
        let v = shifter.shifted(-0.5 * eps * k);
        let mut col: Vec<C64> = u.iter().zip(&v).map(|(p, q)| p * q.conj()).collect();
        t.forward(&mut col);
        col
    };
    let sup = (0..kaxis.len())
        .into_par_iter()
        .map(|j| {
            let k = kaxis.value(j);
            column(&sa, k)
                .iter()
                .zip(&column(&sb, k))
                .enumerate()
                .map(|(i, (u, v))| (u - v).norm() / weight(xaxis.value(i), k, s))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// Distance between `Ŵ[ψ(t)]` and the freely transported `𝕋̂(t)Ŵ[ψ₀]`.
///
/// The transported side is evaluated as `Ŵ[T^ε(t)ψ₀]`, which equals
/// `𝕋̂(t)Ŵ[ψ₀]` exactly and needs no interpolation in `K`.
pub fn transport_mismatch(
    evolved: &SampledField,
    initial: &SampledField,
    t: f64,
    s: f64,
    window: Option<f64>,
) -> Result<f64> {
    if evolved.grid() != initial.grid() || evolved.epsilon() != initial.epsilon() {
        return Err(Error::GridMismatch);
    }
    fourier_wigner_distance(evolved, &free_propagate(initial, t), s, window)
}

fn shift_rows(
    grid: &PhaseGrid,
    values: &[C64],
    transpose: bool,
    shift_for: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<C64>> {
    // Shift along the `first` axis (transpose = false) or along `second`,
    // with an amount depending on the other coordinate.
    let (along, other) = if transpose {
        (grid.second, grid.first)
    } else {
        (grid.first, grid.second)
    };
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let t = AxisTransform::new(along);
    let freq = along.dual().values();
    let lines: Vec<Result<Vec<C64>>> = (0..other.len())
        .into_par_iter()
        .map(|j| {
            let mut line: Vec<C64> = (0..along.len())
                .map(|i| {
                    if transpose {
                        values[grid.index(j, i)]
                    } else {
                        values[grid.index(i, j)]
                    }
                })
                .collect();
            let shift = shift_for(other.value(j));
            if shift == 0.0 {
                return Ok(line);
            }
            let line_peak = line.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if shift.abs() >= along.max_abs() {
                if line_peak > NEGLIGIBLE * peak {
                    return Err(Error::ShiftTooLarge {
                        offset: shift,
                        half_width: along.max_abs(),
                    });
                }
                return Ok(vec![ZERO; along.len()]);
            }
            t.forward(&mut line);
            for (v, f) in line.iter_mut().zip(&freq) {
                *v *= C64::from_polar(1.0, -2.0 * PI * f * shift);
            }
            t.inverse(&mut line);
            Ok(line)
        })
        .collect();
    let mut out = vec![ZERO; values.len()];
    for (j, line) in lines.into_iter().enumerate() {
        for (i, v) in line?.into_iter().enumerate() {
            let idx = if transpose { grid.index(j, i) } else { grid.index(i, j) };
            out[idx] = v;
        }
    }
    Ok(out)
}

/// Physical-side free transport `f(x,k) ↦ f(x - 4πkt, k)`.
pub fn free_transport_function(f: &PhaseSpaceFunction, t: f64) -> Result<PhaseSpaceFunction> {
    let values = shift_rows(&f.grid, &f.values, false, |k| 4.0 * PI * k * t)?;
    Ok(PhaseSpaceFunction { grid: f.grid, values })
}

pub fn free_transport(w: &WignerField, t: f64) -> Result<WignerField> {
    Ok(WignerField {
        function: free_transport_function(&w.function, t)?,
        epsilon: w.epsilon,
    })
}

/// Fourier-side transport by band-limited interpolation in `K`.
///
/// With the `e^{-2πi·}` transform on both variables the image of
/// `f(x - 4πkt, k)` is `f̂(X, K + 4πXt)`.
pub fn fourier_free_transport_spectrum(f: &PhaseSpectrum, t: f64) -> Result<PhaseSpectrum> {
    let values = shift_rows(&f.grid, &f.values, true, |x| -4.0 * PI * x * t)?;
    Ok(PhaseSpectrum { grid: f.grid, values })
}

pub fn fourier_free_transport(w: &FourierWigner, t: f64) -> Result<FourierWigner> {
    Ok(FourierWigner {
        spectrum: fourier_free_transport_spectrum(&w.spectrum, t)?,
        epsilon: w.epsilon,
    })
}

/// Which form of the Wigner evolution equation to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WignerForm {
    /// `∂_t W + 4πk ∂_x W + nonlinear term = 0` on the `(x,k)` plane.
    Eq1,
    /// `∂_t P + 2i ∂_K ∂_x P - (ib/ε)(V(x+εK/2) - V(x-εK/2)) P = 0` on `(x,K)`.
    Eq3,
}

#[derive(Clone, Debug, Serialize)]
pub struct WignerResidual {
    pub form: WignerForm,
    /// `FL^∞` norm of the residual divided by the largest term's `FL^∞` norm.
    pub relative: f64,
    pub time_derivative: f64,
    pub transport: f64,
    pub nonlinear: f64,
}

/// `P(x,K) = ψ(x - εK/2) ψ̄(x + εK/2)` on `x × x`.
fn partial_transform(field: &SampledField) -> Vec<C64> {
    let axis = correlation_axis(field);
    let eps = field.epsilon();
    let n = axis.len();
    let shifter = Shifter::new(field);
    let cols: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let k = axis.value(j);
            let a = shifter.shifted(0.5 * eps * k);
            let b = shifter.shifted(-0.5 * eps * k);
            a.iter().zip(&b).map(|(u, v)| u * v.conj()).collect()
        })
        .collect();
    scatter_columns(&cols, n)
}

fn scatter_columns(cols: &[Vec<C64>], rows: usize) -> Vec<C64> {
    let n = cols.len();
    let mut out = vec![ZERO; rows * n];
    for (j, col) in cols.iter().enumerate() {
        for (m, v) in col.iter().enumerate() {
            out[m * n + j] = *v;
        }
    }
    out
}

/// `V(x+εK/2) - V(x-εK/2)` with `V = |ψ|^{2σ}`, sampled on `x × x`.
fn potential_difference(field: &SampledField, sigma: f64) -> Result<Vec<C64>> {
    let v: Vec<C64> = field
        .values()
        .iter()
        .map(|z| C64::new(z.norm_sqr().powf(sigma), 0.0))
        .collect();
    let vfield = field.with_values(v)?;
    let axis = correlation_axis(field);
    let eps = field.epsilon();
    let shifter = Shifter::new(&vfield);
    let cols: Vec<Vec<C64>> = (0..axis.len())
        .into_par_iter()
        .map(|j| {
            let k = axis.value(j);
            let plus = shifter.shifted(-0.5 * eps * k);
            let minus = shifter.shifted(0.5 * eps * k);
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| C64::new((a - b).re, 0.0))
                .collect()
        })
        .collect();
    Ok(scatter_columns(&cols, axis.len()))
}

/// `∂_x ∂_K P = (ε/2)[ψ(x-a)ψ̄''(x+a) - ψ''(x-a)ψ̄(x+a)]`, `a = εK/2`.
fn mixed_derivative(field: &SampledField) -> Result<Vec<C64>> {
    let second = derivative(field, 0, 2)?;
    let axis = correlation_axis(field);
    let eps = field.epsilon();
    let s0 = Shifter::new(field);
    let s2 = Shifter::new(&second);
    let cols: Vec<Vec<C64>> = (0..axis.len())
        .into_par_iter()
        .map(|j| {
            let a = 0.5 * eps * axis.value(j);
            let u_minus = s0.shifted(a);
            let u_plus = s0.shifted(-a);
            let d_minus = s2.shifted(a);
            let d_plus = s2.shifted(-a);
            (0..axis.len())
                .map(|m| 0.5 * eps * (u_minus[m] * d_plus[m].conj() - d_minus[m] * u_plus[m].conj()))
                .collect()
        })
        .collect();
    Ok(scatter_columns(&cols, axis.len()))
}

/// `sup |F_x f|` for an `(x, K)` array, i.e. the `FL^∞` norm of the
/// corresponding phase-space function.
fn fl_inf_from_partial(values: &[C64], t: &AxisTransform) -> f64 {
    let n = t.axis().len();
    let cols = values.len() / n;
    (0..cols)
        .into_par_iter()
        .map(|j| {
            let mut col: Vec<C64> = (0..n).map(|m| values[m * cols + j]).collect();
            t.forward(&mut col);
            col.iter().map(|v| v.norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn fl_inf_of_function(grid: &PhaseGrid, values: Vec<C64>) -> f64 {
    let f = PhaseSpaceFunction { grid: *grid, values };
    f.transform().max_abs()
}

/// Residual of the Wigner evolution equation at `frame_index`, with the time
/// derivative taken as a centered difference of neighbouring frames and
/// `V = |ψ|^{2σ}` from the middle frame.
pub fn wigner_equation_residual(traj: &Trajectory, frame_index: usize, form: WignerForm) -> Result<WignerResidual> {
    assemble_residual(traj, frame_index, form, 1.0)
}

fn assemble_residual(
    traj: &Trajectory,
    frame_index: usize,
    form: WignerForm,
    nonlinear_sign: f64,
) -> Result<WignerResidual> {
    if frame_index == 0 || frame_index + 1 >= traj.frames.len() {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: traj.frames.len().min(frame_index + 2),
        });
    }
    let (t0, t1, t2) = (
        traj.times[frame_index - 1],
        traj.times[frame_index],
        traj.times[frame_index + 1],
    );
    let h = 0.5 * (t2 - t0);
    if ((t2 - t1) - (t1 - t0)).abs() > 1e-9 * h.abs() {
        return Err(Error::InvalidInput("residual frames are not equally spaced".into()));
    }
    let prev = &traj.frames[frame_index - 1];
    let mid = &traj.frames[frame_index];
    let next = &traj.frames[frame_index + 1];
    require_1d(mid)?;
    let params = &traj.params;
    let eps = params.epsilon;
    let coupling = C64::new(0.0, params.b / eps);
    let axis = mid.grid().axis();
    let n = axis.len();

    // Nonlinear factor on the (x, K) side, shared by both forms.
    let p_mid = partial_transform(mid);
    let dv = potential_difference(mid, params.sigma)?;
    let nonlinear_p: Vec<C64> = p_mid
        .iter()
        .zip(&dv)
        .map(|(p, d)| -nonlinear_sign * coupling * d * p)
        .collect();

    let (time, transport, nonlinear) = match form {
        WignerForm::Eq3 => {
            let pp = partial_transform(prev);
            let pn = partial_transform(next);
            let dt: Vec<C64> = pn.iter().zip(&pp).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let mixed = mixed_derivative(mid)?;
            let tr: Vec<C64> = mixed.iter().map(|m| C64::new(0.0, 2.0) * m).collect();
            (dt, tr, nonlinear_p)
        }
        WignerForm::Eq1 => {
            let wp = wigner_transform(prev)?.function.values;
            let wn = wigner_transform(next)?.function.values;
            let wm = wigner_transform(mid)?;
            let grid = *wm.function.grid();
            let dt: Vec<C64> = wn.iter().zip(&wp).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            // 4πk ∂_x W, spectral in x column by column.
            let kaxis = grid.second;
            let xt = mid.grid().axis_transform();
            let xfreq = mid.grid().wavenumber_axis().values();
            let cols: Vec<Vec<C64>> = (0..kaxis.len())
                .into_par_iter()
                .map(|j| {
                    let mut col: Vec<C64> = (0..n).map(|m| wm.function.values[m * n + j]).collect();
                    xt.forward(&mut col);
                    for (v, f) in col.iter_mut().zip(&xfreq) {
                        *v *= C64::new(0.0, 2.0 * PI * f);
                    }
                    xt.inverse(&mut col);
                    let k = kaxis.value(j);
                    col.iter().map(|v| 4.0 * PI * k * v).collect()
                })
                .collect();
            let tr = scatter_columns(&cols, n);
            // The nonlinear term: W(k) = Σ_K P(K) e^{2πikK} dK, i.e. the
            // inverse transform rescaled from the dual volume to dK.
            let kaxis_p = correlation_axis(mid);
            let kt = AxisTransform::new(kaxis_p);
            let rescale = kaxis_p.step() / kaxis_p.dual().step();
            let mut nl = nonlinear_p;
            nl.par_chunks_exact_mut(n).for_each(|row| {
                kt.inverse(row);
                row.iter_mut().for_each(|v| *v *= rescale);
            });
            (dt, tr, nl)
        }
    };

    let residual: Vec<C64> = time
        .iter()
        .zip(&transport)
        .zip(&nonlinear)
        .map(|((a, b), c)| a + b + c)
        .collect();
    let norms = match form {
        WignerForm::Eq3 => {
            let t = mid.grid().axis_transform();
            [
                fl_inf_from_partial(&residual, t),
                fl_inf_from_partial(&time, t),
                fl_inf_from_partial(&transport, t),
                fl_inf_from_partial(&nonlinear, t),
            ]
        }
        WignerForm::Eq1 => {
            let grid = PhaseGrid::new(axis, correlation_axis(mid).dual());
            [
                fl_inf_of_function(&grid, residual),
                fl_inf_of_function(&grid, time),
                fl_inf_of_function(&grid, transport),
                fl_inf_of_function(&grid, nonlinear),
            ]
        }
    };
    let scale = norms[1].max(norms[2]).max(norms[3]).max(f64::MIN_POSITIVE);
    Ok(WignerResidual {
        form,
        relative: norms[0] / scale,
        time_derivative: norms[1],
        transport: norms[2],
        nonlinear: norms[3],
    })
}

/// Finite-difference `sup|∂_K Ŵ|` and `sup|∂_X Ŵ|` over the grid.
pub fn fourier_wigner_slopes(w: &FourierWigner) -> (f64, f64) {
    let spec = &w.spectrum;
    let g = spec.grid();
    let (nx, nk) = (g.first.len(), g.second.len());
    let mut dk: f64 = 0.0;
    let mut dx: f64 = 0.0;
    for i in 0..nx {
        for j in 0..nk {
            if j + 1 < nk {
                dk = dk.max((spec.get(i, j + 1) - spec.get(i, j)).norm() / g.second.step());
            }
            if i + 1 < nx {
                dx = dx.max((spec.get(i + 1, j) - spec.get(i, j)).norm() / g.first.step());
            }
        }
    }
    (dk, dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve, DtPolicy, NLSParams, SolveOptions};
    use crate::grid::make_grid;
    use crate::initial_data::{synthesize, Envelope, WavepacketSpec};

    fn unit_gaussian(n: usize, l: f64, eps: f64) -> SampledField {
        let g = make_grid(1, n, l).unwrap();
        SampledField::from_fn(g, eps, |x| C64::new(2f64.powf(0.25) * (-PI * x[0] * x[0]).exp(), 0.0)).unwrap()
    }

    #[test]
    fn gaussian_wigner_closed_form() {
        let f = unit_gaussian(128, 6.0, 1.0);
        let w = wigner_transform(&f).unwrap();
        let err = (0..w.function.grid().len())
            .map(|i| {
                let (x, k) = w.function.grid().point(i);
                (w.function.values()[i] - 2.0 * (-2.0 * PI * (x * x + k * k)).exp()).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(w.function.imaginary_residue() < 1e-10);
    }

    #[test]
    fn marginals_and_total_mass() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.3], vec![0.4]);
        let g = make_grid(1, 512, 10.0).unwrap();
        let f = synthesize(&spec, 0.2, &g).unwrap();
        let w = wigner_transform(&f).unwrap();
        let dens = w.function.marginal_over_second();
        let err = dens
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b.norm_sqr()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!((w.function.integral() - 1.0).norm() < 1e-8);

        // ∫W dx = |ψ̂(k/ε)|²/ε.
        let eps = 0.2;
        let xm = w.function.marginal_over_first();
        let kaxis = w.function.grid().second;
        let err = xm
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let k = kaxis.value(j);
                let hat = crate::initial_data::closed_form_fourier(&spec, eps, &[k / eps]).unwrap();
                (v - hat.norm_sqr() / eps).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn fourier_wigner_matches_transformed_wigner() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![-0.2], vec![0.3]);
        let g = make_grid(1, 256, 8.0).unwrap();
        let f = synthesize(&spec, 0.25, &g).unwrap();
        let direct = fourier_wigner(&f).unwrap();
        let via = wigner_transform(&f).unwrap().function.transform();
        assert_eq!(direct.spectrum.grid(), via.grid());
        let err = direct
            .spectrum
            .values()
            .iter()
            .zip(via.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!((direct.at_origin() - 1.0).norm() < 1e-10);
        assert!((direct.spectrum.max_abs() - 1.0).abs() < 1e-10);

        // Hermitian symmetry Ŵ(-X,-K) = conj Ŵ(X,K) away from the unpaired edge.
        let gr = direct.spectrum.grid();
        let (nx, nk) = (gr.first.len(), gr.second.len());
        let mut sym: f64 = 0.0;
        for i in 1..nx {
            for j in 1..nk {
                let a = direct.spectrum.get(i, j);
                let b = direct.spectrum.get(nx - i, nk - j);
                sym = sym.max((a - b.conj()).norm());
            }
        }
        assert!(sym < 1e-12, "{sym}");
    }

    #[test]
    fn derivative_bounds() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.4], vec![0.3]);
        let g = make_grid(1, 512, 6.0).unwrap();
        let f = synthesize(&spec, 0.1, &g).unwrap();
        let w = fourier_wigner(&f).unwrap();
        let (dk, dx) = fourier_wigner_slopes(&w);
        let grad = crate::grid::gradient_norm(&f);
        let xnorm = crate::dynamics::moment_norms(&f).unwrap()[0];
        assert!(dk <= 0.1 * grad * 1.0 + 1e-6, "{dk} vs {}", 0.1 * grad);
        assert!(dx <= 2.0 * PI * xnorm + 1e-6, "{dx} vs {}", 2.0 * PI * xnorm);
    }

    #[test]
    fn delta_distance_basics() {
        let grid = PhaseGrid::new(Axis::centered(64, 0.1), Axis::centered(64, 0.1));
        let ones = FourierWigner {
            spectrum: PhaseSpectrum::from_fn(grid, |_, _| C64::new(1.0, 0.0)),
            epsilon: 0.1,
        };
        assert_eq!(delta_distance(&ones, 0.0, 0.0, 1.0).unwrap(), 0.0);

        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.5], vec![0.6]);
        let g = make_grid(1, 1024, 6.0).unwrap();
        let f = synthesize(&spec, 0.1, &g).unwrap();
        let w = fourier_wigner(&f).unwrap();
        let truth = delta_distance(&w, 0.5, 0.6, 1.0).unwrap();
        for dx0 in [-0.2, 0.0, 0.2] {
            for dk0 in [-0.2, 0.0, 0.2] {
                if dx0 == 0.0 && dk0 == 0.0 {
                    continue;
                }
                assert!(delta_distance(&w, 0.5 + dx0, 0.6 + dk0, 1.0).unwrap() > truth);
            }
        }
        let streamed = delta_distance_of_field(&f, 0.5, 0.6, 1.0, None).unwrap();
        assert!((streamed - truth).abs() < 1e-14);
    }

    #[test]
    fn transport_identity_for_free_flow() {
        let eps = 0.1;
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![-0.5], vec![0.4]);
        let g = make_grid(1, 1024, 12.0).unwrap();
        let f = synthesize(&spec, eps, &g).unwrap();
        let p = NLSParams::new(eps, 1.0, 0.0).unwrap();
        let traj = solve(&p, &f, 0.5, &SolveOptions::default()).unwrap();
        for s in [0.0, 1.0] {
            assert!(transport_mismatch(traj.last(), &f, 0.5, s, None).unwrap() < 1e-8);
        }
        // Interpolation-based transport agrees with the exact route.
        let w0 = fourier_wigner(&f).unwrap();
        let moved = fourier_free_transport(&w0, 0.05).unwrap();
        let exact = fourier_wigner(&free_propagate(&f, 0.05)).unwrap();
        let err = moved
            .spectrum
            .values()
            .iter()
            .zip(exact.spectrum.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn physical_transport_matches_wigner_of_free_flow() {
        let eps = 0.2;
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.2]);
        let g = make_grid(1, 512, 10.0).unwrap();
        let f = synthesize(&spec, eps, &g).unwrap();
        let w0 = wigner_transform(&f).unwrap();
        let moved = free_transport(&w0, 0.05).unwrap();
        let exact = wigner_transform(&free_propagate(&f, 0.05)).unwrap();
        let err = moved
            .function
            .values()
            .iter()
            .zip(exact.function.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        let same = free_transport(&w0, 0.0).unwrap();
        assert_eq!(same.function.values(), w0.function.values());
    }

    #[test]
    fn transport_group_law() {
        let grid = PhaseGrid::new(Axis::centered(256, 0.125), Axis::centered(128, 0.02));
        let f = PhaseSpaceFunction::from_fn(grid, |x, k| C64::new((-PI * (x * x + (k / 0.2).powi(2))).exp(), 0.0));
        let a = free_transport_function(&free_transport_function(&f, 0.3).unwrap(), 0.4).unwrap();
        let b = free_transport_function(&f, 0.7).unwrap();
        let err = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn residuals_small_for_free_flow() {
        let eps = 0.1;
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.3]);
        let g = make_grid(1, 1024, 16.0).unwrap();
        let f = synthesize(&spec, eps, &g).unwrap();
        let p = NLSParams::new(eps, 1.0, 0.0).unwrap();
        let o = SolveOptions::default().with_dt(DtPolicy::Fixed(1e-4)).with_stride(2);
        let traj = solve(&p, &f, 0.0006, &o).unwrap();
        for form in [WignerForm::Eq1, WignerForm::Eq3] {
            let r = wigner_equation_residual(&traj, 1, form).unwrap();
            assert!(r.relative < 1e-4, "{form:?}: {r:?}");
        }
    }

    fn nonlinear_run(dt: f64) -> Trajectory {
        let eps = 0.1;
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.3]);
        let g = make_grid(1, 1024, 16.0).unwrap();
        let f = synthesize(&spec, eps, &g).unwrap();
        let p = NLSParams::new(eps, 1.0, eps * eps).unwrap();
        let o = SolveOptions::default().with_dt(DtPolicy::Fixed(dt)).with_stride(2);
        solve(&p, &f, 4.0 * dt, &o).unwrap()
    }

    #[test]
    fn nonlinear_residual_converges_with_dt() {
        let coarse = wigner_equation_residual(&nonlinear_run(1e-4), 1, WignerForm::Eq3).unwrap();
        let fine = wigner_equation_residual(&nonlinear_run(2.5e-5), 1, WignerForm::Eq3).unwrap();
        assert!(fine.nonlinear > 0.0);
        assert!(fine.relative < 1e-3, "{fine:?}");
        assert!(fine.relative < coarse.relative, "{coarse:?} {fine:?}");

        let traj = nonlinear_run(2.5e-5);
        let eq1 = wigner_equation_residual(&traj, 1, WignerForm::Eq1).unwrap();
        assert!(
            (eq1.relative - fine.relative).abs() <= 0.1 * fine.relative,
            "{eq1:?} {fine:?}"
        );

        // The opposite sign on the nonlinear term does not balance.
        let flipped = assemble_residual(&traj, 1, WignerForm::Eq1, -1.0).unwrap();
        assert!(flipped.relative > 100.0 * eq1.relative, "{flipped:?}");
    }

    #[test]
    fn residual_needs_neighbours() {
        let f = unit_gaussian(128, 4.0, 0.1);
        let p = NLSParams::new(0.1, 1.0, 0.0).unwrap();
        let traj = solve(&p, &f, 0.001, &SolveOptions::default()).unwrap();
        assert!(wigner_equation_residual(&traj, 0, WignerForm::Eq3).is_err());
    }

    #[test]
    fn two_dimensional_fields_are_rejected() {
        let g = make_grid(2, 64, 4.0).unwrap();
        let f = SampledField::from_fn(g, 0.1, |_| C64::new(1.0, 0.0)).unwrap();
        assert!(matches!(wigner_transform(&f), Err(Error::Unsupported(_))));
        assert!(matches!(fourier_wigner(&f), Err(Error::Unsupported(_))));
    }
}
