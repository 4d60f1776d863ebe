//! Concrete initial-data families, their closed-form spectra, and wavepacket
//! diagnostics.
//!
//! Every family is a centered profile `u(x)` placed at `X₀` with carrier
//! `K₀`: `ψ₀(x) = u(x - X₀)·e^{iK₀·(x - X₀)/ε}`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_decay_exponent, DecayFit, Trend, DEFAULT_SLOPE_THRESHOLD};
use crate::grid::{forward_transform, sobolev_norm, SampledField, SpatialGrid};

/// Unit-L² envelope profiles with closed-form transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// `(2/w²)^{n/4} e^{-π|x|²/w²}`
    Gaussian,
    /// `∏ (2w)^{-1/2} sech(x_j/w)`
    Sech,
}

impl Envelope {
    pub fn value(&self, x: &[f64], width: f64) -> f64 {
        let n = x.len() as f64;
        match self {
            Envelope::Gaussian => {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                (2.0 / (width * width)).powf(n / 4.0) * (-PI * r2 / (width * width)).exp()
            }
            Envelope::Sech => x
                .iter()
                .map(|c| (2.0 * width).powf(-0.5) / (c / width).cosh())
                .product(),
        }
    }

    pub fn transform(&self, k: &[f64], width: f64) -> f64 {
        let n = k.len() as f64;
        match self {
            Envelope::Gaussian => {
                let k2: f64 = k.iter().map(|c| c * c).sum();
                (2.0 * width * width).powf(n / 4.0) * (-PI * width * width * k2).exp()
            }
            Envelope::Sech => k
                .iter()
                .map(|c| (2.0 * width).powf(-0.5) * width * PI / (PI * PI * width * c).cosh())
                .product(),
        }
    }

    /// Radius beyond which the profile is below double precision.
    fn support_radius(&self, width: f64) -> f64 {
        match self {
            Envelope::Gaussian => 4.0 * width,
            Envelope::Sech => 40.0 * width,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Envelope::Gaussian),
            "sech" => Ok(Envelope::Sech),
            other => Err(Error::Config(format!("unknown envelope '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `ε^{-nβ/2} a(x/ε^β)`
    Wavepacket { envelope: Envelope, width: f64 },
    /// Gaussian of scale `ε^β` with the chirp `e^{-iπz|x|²/(2ε)}` in every direction.
    RadialChirp { amplitude: f64, rate: f64 },
    /// Same Gaussian with the chirp only along the first axis.
    MonoChirp { amplitude: f64, rate: f64 },
    /// `ε^{-n/4} a(x/√ε)`, i.e. a wavepacket with β = 1/2.
    CoherentState { envelope: Envelope, width: f64 },
    /// WKB data `a(x/w)·e^{iS(x)/ε}` with `S(x) = curvature·|x|²/2`.
    Wkb {
        envelope: Envelope,
        width: f64,
        curvature: f64,
    },
    /// Caller-supplied amplitude and phase samples, `a·e^{iS/ε}`.
    Sampled { amplitude: Vec<f64>, phase: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Wavepacket { .. } => "wavepacket",
            Family::RadialChirp { .. } => "radial_chirp",
            Family::MonoChirp { .. } => "mono_chirp",
            Family::CoherentState { .. } => "coherent_state",
            Family::Wkb { .. } => "wkb",
            Family::Sampled { .. } => "sampled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavepacketSpec {
    pub family: Family,
    /// Envelope scale exponent β ∈ [0, 1). Ignored by the coherent-state family.
    pub beta: f64,
    pub position: Vec<f64>,
    /// Carrier `K₀`, applied as `e^{iK₀·x/ε}`.
    pub wavenumber: Vec<f64>,
}

impl WavepacketSpec {
    pub fn new(family: Family, beta: f64, dim: usize) -> Self {
        Self {
            family,
            beta,
            position: vec![0.0; dim],
            wavenumber: vec![0.0; dim],
        }
    }

    pub fn coherent_state(envelope: Envelope, width: f64, position: Vec<f64>, wavenumber: Vec<f64>) -> Self {
        Self {
            family: Family::CoherentState { envelope, width },
            beta: 0.5,
            position,
            wavenumber,
        }
    }

    pub fn at(mut self, position: Vec<f64>, wavenumber: Vec<f64>) -> Self {
        self.position = position;
        self.wavenumber = wavenumber;
        self
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn effective_beta(&self) -> f64 {
        match self.family {
            Family::CoherentState { .. } => 0.5,
            _ => self.beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.position.len() != self.wavenumber.len() || !(1..=2).contains(&self.position.len()) {
            return bad("position and wavenumber must both have 1 or 2 components".into());
        }
        if self.position.iter().chain(&self.wavenumber).any(|v| !v.is_finite()) {
            return bad("position and wavenumber must be finite".into());
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1), got {}", self.beta));
        }
        match &self.family {
            Family::Wavepacket { width, .. } | Family::CoherentState { width, .. } | Family::Wkb { width, .. } => {
                if !(*width > 0.0 && width.is_finite()) {
                    return bad(format!("envelope width must be positive, got {width}"));
                }
            }
            Family::RadialChirp { amplitude, rate } | Family::MonoChirp { amplitude, rate } => {
                if !(*amplitude > 0.0 && amplitude.is_finite()) {
                    return bad(format!("chirp amplitude must be positive, got {amplitude}"));
                }
                if *rate == 0.0 || !rate.is_finite() {
                    return bad("chirp rate must be finite and non-zero".into());
                }
            }
            Family::Sampled { amplitude, phase } => {
                if amplitude.len() != phase.len() {
                    return bad("sampled amplitude and phase differ in length".into());
                }
            }
        }
        Ok(())
    }

    /// Length scale of the envelope at this ε.
    fn envelope_scale(&self, epsilon: f64) -> f64 {
        let scale = epsilon.powf(self.effective_beta());
        match &self.family {
            Family::Wavepacket { width, .. } | Family::CoherentState { width, .. } => width * scale,
            Family::RadialChirp { amplitude, .. } | Family::MonoChirp { amplitude, .. } => scale / amplitude.sqrt(),
            Family::Wkb { width, .. } => *width,
            Family::Sampled { .. } => f64::INFINITY,
        }
    }

    /// Radius outside which the centered profile is negligible.
    pub fn support_radius(&self, epsilon: f64) -> f64 {
        let s = self.envelope_scale(epsilon);
        match &self.family {
            Family::Wavepacket { envelope, .. }
            | Family::CoherentState { envelope, .. }
            | Family::Wkb { envelope, .. } => envelope.support_radius(s),
            _ => 8.0 * s,
        }
    }

    /// Largest local oscillation rate of the phase, in units of `1/ε`.
    fn phase_rate(&self, radius: f64) -> f64 {
        let k0 = self.wavenumber.iter().map(|c| c * c).sum::<f64>().sqrt();
        let chirp = match &self.family {
            Family::RadialChirp { rate, .. } | Family::MonoChirp { rate, .. } => rate.abs() * radius,
            Family::Wkb { curvature, .. } => curvature.abs() * radius,
            _ => 0.0,
        };
        k0 + chirp
    }

    /// Largest spacing resolving both the envelope and phase scales.
    pub fn required_spacing(&self, epsilon: f64, half_width: f64, factor: f64) -> f64 {
        let envelope = factor * self.envelope_scale(epsilon);
        let radius = half_width.min(self.support_radius(epsilon));
        let rate = self.phase_rate(radius);
        let phase = if rate > 0.0 {
            factor * epsilon / rate
        } else {
            f64::INFINITY
        };
        envelope.min(phase)
    }
}

/// Default fraction of the finest scale allowed per grid cell.
pub const RESOLUTION_FACTOR: f64 = 1.0 / 8.0;

/// Smallest power-of-two point count on `[-L, L)` meeting the resolution rule.
pub fn required_points(spec: &WavepacketSpec, epsilon: f64, half_width: f64) -> usize {
    let dx = spec.required_spacing(epsilon, half_width, RESOLUTION_FACTOR);
    if !dx.is_finite() {
        return crate::grid::MIN_POINTS;
    }
    ((2.0 * half_width / dx).ceil() as usize)
        .next_power_of_two()
        .max(crate::grid::MIN_POINTS)
}

fn check_resolution(spec: &WavepacketSpec, epsilon: f64, grid: &SpatialGrid, factor: f64) -> Result<()> {
    let need = spec.required_spacing(epsilon, grid.half_width(), factor);
    if grid.dx() > need * (1.0 + 1e-12) {
        let dx = need.min(2.0 * grid.half_width());
        return Err(Error::UnderResolved {
            what: format!("{} at epsilon = {epsilon}", spec.family.name()),
            required_points: ((2.0 * grid.half_width() / dx).ceil() as usize)
                .next_power_of_two()
                .max(crate::grid::MIN_POINTS),
        });
    }
    Ok(())
}

/// Centered profile `u(x)` before placement, with unit continuum norm.
fn profile(spec: &WavepacketSpec, epsilon: f64, x: &[f64]) -> C64 {
    let n = x.len() as f64;
    let beta = spec.effective_beta();
    let scale = epsilon.powf(beta);
    match &spec.family {
        Family::Wavepacket { envelope, width } | Family::CoherentState { envelope, width } => {
            let y: Vec<f64> = x.iter().map(|c| c / scale).collect();
            C64::new(scale.powf(-n / 2.0) * envelope.value(&y, *width), 0.0)
        }
        Family::RadialChirp { amplitude, rate } => {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            chirp_gaussian(*amplitude, scale, n, r2) * C64::from_polar(1.0, -0.5 * PI * rate * r2 / epsilon)
        }
        Family::MonoChirp { amplitude, rate } => {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            chirp_gaussian(*amplitude, scale, n, r2) * C64::from_polar(1.0, -0.5 * PI * rate * x[0] * x[0] / epsilon)
        }
        Family::Wkb {
            envelope,
            width,
            curvature,
        } => {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            C64::from_polar(envelope.value(x, *width), 0.5 * curvature * r2 / epsilon)
        }
        Family::Sampled { .. } => unreachable!("sampled data has no profile function"),
    }
}

/// `A^{-n/4}(A/ε^β)^{n/2} e^{-πA|x|²/(2ε^{2β})}`; the `A^{-n/4}` restores unit mass.
fn chirp_gaussian(amplitude: f64, scale: f64, n: f64, r2: f64) -> C64 {
    let pref = amplitude.powf(-n / 4.0) * (amplitude / scale).powf(n / 2.0);
    C64::new(pref * (-0.5 * PI * amplitude * r2 / (scale * scale)).exp(), 0.0)
}

/// Sample the family on `grid`, returning the field (unit discrete norm) and
/// the renormalization factor that was applied.
pub fn synthesize_with_factor(spec: &WavepacketSpec, epsilon: f64, grid: &SpatialGrid) -> Result<(SampledField, f64)> {
    synthesize_at_resolution(spec, epsilon, grid, RESOLUTION_FACTOR)
}

/// [`synthesize_with_factor`] with a caller-chosen fraction of the finest
/// scale per cell. Values above the default must be justified by the caller,
/// e.g. by checking the spectral tail of the result.
pub fn synthesize_at_resolution(
    spec: &WavepacketSpec,
    epsilon: f64,
    grid: &SpatialGrid,
    resolution: f64,
) -> Result<(SampledField, f64)> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "resolution factor must be positive, got {resolution}"
        )));
    }
    spec.validate()?;
    if spec.dim() != grid.dim() {
        return Err(Error::InvalidInput(format!(
            "spec is {}-dimensional but the grid is {}-dimensional",
            spec.dim(),
            grid.dim()
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut field = match &spec.family {
        Family::Sampled { amplitude, phase } => {
            if amplitude.len() != grid.len() {
                return Err(Error::InvalidInput(format!(
                    "sampled data has {} points, grid has {}",
                    amplitude.len(),
                    grid.len()
                )));
            }
            let values = amplitude
                .iter()
                .zip(phase)
                .map(|(a, s)| C64::from_polar(*a, s / epsilon))
                .collect();
            SampledField::new(grid.clone(), values, epsilon)?
        }
        _ => {
            check_resolution(spec, epsilon, grid, resolution)?;
            let x0 = &spec.position;
            let k0 = &spec.wavenumber;
            SampledField::from_fn(grid.clone(), epsilon, |x| {
                let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
                let carrier: f64 = y.iter().zip(k0).map(|(a, b)| a * b).sum();
                profile(spec, epsilon, &y) * C64::from_polar(1.0, carrier / epsilon)
            })?
        }
    };
    let factor = field.normalize()?;
    Ok((field, factor))
}

/// Sample the family on `grid` with unit discrete L² norm.
pub fn synthesize(spec: &WavepacketSpec, epsilon: f64, grid: &SpatialGrid) -> Result<SampledField> {
    synthesize_with_factor(spec, epsilon, grid).map(|(f, _)| f)
}

/// `‖∇ψ₀‖_{L²}` for product-form data in any dimension, from one
/// one-dimensional factor per axis (every factor has unit mass).
pub fn separable_gradient_norm(spec: &WavepacketSpec, epsilon: f64) -> Result<f64> {
    if !matches!(
        spec.family,
        Family::Wavepacket { .. } | Family::CoherentState { .. } | Family::RadialChirp { .. }
    ) {
        return Err(Error::Unsupported(format!(
            "{} data is not a product of one-dimensional factors",
            spec.family.name()
        )));
    }
    let mut sum = 0.0;
    for (&x0, &k0) in spec.position.iter().zip(&spec.wavenumber) {
        let factor = spec.clone().at(vec![x0], vec![k0]);
        let half_width = 2.0 * (x0.abs() + factor.support_radius(epsilon));
        let grid = SpatialGrid::new(1, required_points(&factor, epsilon, half_width), half_width)?;
        sum += crate::grid::gradient_norm(&synthesize(&factor, epsilon, &grid)?).powi(2);
    }
    Ok(sum.sqrt())
}

/// Analytic spectrum `ψ̂₀(k)` of the unit-mass family, including placement phases.
pub fn closed_form_fourier(spec: &WavepacketSpec, epsilon: f64, k: &[f64]) -> Result<C64> {
    spec.validate()?;
    if k.len() != spec.dim() {
        return Err(Error::InvalidInput("wavenumber has the wrong dimension".into()));
    }
    let n = k.len() as f64;
    let beta = spec.effective_beta();
    let scale = epsilon.powf(beta);
    // û evaluated at k - K₀/(2πε)
    let q: Vec<f64> = k
        .iter()
        .zip(&spec.wavenumber)
        .map(|(k, k0)| k - k0 / (2.0 * PI * epsilon))
        .collect();
    let centered = match &spec.family {
        Family::Wavepacket { envelope, width } | Family::CoherentState { envelope, width } => {
            let y: Vec<f64> = q.iter().map(|c| c * scale).collect();
            C64::new(scale.powf(n / 2.0) * envelope.transform(&y, *width), 0.0)
        }
        Family::RadialChirp { amplitude, rate } => {
            let denom = C64::new(*amplitude, rate * epsilon.powf(2.0 * beta - 1.0));
            let q2: f64 = q.iter().map(|c| (c * scale).powi(2)).sum();
            let pre = (C64::new(2.0 * amplitude * scale, 0.0) / denom).powf(n / 2.0);
            amplitude.powf(-n / 4.0) * pre * (C64::new(-2.0 * PI * q2, 0.0) / denom).exp()
        }
        Family::MonoChirp { amplitude, rate } => {
            let denom = C64::new(*amplitude, rate * epsilon.powf(2.0 * beta - 1.0));
            let q1 = (q[0] * scale).powi(2);
            let rest: f64 = q[1..].iter().map(|c| (c * scale).powi(2)).sum();
            let pre = scale.powf(n / 2.0) * amplitude.sqrt() * 2f64.powf(n / 2.0) / denom.sqrt();
            amplitude.powf(-n / 4.0)
                * pre
                * (C64::new(-2.0 * PI * q1, 0.0) / denom).exp()
                * (-2.0 * PI * rest / amplitude).exp()
        }
        Family::Wkb { .. } | Family::Sampled { .. } => {
            return Err(Error::Unsupported(format!(
                "no closed-form spectrum for the {} family",
                spec.family.name()
            )))
        }
    };
    let placement: f64 = k.iter().zip(&spec.position).map(|(k, x)| k * x).sum();
    Ok(centered * C64::from_polar(1.0, -2.0 * PI * placement))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WavepacketDiagnostics {
    pub l2_norm: f64,
    pub h1_norm: f64,
    /// `‖ψ̂‖_{H¹}`, i.e. `‖(1+|2πx|²)^{1/2} ψ‖_{L²}`.
    pub fourier_h1_norm: f64,
    /// `‖∇(ψ(x+X₀)e^{-iK₀·x/ε})‖_{L²}`
    pub centered_gradient: f64,
    /// `‖|x| ψ(x+X₀)e^{-iK₀·x/ε}‖_{L²}`
    pub centered_spread: f64,
    /// `‖ψ̂‖_{L¹}`
    pub a0_norm: f64,
    /// `‖∇(ψ(x+X₀)e^{-iK₀·x/ε})‖_{A⁰}`
    pub centered_gradient_a0: f64,
}

/// Wavepacket diagnostics of `field` about `(X₀, K₀)`.
///
/// Translation and demodulation act on the spectrum as a phase and a shift of
/// the origin, so the centered quantities are evaluated directly with weights
/// centered at `K₀/(2πε)` in `k` and at `X₀` in `x`. This avoids carrying a
/// non-periodic carrier across the torus boundary.
pub fn classify(field: &SampledField, x0: &[f64], k0: &[f64]) -> Result<WavepacketDiagnostics> {
    let grid = field.grid();
    grid.check_vector(x0, "X0")?;
    grid.check_vector(k0, "K0")?;
    if x0.iter().any(|c| c.abs() >= grid.half_width()) {
        return Err(Error::InvalidInput("X0 lies outside the domain".into()));
    }
    let dim = grid.dim();
    let eps = field.epsilon();
    let kc: Vec<f64> = k0.iter().map(|c| c / (2.0 * PI * eps)).collect();
    let spec = forward_transform(field);

    let centered_k2 = |k: &[f64]| -> f64 { k.iter().zip(&kc).map(|(k, c)| (2.0 * PI * (k - c)).powi(2)).sum() };
    let centered_gradient = spec.weighted_sum(2.0, centered_k2).sqrt();
    let centered_gradient_a0 = spec.weighted_sum(1.0, |k| centered_k2(k).sqrt());
    let a0_norm = spec.weighted_sum(1.0, |_| 1.0);

    let mut spread = 0.0;
    let mut fourier_h1 = 0.0;
    for (i, v) in field.values().iter().enumerate() {
        let p = grid.position(i);
        let m = v.norm_sqr();
        let d2: f64 = p[..dim].iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum();
        let r2: f64 = p[..dim].iter().map(|c| c * c).sum();
        spread += d2 * m;
        fourier_h1 += (1.0 + 4.0 * PI * PI * r2) * m;
    }
    let vol = grid.cell_volume();
    Ok(WavepacketDiagnostics {
        l2_norm: field.l2_norm(),
        h1_norm: sobolev_norm(field, 1.0),
        fourier_h1_norm: (fourier_h1 * vol).sqrt(),
        centered_gradient,
        centered_spread: (spread * vol).sqrt(),
        a0_norm,
        centered_gradient_a0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WavepacketVerdict {
    /// Fit of `ε·centered_gradient` against ε.
    pub gradient_fit: DecayFit,
    /// Fit of `centered_spread` against ε.
    pub spread_fit: DecayFit,
    pub threshold: f64,
    pub is_wavepacket: bool,
}

/// Decide whether a diagnosed ε-family behaves as a generalized wavepacket:
/// both `ε·‖∇(centered)‖` and the centered spread must decay.
pub fn wavepacket_verdict(sweep: &[(f64, WavepacketDiagnostics)], threshold: Option<f64>) -> Result<WavepacketVerdict> {
    if sweep.len() < crate::fit::MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: crate::fit::MIN_FIT_POINTS,
            got: sweep.len(),
        });
    }
    if !sweep.windows(2).all(|w| w[1].0 < w[0].0) {
        return Err(Error::InvalidInput("epsilon values must be strictly decreasing".into()));
    }
    let threshold = threshold.unwrap_or(DEFAULT_SLOPE_THRESHOLD);
    let grad: Vec<(f64, f64)> = sweep.iter().map(|(e, d)| (*e, e * d.centered_gradient)).collect();
    let spread: Vec<(f64, f64)> = sweep.iter().map(|(e, d)| (*e, d.centered_spread)).collect();
    let gradient_fit = fit_decay_exponent(&grad)?;
    let spread_fit = fit_decay_exponent(&spread)?;
    let is_wavepacket =
        gradient_fit.trend(threshold) == Trend::Decaying && spread_fit.trend(threshold) == Trend::Decaying;
    Ok(WavepacketVerdict {
        gradient_fit,
        spread_fit,
        threshold,
        is_wavepacket,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inverse_transform, make_grid};

    fn max_spectral_mismatch(spec: &WavepacketSpec, eps: f64, grid: &SpatialGrid) -> f64 {
        let f = synthesize(spec, eps, grid).unwrap();
        let s = forward_transform(&f);
        let dim = grid.dim();
        s.values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = grid.wavenumber(i);
                (v - closed_form_fourier(spec, eps, &k[..dim]).unwrap()).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn beta_zero_wavepacket_is_its_envelope() {
        let g = make_grid(1, 512, 16.0).unwrap();
        let spec = WavepacketSpec::new(
            Family::Wavepacket {
                envelope: Envelope::Gaussian,
                width: 1.0,
            },
            0.0,
            1,
        );
        for eps in [0.3, 0.05] {
            let f = synthesize(&spec, eps, &g).unwrap();
            let err = f
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let x = g.position(i)[0];
                    (v - C64::new(2f64.powf(0.25) * (-PI * x * x).exp(), 0.0)).norm()
                })
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "err = {err}");
            let s0 = closed_form_fourier(&spec, eps, &[0.3]).unwrap();
            assert!((s0.re - 2f64.powf(0.25) * (-PI * 0.09f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_chirp_matches_closed_form() {
        let spec = WavepacketSpec::new(
            Family::RadialChirp {
                amplitude: 1.0,
                rate: 1.0,
            },
            0.5,
            1,
        );
        let g = make_grid(1, required_points(&spec, 0.1, 8.0), 8.0).unwrap();
        let (_, factor) = synthesize_with_factor(&spec, 0.1, &g).unwrap();
        assert!((factor - 1.0).abs() < 1e-6);
        assert!(max_spectral_mismatch(&spec, 0.1, &g) < 1e-8);
    }

    #[test]
    fn radial_chirp_origin_against_quadrature() {
        let spec = WavepacketSpec::new(
            Family::RadialChirp {
                amplitude: 1.0,
                rate: 1.0,
            },
            0.5,
            1,
        );
        let eps = 0.25f64;
        // Trapezoid rule on the defining integral; the integrand is Gaussian so
        // this converges geometrically.
        let h = 1e-3;
        let quad: C64 = (-20000..=20000)
            .map(|j| {
                let x = j as f64 * h;
                C64::new((1.0 / eps.sqrt()).sqrt(), 0.0) * (C64::new(-0.5 * PI / eps, -0.5 * PI / eps) * x * x).exp()
            })
            .sum::<C64>()
            * h;
        let closed = closed_form_fourier(&spec, eps, &[0.0]).unwrap();
        assert!((closed - quad).norm() < 1e-10, "{closed} vs {quad}");
        let expect = (2.0 * 0.5 / C64::new(1.0, 1.0).norm()).sqrt();
        assert!((closed.norm() - expect).abs() < 1e-12);
    }

    #[test]
    fn mono_chirp_factorizes() {
        let spec = WavepacketSpec::new(
            Family::MonoChirp {
                amplitude: 1.0,
                rate: 1.0,
            },
            0.5,
            2,
        );
        let eps = 0.2;
        let two_d = closed_form_fourier(&spec, eps, &[0.7, -0.4]).unwrap();
        let chirp_1d = closed_form_fourier(
            &WavepacketSpec::new(
                Family::RadialChirp {
                    amplitude: 1.0,
                    rate: 1.0,
                },
                0.5,
                1,
            ),
            eps,
            &[0.7],
        )
        .unwrap();
        let plain_1d = closed_form_fourier(
            &WavepacketSpec::new(
                Family::Wavepacket {
                    envelope: Envelope::Gaussian,
                    width: 2f64.sqrt(),
                },
                0.5,
                1,
            ),
            eps,
            &[-0.4],
        )
        .unwrap();
        assert!((two_d - chirp_1d * plain_1d).norm() < 1e-13);

        let g = make_grid(2, required_points(&spec, eps, 6.0), 6.0).unwrap();
        assert!(max_spectral_mismatch(&spec, eps, &g) < 1e-6);
    }

    #[test]
    fn placed_coherent_state_matches_closed_form() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.5], vec![0.3]);
        let g = make_grid(1, 2048, 8.0).unwrap();
        assert!(max_spectral_mismatch(&spec, 0.05, &g) < 1e-8);
        let f = synthesize(&spec, 0.05, &g).unwrap();
        let back = inverse_transform(&forward_transform(&f));
        assert!(back.l2_distance(&f).unwrap() < 1e-12);
    }

    #[test]
    fn sech_envelope_transform() {
        let spec = WavepacketSpec::new(
            Family::Wavepacket {
                envelope: Envelope::Sech,
                width: 1.0,
            },
            0.25,
            1,
        );
        let g = make_grid(1, 2048, 64.0).unwrap();
        assert!(max_spectral_mismatch(&spec, 0.1, &g) < 1e-8);
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![1.0]);
        let g = make_grid(1, 64, 8.0).unwrap();
        match synthesize(&spec, 0.01, &g) {
            Err(Error::UnderResolved { required_points, .. }) => {
                assert!(required_points > 64);
                let fine = make_grid(1, required_points, 8.0).unwrap();
                assert!(synthesize(&spec, 0.01, &fine).is_ok());
            }
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn custom_families_have_no_closed_form() {
        let spec = WavepacketSpec::new(
            Family::Wkb {
                envelope: Envelope::Gaussian,
                width: 1.0,
                curvature: 0.5,
            },
            0.0,
            1,
        );
        assert!(matches!(
            closed_form_fourier(&spec, 0.1, &[0.0]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn coherent_state_h1_scaling() {
        let eps = 0.04;
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.0]);
        let g = make_grid(1, 1024, 8.0).unwrap();
        let f = synthesize(&spec, eps, &g).unwrap();
        // ‖∇a‖² = π for the unit Gaussian envelope, so ‖∇u‖² = π/ε.
        let predicted = (1.0 + PI / eps).sqrt();
        let h1 = sobolev_norm(&f, 1.0);
        assert!((h1 / predicted - 1.0).abs() < 0.05, "{h1} vs {predicted}");
    }

    fn diag_sweep(spec: &WavepacketSpec, eps_list: &[f64]) -> Vec<(f64, WavepacketDiagnostics)> {
        eps_list
            .iter()
            .map(|&eps| {
                let l = 8.0;
                let n = required_points(spec, eps, l);
                let g = make_grid(1, n, l).unwrap();
                let f = synthesize(spec, eps, &g).unwrap();
                (eps, classify(&f, &spec.position, &spec.wavenumber).unwrap())
            })
            .collect()
    }

    #[test]
    fn verdicts() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let gauss = Family::Wavepacket {
            envelope: Envelope::Gaussian,
            width: 1.0,
        };
        let positive = WavepacketSpec::new(gauss.clone(), 0.5, 1).at(vec![0.5], vec![0.7]);
        assert!(
            wavepacket_verdict(&diag_sweep(&positive, &eps), None)
                .unwrap()
                .is_wavepacket
        );

        let broad = WavepacketSpec::new(gauss, 0.0, 1).at(vec![0.0], vec![0.7]);
        let v = wavepacket_verdict(&diag_sweep(&broad, &eps), None).unwrap();
        assert!(!v.is_wavepacket);
        assert!(v.spread_fit.slope.abs() < 1e-6);

        let chirp = WavepacketSpec::new(
            Family::MonoChirp {
                amplitude: 1.0,
                rate: 1.0,
            },
            0.3,
            1,
        );
        assert!(
            wavepacket_verdict(&diag_sweep(&chirp, &eps), None)
                .unwrap()
                .is_wavepacket
        );

        let radial = WavepacketSpec::new(
            Family::RadialChirp {
                amplitude: 1.0,
                rate: 1.0,
            },
            0.5,
            1,
        );
        let d = diag_sweep(&radial, &eps);
        assert!(d
            .windows(2)
            .all(|w| w[1].0 * w[1].1.centered_gradient < w[0].0 * w[0].1.centered_gradient));
        assert!(d.windows(2).all(|w| w[1].1.centered_spread < w[0].1.centered_spread));
    }

    #[test]
    fn classify_is_refinement_stable() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.2], vec![0.5]);
        let eps = 0.1;
        let n = required_points(&spec, eps, 8.0);
        let a = classify(
            &synthesize(&spec, eps, &make_grid(1, n, 8.0).unwrap()).unwrap(),
            &[0.2],
            &[0.5],
        )
        .unwrap();
        let b = classify(
            &synthesize(&spec, eps, &make_grid(1, 2 * n, 8.0).unwrap()).unwrap(),
            &[0.2],
            &[0.5],
        )
        .unwrap();
        for (x, y) in [
            (a.centered_gradient, b.centered_gradient),
            (a.centered_spread, b.centered_spread),
            (a.a0_norm, b.a0_norm),
            (a.h1_norm, b.h1_norm),
            (a.fourier_h1_norm, b.fourier_h1_norm),
            (a.centered_gradient_a0, b.centered_gradient_a0),
        ] {
            assert!((x / y - 1.0).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn verdict_needs_four_points() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.0]);
        let d = diag_sweep(&spec, &[0.2, 0.1, 0.05]);
        assert!(matches!(wavepacket_verdict(&d, None), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn separable_gradient_matches_the_planar_field() {
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.2, -0.1], vec![0.5, 0.3]);
        let g = SpatialGrid::new(2, 256, 4.0).unwrap();
        let direct = crate::grid::gradient_norm(&synthesize(&spec, 0.2, &g).unwrap());
        let split = separable_gradient_norm(&spec, 0.2).unwrap();
        assert!((direct - split).abs() < 1e-8 * direct, "{direct} vs {split}");
        let mono = WavepacketSpec::new(
            Family::MonoChirp {
                amplitude: 1.0,
                rate: 1.0,
            },
            0.5,
            2,
        );
        assert!(separable_gradient_norm(&mono, 0.2).is_err());
    }
}
