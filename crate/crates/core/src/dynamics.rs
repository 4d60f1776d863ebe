//! Strang-split pseudospectral evolution of
//! `iε ∂_t ψ + ε² Δψ - b |ψ|^{2σ} ψ = 0`, plus conserved quantities,
//! Galilean boosts and moment diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    forward_transform, gradient_norm_spectral, inverse_transform, lp_norm, spectral_shift, SampledField, SpatialGrid,
    SpectralField,
};

/// Default cap on the mass outside the central half of the box.
pub const DEFAULT_MARGIN_LIMIT: f64 = 1e-10;

/// `b(ε) = ±c·ε^γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BSchedule {
    pub coefficient: f64,
    pub exponent: f64,
    pub focusing: bool,
}

impl BSchedule {
    pub fn new(coefficient: f64, exponent: f64, focusing: bool) -> Result<Self> {
        if !(coefficient > 0.0 && coefficient.is_finite()) || !exponent.is_finite() {
            return Err(Error::Config(format!(
                "coupling schedule needs c > 0 and a finite exponent, got c = {coefficient}, gamma = {exponent}"
            )));
        }
        Ok(Self {
            coefficient,
            exponent,
            focusing,
        })
    }

    pub fn coupling(&self, epsilon: f64) -> f64 {
        let b = self.coefficient * epsilon.powf(self.exponent);
        if self.focusing {
            -b
        } else {
            b
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NLSParams {
    pub epsilon: f64,
    pub sigma: f64,
    /// Coupling; negative is focusing.
    pub b: f64,
    pub schedule: Option<BSchedule>,
}

impl NLSParams {
    pub fn new(epsilon: f64, sigma: f64, b: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            sigma,
            b,
            schedule: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_schedule(epsilon: f64, sigma: f64, schedule: BSchedule) -> Result<Self> {
        let p = Self {
            epsilon,
            sigma,
            b: schedule.coupling(epsilon),
            schedule: Some(schedule),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidInput("coupling must be finite".into()));
        }
        Ok(())
    }

    pub fn is_focusing(&self) -> bool {
        self.b < 0.0
    }

    /// Warnings for exponents outside the subcritical ranges in dimension `dim`.
    pub fn range_warnings(&self, dim: usize) -> Vec<String> {
        let n = dim as f64;
        let mut out = Vec::new();
        if self.is_focusing() && self.sigma >= 2.0 / n {
            out.push(format!(
                "focusing with sigma = {} is not mass-subcritical in {dim}D (needs sigma < {})",
                self.sigma,
                2.0 / n
            ));
        }
        if !self.is_focusing() && dim > 2 && self.sigma >= 2.0 / (n - 2.0) {
            out.push(format!(
                "defocusing with sigma = {} is not energy-subcritical in {dim}D",
                self.sigma
            ));
        }
        out
    }

    /// `|ψ|^{2σ}` with an exact path for integer σ.
    pub fn density_power(&self, modulus_sq: f64) -> f64 {
        if self.sigma == 1.0 {
            modulus_sq
        } else if self.sigma.fract() == 0.0 && self.sigma <= 8.0 {
            modulus_sq.powi(self.sigma as i32)
        } else {
            modulus_sq.powf(self.sigma)
        }
    }
}

fn free_multiplier(grid: &SpatialGrid, epsilon: f64, t: f64) -> Vec<C64> {
    (0..grid.len())
        .map(|i| C64::from_polar(1.0, -4.0 * PI * PI * grid.wavenumber_norm_sq(i) * epsilon * t))
        .collect()
}

/// Exact free evolution `T^ε(t)`: multiply the spectrum by `e^{-4π²i|k|²εt}`.
pub fn free_propagate(field: &SampledField, t: f64) -> SampledField {
    inverse_transform(&free_propagate_spectral(&forward_transform(field), t))
}

pub fn free_propagate_spectral(spec: &SpectralField, t: f64) -> SpectralField {
    let eps = spec.epsilon();
    spec.map(|k, v| {
        let k2: f64 = k.iter().map(|c| c * c).sum();
        v * C64::from_polar(1.0, -4.0 * PI * PI * k2 * eps * t)
    })
}

fn apply_nonlinear_phase(values: &mut [C64], params: &NLSParams, dt: f64) -> Result<()> {
    if params.b == 0.0 {
        return Ok(());
    }
    let rate = params.b / params.epsilon * dt;
    for v in values.iter_mut() {
        let phase = rate * params.density_power(v.norm_sqr());
        if !phase.is_finite() {
            return Err(Error::Numerical(format!(
                "nonlinear phase overflow at |psi| = {}",
                v.norm()
            )));
        }
        *v *= C64::from_polar(1.0, -phase);
    }
    Ok(())
}

/// Exact flow of the potential part: `ψ ↦ e^{-i(b/ε)|ψ|^{2σ}dt} ψ`.
pub fn nonlinear_phase_step(field: &SampledField, params: &NLSParams, dt: f64) -> Result<SampledField> {
    let mut values = field.values().to_vec();
    apply_nonlinear_phase(&mut values, params, dt)?;
    field.with_values(values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Energy {
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
}

/// Energy with potential coefficient `1/(σ+1)`, the conserved one.
pub fn energy(params: &NLSParams, field: &SampledField) -> Energy {
    energy_with_coefficient(params, field, 1.0 / (params.sigma + 1.0))
}

/// `ε²‖∇ψ‖² + coefficient·b·‖ψ‖^{2σ+2}_{L^{2σ+2}}`.
pub fn energy_with_coefficient(params: &NLSParams, field: &SampledField, coefficient: f64) -> Energy {
    let grad = gradient_norm_spectral(&forward_transform(field));
    let kinetic = params.epsilon * params.epsilon * grad * grad;
    let potential = if params.b == 0.0 {
        0.0
    } else {
        let sum: f64 = field
            .values()
            .iter()
            .map(|v| v.norm_sqr() * params.density_power(v.norm_sqr()))
            .sum();
        coefficient * params.b * sum * field.grid().cell_volume()
    };
    Energy {
        total: kinetic + potential,
        kinetic,
        potential,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConservedRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub potential: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DtPolicy {
    /// Phase-resolution heuristic with the given safety factor.
    Auto { safety: f64 },
    /// Caller-chosen step, used as given.
    Fixed(f64),
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Auto { safety: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub dt: DtPolicy,
    /// Store every `frame_stride`-th step (the final state is always stored).
    pub frame_stride: usize,
    /// Accepted relative mass drift.
    pub mass_tolerance: f64,
    /// Number of dt halvings tried before giving up.
    pub max_halvings: u32,
    /// Fail when the margin mass exceeds this; `None` only logs.
    pub margin_limit: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            dt: DtPolicy::default(),
            frame_stride: 10,
            mass_tolerance: 1e-8,
            max_halvings: 6,
            margin_limit: None,
        }
    }
}

impl SolveOptions {
    pub fn with_dt(mut self, dt: DtPolicy) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.frame_stride = stride;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: NLSParams,
    pub times: Vec<f64>,
    pub frames: Vec<SampledField>,
    pub conserved: Vec<ConservedRecord>,
    /// Step actually used (after any halvings).
    pub dt: f64,
    pub steps: usize,
    /// Largest margin mass seen over the stored frames.
    pub margin_mass: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &SpatialGrid {
        self.frames[0].grid()
    }

    pub fn initial(&self) -> &SampledField {
        &self.frames[0]
    }

    pub fn last(&self) -> &SampledField {
        self.frames.last().expect("trajectory has at least one frame")
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.conserved[0].mass;
        self.conserved
            .iter()
            .map(|r| (r.mass - m0).abs() / m0)
            .fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.conserved.iter().map(|r| r.energy))
    }

    /// Drift of the energy with an alternative potential coefficient.
    pub fn energy_drift_with_coefficient(&self, coefficient: f64) -> f64 {
        relative_drift(
            self.frames
                .iter()
                .map(|f| energy_with_coefficient(&self.params, f, coefficient).total),
        )
    }
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let e0 = values[0];
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    values.iter().map(|e| (e - e0).abs() / scale).fold(0.0, f64::max)
}

/// Smallest |k| radius (per axis, max norm) holding all but `1e-14` of the
/// spectral mass. Free substeps are exact, so only occupied modes constrain dt.
fn effective_k_max(spec: &SpectralField) -> f64 {
    let grid = spec.grid();
    let dim = grid.dim();
    let axis = grid.wavenumber_axis();
    let mut per_shell = vec![0.0; axis.len() / 2 + 1];
    let mut total = 0.0;
    for (i, v) in spec.values().iter().enumerate() {
        let k = grid.wavenumber(i);
        let r = k[..dim].iter().map(|c| c.abs()).fold(0.0, f64::max);
        let shell = ((r / axis.step()).round() as usize).min(per_shell.len() - 1);
        let m = v.norm_sqr();
        per_shell[shell] += m;
        total += m;
    }
    let mut tail = 0.0;
    for shell in (0..per_shell.len()).rev() {
        tail += per_shell[shell];
        if tail > 1e-14 * total {
            return ((shell + 1) as f64 * axis.step()).min(grid.k_max());
        }
    }
    axis.step()
}

/// Step size from the phase-resolution heuristic.
pub fn auto_dt(params: &NLSParams, field: &SampledField, safety: f64) -> f64 {
    let spec = forward_transform(field);
    let k = effective_k_max(&spec) * (field.grid().dim() as f64).sqrt();
    let free = 1.0 / (4.0 * PI * PI * params.epsilon * k * k);
    let peak = params.density_power(field.max_abs().powi(2));
    let nonlinear = if params.b != 0.0 && peak > 0.0 {
        params.epsilon / (params.b.abs() * peak)
    } else {
        f64::INFINITY
    };
    safety * 2.0 * PI * free.min(nonlinear)
}

struct StrangStepper<'a> {
    params: &'a NLSParams,
    grid: SpatialGrid,
    half: Vec<C64>,
}

impl StrangStepper<'_> {
    /// Run `steps` Strang steps of size `dt`, recording every `stride`-th
    /// state and the last one.
    fn run(
        &self,
        initial: &SampledField,
        dt: f64,
        steps: usize,
        stride: usize,
    ) -> Result<(Vec<f64>, Vec<SampledField>)> {
        let eps = initial.epsilon();
        let transform = |data: &mut Vec<C64>, inverse: bool| {
            let f = if inverse {
                inverse_transform(&SpectralField::from_parts(self.grid.clone(), std::mem::take(data), eps))
                    .into_values()
            } else {
                forward_transform(&SampledField::from_parts(self.grid.clone(), std::mem::take(data), eps)).into_values()
            };
            *data = f;
        };
        let apply_half = |data: &mut [C64]| {
            for (d, m) in data.iter_mut().zip(&self.half) {
                *d *= m;
            }
        };

        let mut times = vec![0.0];
        let mut frames = vec![initial.clone()];
        let mut state = initial.values().to_vec();
        transform(&mut state, false);
        apply_half(&mut state);
        transform(&mut state, true);
        for step in 1..=steps {
            apply_nonlinear_phase(&mut state, self.params, dt)?;
            transform(&mut state, false);
            apply_half(&mut state);
            let store = step % stride == 0 || step == steps;
            if store {
                let mut out = state.clone();
                transform(&mut out, true);
                let frame = SampledField::from_parts(self.grid.clone(), out, eps);
                if !frame.is_finite() {
                    return Err(Error::SolverFailure {
                        t: step as f64 * dt,
                        dt,
                        mass_drift: f64::NAN,
                        reason: "non-finite values".into(),
                    });
                }
                times.push(step as f64 * dt);
                frames.push(frame);
            }
            if step < steps {
                apply_half(&mut state);
                transform(&mut state, true);
            }
        }
        Ok((times, frames))
    }
}

/// Evolve `initial` to `t_end` (which may be negative) by Strang splitting
/// `free(dt/2)∘nonlinear(dt)∘free(dt/2)`.
///
/// On a non-finite state or mass drift above the tolerance the step is halved
/// and the run repeated, up to `max_halvings` times.
pub fn solve(params: &NLSParams, initial: &SampledField, t_end: f64, options: &SolveOptions) -> Result<Trajectory> {
    params.validate()?;
    if (params.epsilon - initial.epsilon()).abs() > 1e-15 * params.epsilon {
        return Err(Error::InvalidInput(format!(
            "field carries epsilon = {} but params use {}",
            initial.epsilon(),
            params.epsilon
        )));
    }
    if !t_end.is_finite() {
        return Err(Error::InvalidInput("t_end must be finite".into()));
    }
    if options.frame_stride == 0 {
        return Err(Error::InvalidInput("frame stride must be at least 1".into()));
    }
    for w in params.range_warnings(initial.grid().dim()) {
        log::warn!("{w}");
    }
    let base_dt = match options.dt {
        DtPolicy::Auto { safety } => auto_dt(params, initial, safety),
        DtPolicy::Fixed(dt) => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
            }
            let suggested = auto_dt(params, initial, 0.1);
            if dt > suggested {
                log::warn!("dt = {dt:.3e} exceeds the phase-resolution suggestion {suggested:.3e}");
            }
            dt
        }
    };

    let grid = initial.grid().clone();
    let m0 = initial.mass();
    let mut last_failure = None;
    for halving in 0..=options.max_halvings {
        let target = base_dt / 2f64.powi(halving as i32);
        let steps = ((t_end.abs() / target).ceil() as usize).max(1);
        let dt = t_end / steps as f64;
        let stride = options.frame_stride;
        let stepper = StrangStepper {
            params,
            half: free_multiplier(&grid, params.epsilon, 0.5 * dt),
            grid: grid.clone(),
        };
        let (times, frames) = match stepper.run(initial, dt, steps, stride) {
            Ok(r) => r,
            Err(e @ Error::SolverFailure { .. }) => {
                log::warn!("{e}; halving dt");
                last_failure = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let drift = frames.iter().map(|f| (f.mass() - m0).abs() / m0).fold(0.0, f64::max);
        if drift > options.mass_tolerance {
            log::warn!("mass drift {drift:.3e} at dt = {dt:.3e}; halving dt");
            last_failure = Some(Error::SolverFailure {
                t: t_end,
                dt,
                mass_drift: drift,
                reason: "mass drift above tolerance".into(),
            });
            continue;
        }
        let margin_mass = frames.iter().map(|f| f.margin_mass()).fold(0.0, f64::max);
        match options.margin_limit {
            Some(limit) if margin_mass > limit => {
                return Err(Error::MarginViolation {
                    mass: margin_mass,
                    limit,
                })
            }
            _ if margin_mass > DEFAULT_MARGIN_LIMIT => {
                log::warn!("margin mass reached {margin_mass:.3e}; enlarge the domain")
            }
            _ => {}
        }
        let conserved = times
            .iter()
            .zip(&frames)
            .map(|(t, f)| {
                let e = energy(params, f);
                ConservedRecord {
                    t: *t,
                    mass: f.mass(),
                    energy: e.total,
                    kinetic: e.kinetic,
                    potential: e.potential,
                }
            })
            .collect();
        return Ok(Trajectory {
            params: *params,
            times,
            frames,
            conserved,
            dt,
            steps,
            margin_mass,
        });
    }
    Err(last_failure.unwrap_or_else(|| Error::Numerical("solver made no attempt".into())))
}

/// Galilean boost of a field at time `t`:
/// `u(x) = ψ(x + 2vt + x₀)·e^{-i(v·x + |v|²t)/ε}`.
pub fn galilean_transform(field: &SampledField, x0: &[f64], v: &[f64], t: f64) -> Result<SampledField> {
    let grid = field.grid();
    grid.check_vector(x0, "x0")?;
    grid.check_vector(v, "v")?;
    let offset: Vec<f64> = x0.iter().zip(v).map(|(x, v)| -(x + 2.0 * v * t)).collect();
    let shifted = spectral_shift(field, &offset)?;
    let eps = field.epsilon();
    let v2: f64 = v.iter().map(|c| c * c).sum();
    let out = shifted.modulate(|x| {
        let vx: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
        C64::from_polar(1.0, -(vx + v2 * t) / eps)
    });
    Ok(out)
}

/// Apply [`galilean_transform`] to every frame at its own time.
pub fn galilean_transform_trajectory(traj: &Trajectory, x0: &[f64], v: &[f64]) -> Result<Trajectory> {
    let frames = traj
        .times
        .iter()
        .zip(&traj.frames)
        .map(|(t, f)| galilean_transform(f, x0, v, *t))
        .collect::<Result<Vec<_>>>()?;
    let margin_mass = frames.iter().map(|f| f.margin_mass()).fold(0.0, f64::max);
    if margin_mass > DEFAULT_MARGIN_LIMIT {
        return Err(Error::MarginViolation {
            mass: margin_mass,
            limit: DEFAULT_MARGIN_LIMIT,
        });
    }
    Ok(Trajectory {
        frames,
        margin_mass,
        ..traj.clone()
    })
}

/// Centre of mass `∫x_j|ψ|²dx / ∫|ψ|²dx` per axis.
pub fn first_moment(field: &SampledField) -> Result<Vec<f64>> {
    field.check_margin(DEFAULT_MARGIN_LIMIT)?;
    let grid = field.grid();
    let dim = grid.dim();
    let mut acc = vec![0.0; dim];
    let mut mass = 0.0;
    for (i, v) in field.values().iter().enumerate() {
        let p = grid.position(i);
        let m = v.norm_sqr();
        mass += m;
        for j in 0..dim {
            acc[j] += p[j] * m;
        }
    }
    Ok(acc.into_iter().map(|a| a / mass).collect())
}

/// `‖x_j ψ‖_{L²}` per axis.
pub fn moment_norms(field: &SampledField) -> Result<Vec<f64>> {
    field.check_margin(DEFAULT_MARGIN_LIMIT)?;
    let grid = field.grid();
    let dim = grid.dim();
    let mut acc = vec![0.0; dim];
    for (i, v) in field.values().iter().enumerate() {
        let p = grid.position(i);
        for j in 0..dim {
            acc[j] += p[j] * p[j] * v.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(|a| (a * grid.cell_volume()).sqrt()).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentFrame {
    pub t: f64,
    pub moments: Vec<f64>,
    /// `‖x_jψ₀‖ + ε∫₀^t ‖∇ψ‖ dτ`
    pub bound_shape: Vec<f64>,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub frames: Vec<MomentFrame>,
    /// Largest `moment / bound_shape` over frames and axes.
    pub max_ratio: f64,
}

/// Compare moment growth with the shape `‖x_jψ₀‖ + ε∫‖∇ψ‖` (trapezoid in time).
pub fn moment_growth_check(traj: &Trajectory) -> Result<MomentReport> {
    let eps = traj.params.epsilon;
    let m0 = moment_norms(traj.initial())?;
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    let mut frames = Vec::with_capacity(traj.frames.len());
    let mut max_ratio: f64 = 0.0;
    for (t, f) in traj.times.iter().zip(&traj.frames) {
        let g = gradient_norm_spectral(&forward_transform(f));
        if let Some((tp, gp)) = prev {
            integral += 0.5 * (g + gp) * (t - tp).abs();
        }
        prev = Some((*t, g));
        let moments = moment_norms(f)?;
        let bound_shape: Vec<f64> = m0.iter().map(|m| m + eps * integral).collect();
        let ratio = moments.iter().zip(&bound_shape).map(|(m, b)| m / b).fold(0.0, f64::max);
        max_ratio = max_ratio.max(ratio);
        frames.push(MomentFrame {
            t: *t,
            moments,
            bound_shape,
            ratio,
        });
    }
    Ok(MomentReport { frames, max_ratio })
}

/// Upper bound on `ε‖∇ψ(t)‖_{L²}` from energy conservation (unit mass).
///
/// Defocusing: `ε²‖∇ψ‖² ≤ E₀`. Focusing uses the Gagliardo–Nirenberg bound
/// `‖ψ‖^{2σ+2} ≤ C‖∇ψ‖^{nσ}` and Young's inequality, which needs `nσ < 2` and
/// `|b|ε^{-nσ}C·nσ/(2(σ+1)) < 1`; `None` when those fail.
pub fn kinetic_bound(params: &NLSParams, dim: usize, initial_energy: f64, gn_constant: f64) -> Option<f64> {
    if !params.is_focusing() {
        return Some(initial_energy.max(0.0).sqrt());
    }
    let ns = dim as f64 * params.sigma;
    if ns >= 2.0 {
        return None;
    }
    let scaled = params.b.abs() * params.epsilon.powf(-ns) * gn_constant / (params.sigma + 1.0);
    let lhs = 1.0 - scaled * ns / 2.0;
    if lhs <= 0.0 {
        return None;
    }
    let rhs = initial_energy + scaled * (1.0 - ns / 2.0);
    Some((rhs / lhs).max(0.0).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct KineticCheck {
    pub bound: Option<f64>,
    pub max_observed: f64,
    pub pass: bool,
}

/// `max_t ε‖∇ψ(t)‖ ≤ (1 + tolerance)·bound`.
pub fn kinetic_bound_check(traj: &Trajectory, gn_constant: f64, tolerance: f64) -> KineticCheck {
    let dim = traj.grid().dim();
    let bound = kinetic_bound(&traj.params, dim, traj.conserved[0].energy, gn_constant);
    let max_observed = traj.conserved.iter().map(|r| r.kinetic.sqrt()).fold(0.0, f64::max);
    let pass = bound.is_some_and(|b| max_observed <= (1.0 + tolerance) * b);
    KineticCheck {
        bound,
        max_observed,
        pass,
    }
}

/// `‖ψ‖_{L^{2σ+2}}^{2σ+2}`.
pub fn potential_integral(field: &SampledField, sigma: f64) -> Result<f64> {
    let p = 2.0 * sigma + 2.0;
    Ok(lp_norm(field, p)?.powf(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::initial_data::{synthesize, Envelope, WavepacketSpec};

    fn gaussian(grid: &SpatialGrid, eps: f64, alpha: f64) -> SampledField {
        SampledField::from_fn(grid.clone(), eps, |x| C64::new((-alpha * x[0] * x[0]).exp(), 0.0)).unwrap()
    }

    #[test]
    fn free_group_law_and_reversal() {
        let g = make_grid(1, 512, 16.0).unwrap();
        let f = gaussian(&g, 0.3, PI / 2.0);
        let back = free_propagate(&free_propagate(&f, 0.7), -0.7);
        assert!(back.l2_distance(&f).unwrap() < 1e-12);
        let two = free_propagate(&free_propagate(&f, 0.3), 0.4);
        let one = free_propagate(&f, 0.7);
        assert!(two.l2_distance(&one).unwrap() < 1e-12);
        let s0 = forward_transform(&f);
        let s1 = forward_transform(&one);
        for (a, b) in s0.values().iter().zip(s1.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        let eps = 0.5;
        let alpha = 1.3;
        let t = 0.8;
        let g = make_grid(1, 1024, 32.0).unwrap();
        let evolved = free_propagate(&gaussian(&g, eps, alpha), t);
        let d = C64::new(1.0, 4.0 * eps * alpha * t);
        let exact = SampledField::from_fn(g, eps, |x| (-alpha * x[0] * x[0] / d).exp() / d.sqrt()).unwrap();
        assert!(evolved.l2_distance(&exact).unwrap() < 1e-9);
    }

    #[test]
    fn nonlinear_step_properties() {
        let g = make_grid(1, 128, 8.0).unwrap();
        let f = gaussian(&g, 0.1, 1.0);
        let zero = NLSParams::new(0.1, 1.0, 0.0).unwrap();
        assert_eq!(nonlinear_phase_step(&f, &zero, 0.3).unwrap().values(), f.values());

        let p = NLSParams::new(0.1, 1.0, 0.7).unwrap();
        let stepped = nonlinear_phase_step(&f, &p, 0.3).unwrap();
        for (a, b) in stepped.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * b.norm());
        }
        let c = C64::new(0.6, 0.0);
        let plane = SampledField::from_fn(g, 0.1, |_| c).unwrap();
        let out = nonlinear_phase_step(&plane, &p, 0.3).unwrap();
        let expect = c * C64::from_polar(1.0, -(0.7 / 0.1) * 0.36 * 0.3);
        assert!(out.values().iter().all(|v| (v - expect).norm() < 1e-15));
    }

    #[test]
    fn zero_coupling_solve_is_free_flow() {
        let g = make_grid(1, 512, 16.0).unwrap();
        let f = gaussian(&g, 0.2, 1.0).normalized().unwrap();
        let p = NLSParams::new(0.2, 1.0, 0.0).unwrap();
        let traj = solve(&p, &f, 1.0, &SolveOptions::default()).unwrap();
        let err = traj.last().l2_distance(&free_propagate(&f, 1.0)).unwrap();
        assert!(err < 1e-10, "{err}");
        let e = energy(&p, traj.last());
        assert_eq!(e.total, e.kinetic);
    }

    #[test]
    fn soliton_modulus_is_stationary() {
        let g = make_grid(1, 1024, 32.0).unwrap();
        let eta: f64 = 1.0;
        let f = SampledField::from_fn(g, 1.0, |x| C64::new(2f64.sqrt() * eta / (eta * x[0]).cosh(), 0.0)).unwrap();
        assert!((f.mass() - 4.0 * eta).abs() < 1e-10);
        let p = NLSParams::new(1.0, 1.0, -1.0).unwrap();
        let opts = SolveOptions::default().with_dt(DtPolicy::Fixed(1e-3)).with_stride(100);
        let traj = solve(&p, &f, 1.0, &opts).unwrap();
        let modulus_err = traj
            .last()
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max);
        assert!(modulus_err < 1e-6, "{modulus_err}");
        // Phase rotates as e^{iη²t}.
        let centre = g_center(&traj);
        let expect = C64::new(2f64.sqrt() * eta, 0.0) * C64::from_polar(1.0, eta * eta);
        assert!((centre - expect).norm() < 1e-5, "{centre} vs {expect}");
    }

    fn g_center(traj: &Trajectory) -> C64 {
        let f = traj.last();
        f.values()[f.grid().axis().zero_index()]
    }

    #[test]
    fn strang_is_second_order() {
        let eps = 0.1;
        let g = make_grid(1, 1024, 8.0).unwrap();
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.5]);
        let f = synthesize(&spec, eps, &g).unwrap();
        let p = NLSParams::new(eps, 1.0, eps).unwrap();
        let run = |dt: f64| {
            let o = SolveOptions::default().with_dt(DtPolicy::Fixed(dt)).with_stride(100000);
            solve(&p, &f, 0.5, &o).unwrap().last().clone()
        };
        let reference = run(1.25e-4);
        let e1 = run(4e-3).l2_distance(&reference).unwrap();
        let e2 = run(2e-3).l2_distance(&reference).unwrap();
        let ratio = e1 / e2;
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn forward_backward_returns_initial_data() {
        let eps = 0.1;
        let g = make_grid(1, 512, 8.0).unwrap();
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.3]);
        let f = synthesize(&spec, eps, &g).unwrap();
        let p = NLSParams::new(eps, 1.0, -0.05).unwrap();
        let o = SolveOptions::default().with_dt(DtPolicy::Fixed(1e-3));
        let fwd = solve(&p, &f, 0.5, &o).unwrap();
        let back = solve(&p, fwd.last(), -0.5, &o).unwrap();
        assert!(back.last().l2_distance(&f).unwrap() < 1e-8);
    }

    #[test]
    fn galilean_identity_and_inverse() {
        let eps = 0.1;
        let g = make_grid(1, 1024, 16.0).unwrap();
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.3], vec![0.2]);
        let f = synthesize(&spec, eps, &g).unwrap();
        let same = galilean_transform(&f, &[0.0], &[0.0], 0.7).unwrap();
        assert!(same.l2_distance(&f).unwrap() < 1e-14);

        let (x0, v, t) = (0.4, 0.25, 0.6);
        let there = galilean_transform(&f, &[x0], &[v], t).unwrap();
        let back = galilean_transform(&there, &[-x0], &[-v], t).unwrap();
        let expect = f.modulate(|_| C64::from_polar(1.0, v * x0 / eps));
        assert!(back.l2_distance(&expect).unwrap() < 1e-8);
    }

    #[test]
    fn moments() {
        let g = make_grid(1, 512, 16.0).unwrap();
        let f = gaussian(&g, 0.1, 1.0).normalized().unwrap();
        assert!(first_moment(&f).unwrap()[0].abs() < 1e-10);

        // ‖xψ(t)‖² = M/(4α) + 4Mε²α t² for the free Gaussian e^{-αx²}.
        let (eps, alpha) = (0.5, 1.0);
        let g = make_grid(1, 1024, 32.0).unwrap();
        let f0 = gaussian(&g, eps, alpha);
        let m = f0.mass();
        for t in [0.0, 0.5, 1.0] {
            let x2 = moment_norms(&free_propagate(&f0, t)).unwrap()[0].powi(2);
            let exact = m / (4.0 * alpha) + 4.0 * m * eps * eps * alpha * t * t;
            assert!((x2 - exact).abs() < 1e-8, "{x2} vs {exact}");
        }
    }

    #[test]
    fn coherent_state_centre_moves_at_twice_the_carrier() {
        let eps = 0.05;
        let k0 = 0.5;
        let g = make_grid(1, 4096, 16.0).unwrap();
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![-1.0], vec![k0]);
        let f = synthesize(&spec, eps, &g).unwrap();
        let p = NLSParams::new(eps, 1.0, 0.0).unwrap();
        let traj = solve(&p, &f, 1.0, &SolveOptions::default()).unwrap();
        let x1 = first_moment(traj.last()).unwrap()[0];
        let velocity = x1 - (-1.0);
        assert!((velocity / (2.0 * k0) - 1.0).abs() < 0.02, "{velocity}");
        let report = moment_growth_check(&traj).unwrap();
        assert!(report.max_ratio.is_finite() && report.max_ratio > 0.0);
    }

    #[test]
    fn defocusing_kinetic_bound() {
        let eps = 0.05;
        let g = make_grid(1, 2048, 8.0).unwrap();
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.0]);
        let f = synthesize(&spec, eps, &g).unwrap();
        let p = NLSParams::new(eps, 1.0, eps.sqrt()).unwrap();
        let traj = solve(&p, &f, 1.0, &SolveOptions::default()).unwrap();
        let check = kinetic_bound_check(&traj, 0.0, 0.05);
        assert!(check.pass, "{check:?}");
    }

    #[test]
    fn schedules() {
        let s = BSchedule::new(1.0, 1.5, true).unwrap();
        assert!((s.coupling(0.04) + 0.008).abs() < 1e-15);
        assert!(BSchedule::new(0.0, 1.0, false).is_err());
        let p = NLSParams::from_schedule(0.1, 1.0, BSchedule::new(2.0, 2.0, false).unwrap()).unwrap();
        assert!((p.b - 0.02).abs() < 1e-15);
        assert!(NLSParams::new(0.0, 1.0, 0.0).is_err());
        assert!(!NLSParams::new(0.1, 2.5, -1.0).unwrap().range_warnings(1).is_empty());
    }
}
