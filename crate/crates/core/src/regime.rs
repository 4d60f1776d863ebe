//! Which small-coupling regime a schedule `b(ε) = ±c·ε^γ` falls into, and
//! numerical lower bounds for the Gagliardo–Nirenberg constant
//! `sup ‖f‖^{2σ+2}_{L^{2σ+2}} / ‖∇f‖^{nσ}_{L²}` over unit-mass `f`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::config::RegimeConfig;
use crate::error::{Error, Result};

/// One of the three admissible coupling regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Defocusing, `σ ≤ 2/n`, `b = O(ε^{nσ/2})`.
    DefocusingSubcritical,
    /// Defocusing, `2/n < σ < 2/(n-2)₊`, small `‖∇ψ₀‖(b/ε)^{2/(nσ-2)}`.
    DefocusingSupercritical,
    /// Focusing, `σ ≤ 2/n`, `|b|ε^{-nσ}` below the Gagliardo–Nirenberg threshold.
    FocusingSubcritical,
}

impl Alternative {
    pub fn as_str(&self) -> &'static str {
        match self {
            Alternative::DefocusingSubcritical => "defocusing, mass-(sub)critical",
            Alternative::DefocusingSupercritical => "defocusing, mass-supercritical",
            Alternative::FocusingSubcritical => "focusing, mass-(sub)critical",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonRegime {
    pub epsilon: f64,
    pub coupling: f64,
    /// The alternative the exponents select, if any.
    pub alternative: Option<Alternative>,
    /// Left-hand side of the alternative's smallness condition.
    pub condition: f64,
    /// Right-hand side; `condition < threshold` (or `≤` for the O-condition).
    pub threshold: f64,
    pub holds: bool,
}

/// Comparison of `γ` against a critical exponent.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentCheck {
    pub required: f64,
    pub gamma: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeReport {
    pub dim: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub coefficient: f64,
    pub focusing: bool,
    pub per_epsilon: Vec<EpsilonRegime>,
    /// `b = o(ε^{nσ/2})` (defocusing) or `|b| = o(ε^{nσ})` (focusing).
    pub strengthened: Option<ExponentCheck>,
    /// In three dimensions `σ < 3/2` is required; `None` otherwise.
    pub dimension_three_restriction: Option<bool>,
    /// `|b| = O(ε^{1+nσ+η})` for some `η > 0`, with `σ > 1/2`.
    pub baseline: bool,
    /// `ε^{1+nσ} < |b| ≤ ε^{upper}` asymptotically.
    pub band: Band,
    pub gn_constant: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Band {
    pub lower_exponent: f64,
    pub upper_exponent: f64,
    pub inside: bool,
}

impl RegimeReport {
    pub fn all_hold(&self) -> bool {
        self.per_epsilon.iter().all(|r| r.holds)
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "n = {}, sigma = {}, b(eps) = {}{}*eps^{} ({})",
            self.dim,
            self.sigma,
            if self.focusing { "-" } else { "+" },
            self.coefficient,
            self.gamma,
            if self.focusing { "focusing" } else { "defocusing" }
        )];
        for r in &self.per_epsilon {
            out.push(match r.alternative {
                Some(a) => format!(
                    "eps = {:<8} b = {:+.4e}  {}: {:.4e} vs {:.4e} -> {}",
                    r.epsilon,
                    r.coupling,
                    a.as_str(),
                    r.condition,
                    r.threshold,
                    if r.holds { "holds" } else { "fails" }
                ),
                None => format!("eps = {:<8} no admissible alternative for these exponents", r.epsilon),
            });
        }
        if let Some(s) = &self.strengthened {
            out.push(format!(
                "strengthened o-condition: gamma = {} {} {} -> {}",
                s.gamma,
                if s.holds { ">" } else { "<=" },
                s.required,
                if s.holds { "holds" } else { "fails" }
            ));
        }
        if let Some(ok) = self.dimension_three_restriction {
            out.push(format!(
                "three-dimensional restriction sigma < 3/2: {}",
                if ok { "holds" } else { "fails" }
            ));
        }
        out.push(format!(
            "baseline regime |b| = O(eps^(1+n*sigma+eta)), sigma > 1/2: {}",
            if self.baseline { "applies" } else { "does not apply" }
        ));
        out.push(format!(
            "regime band eps^{} < |b| <= eps^{}: {}",
            self.band.lower_exponent,
            self.band.upper_exponent,
            if self.band.inside { "inside" } else { "outside" }
        ));
        if let Some(c) = self.gn_constant {
            out.push(format!("Gagliardo-Nirenberg constant (lower bound) = {c:.6}"));
        }
        out
    }
}

/// Classify the configured schedule.
///
/// `gradient_norm(ε)` supplies `‖∇ψ₀‖_{L²}` and is only called for
/// mass-supercritical defocusing problems.
pub fn classify_regime(
    config: &RegimeConfig,
    mut gradient_norm: impl FnMut(f64) -> Result<f64>,
) -> Result<RegimeReport> {
    if !(config.schedule.coefficient > 0.0) {
        return Err(Error::Config(format!(
            "inconsistent schedule: c = {} must be positive",
            config.schedule.coefficient
        )));
    }
    config.validate_schedule()?;
    let n = config.dim as f64;
    let sigma = config.sigma;
    let gamma = config.schedule.exponent;
    let ns = n * sigma;
    let focusing = config.schedule.focusing;
    let mass_subcritical = sigma <= 2.0 / n;
    let energy_subcritical = config.dim <= 2 || sigma < 2.0 / (n - 2.0);

    let gn_constant = if focusing && mass_subcritical {
        Some(gn_constant_estimate(config.dim, sigma)?.value)
    } else {
        None
    };

    let mut per_epsilon = Vec::with_capacity(config.epsilons.len());
    for &eps in &config.epsilons {
        let b = config.schedule.coupling(eps);
        let row = if focusing {
            match (mass_subcritical, gn_constant) {
                (true, Some(c)) => {
                    let condition = b.abs() * eps.powf(-ns);
                    let threshold = 2.0 / ((sigma + 1.0) * ns * c);
                    EpsilonRegime {
                        epsilon: eps,
                        coupling: b,
                        alternative: Some(Alternative::FocusingSubcritical),
                        condition,
                        threshold,
                        holds: condition < threshold,
                    }
                }
                _ => unclassified(eps, b),
            }
        } else if mass_subcritical {
            // O-condition: b ε^{-nσ/2} bounded, i.e. γ ≥ nσ/2.
            let condition = b * eps.powf(-ns / 2.0);
            EpsilonRegime {
                epsilon: eps,
                coupling: b,
                alternative: Some(Alternative::DefocusingSubcritical),
                condition,
                threshold: config.schedule.coefficient,
                holds: gamma >= ns / 2.0,
            }
        } else if energy_subcritical {
            let p = 2.0 / (ns - 2.0);
            let condition = gradient_norm(eps)? * (b / eps).powf(p);
            let threshold = (ns - 2.0) / ns * (2.0 / ns).powf(p);
            EpsilonRegime {
                epsilon: eps,
                coupling: b,
                alternative: Some(Alternative::DefocusingSupercritical),
                condition,
                threshold,
                holds: condition < threshold,
            }
        } else {
            unclassified(eps, b)
        };
        per_epsilon.push(row);
    }

    let strengthened = if !mass_subcritical {
        None
    } else if focusing {
        Some(ExponentCheck {
            required: ns,
            gamma,
            holds: gamma > ns,
        })
    } else {
        Some(ExponentCheck {
            required: ns / 2.0,
            gamma,
            holds: gamma > ns / 2.0,
        })
    };
    let upper_exponent = if focusing { ns } else { ns / 2.0 };
    let lower_exponent = 1.0 + ns;
    Ok(RegimeReport {
        dim: config.dim,
        sigma,
        gamma,
        coefficient: config.schedule.coefficient,
        focusing,
        per_epsilon,
        strengthened,
        dimension_three_restriction: (config.dim == 3).then_some(sigma < 1.5),
        baseline: gamma > lower_exponent && sigma > 0.5,
        band: Band {
            lower_exponent,
            upper_exponent,
            inside: gamma >= upper_exponent && gamma < lower_exponent,
        },
        gn_constant,
    })
}

fn unclassified(eps: f64, b: f64) -> EpsilonRegime {
    EpsilonRegime {
        epsilon: eps,
        coupling: b,
        alternative: None,
        condition: f64::NAN,
        threshold: f64::NAN,
        holds: false,
    }
}

/// Radial profile with its derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialProfile {
    /// `e^{-π r²}`
    Gaussian,
    /// `sech(r)^power`
    SechPower { power: f64 },
}

impl TrialProfile {
    fn value_and_slope(&self, r: f64) -> (f64, f64) {
        match *self {
            TrialProfile::Gaussian => {
                let g = (-PI * r * r).exp();
                (g, -2.0 * PI * r * g)
            }
            TrialProfile::SechPower { power } => {
                let s = 1.0 / r.cosh();
                let v = s.powf(power);
                (v, -power * v * r.tanh())
            }
        }
    }

    fn outer_radius(&self) -> f64 {
        match *self {
            TrialProfile::Gaussian => 8.0,
            TrialProfile::SechPower { power } => 60.0 / power,
        }
    }
}

/// Default radial quadrature size.
pub const GN_QUADRATURE_POINTS: usize = 4000;

/// `‖f‖^{2σ+2}_{2σ+2} / ‖∇f‖^{nσ}_2` for `f = λ^{n/2}g(λ|x|)/‖g‖₂`, by radial
/// trapezoid quadrature on `points` nodes.
pub fn gn_ratio(dim: usize, sigma: f64, profile: TrialProfile, scale: f64, points: usize) -> Result<f64> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if !(sigma > 0.0 && scale > 0.0) || points < 16 {
        return Err(Error::InvalidInput(
            "need sigma > 0, scale > 0 and at least 16 nodes".into(),
        ));
    }
    let n = dim as f64;
    let sphere = match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    let rmax = profile.outer_radius() / scale;
    let h = rmax / (points - 1) as f64;
    let p = 2.0 * sigma + 2.0;
    let (mut mass, mut pot, mut grad) = (0.0, 0.0, 0.0);
    for j in 0..points {
        let r = j as f64 * h;
        let (g, dg) = profile.value_and_slope(scale * r);
        let w = if j == 0 || j == points - 1 { 0.5 } else { 1.0 } * r.powi(dim as i32 - 1);
        mass += w * g * g;
        pot += w * g.abs().powf(p);
        grad += w * (scale * dg).powi(2);
    }
    let (mass, pot, grad) = (sphere * h * mass, sphere * h * pot, sphere * h * grad);
    let value = (pot / mass.powf(sigma + 1.0)) / (grad / mass).powf(0.5 * n * sigma);
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite ratio for {profile:?}")));
    }
    Ok(value)
}

#[derive(Clone, Debug, Serialize)]
pub struct GnEstimate {
    /// Best ratio found; a lower bound for the sharp constant.
    pub value: f64,
    pub best: TrialProfile,
    /// Scale at which the best ratio was reported. The ratio does not depend
    /// on it, see `scale_spread`.
    pub best_scale: f64,
    pub gaussian: f64,
    /// Ratio of `sech` itself.
    pub sech: f64,
    /// Largest relative change of the best ratio over scales in `[1/4, 4]`.
    pub scale_spread: f64,
    /// Relative change of the best ratio when the quadrature is doubled.
    pub refinement_change: f64,
    pub iterations: usize,
}

const GOLDEN_TOL: f64 = 1e-7;
const GOLDEN_MAX_ITER: usize = 200;

/// Maximize the ratio over Gaussians and `sech^p`, `p ∈ [0.05, 20]` (golden
/// section in `log p`). Every value returned is attained by a trial
/// function, so the result is a lower bound for the supremum.
///
/// For unit mass, `f ↦ λ^{n/2}f(λx)` scales numerator and denominator by the
/// same power `λ^{nσ}`, so the ratio is scale-invariant for every `σ`; the
/// estimate records the measured spread over scales instead of an optimal
/// scale.
pub fn gn_constant_estimate(dim: usize, sigma: f64) -> Result<GnEstimate> {
    gn_constant_estimate_with(dim, sigma, GN_QUADRATURE_POINTS)
}

pub fn gn_constant_estimate_with(dim: usize, sigma: f64, points: usize) -> Result<GnEstimate> {
    if dim >= 3 && sigma >= 2.0 / (dim as f64 - 2.0) {
        return Err(Error::InvalidInput(format!(
            "sigma = {sigma} is not energy-subcritical in {dim}D"
        )));
    }
    let sech_ratio = |log_p: f64| gn_ratio(dim, sigma, TrialProfile::SechPower { power: log_p.exp() }, 1.0, points);

    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.05f64.ln(), 20f64.ln());
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (sech_ratio(c)?, sech_ratio(d)?);
    let mut iterations = 0;
    while (b - a).abs() > GOLDEN_TOL {
        iterations += 1;
        if iterations > GOLDEN_MAX_ITER {
            return Err(Error::Numerical(format!(
                "golden-section search did not converge in {GOLDEN_MAX_ITER} iterations"
            )));
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = sech_ratio(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = sech_ratio(d)?;
        }
    }
    let power = (0.5 * (a + b)).exp();
    let sech_best = gn_ratio(dim, sigma, TrialProfile::SechPower { power }, 1.0, points)?;
    let gaussian = gn_ratio(dim, sigma, TrialProfile::Gaussian, 1.0, points)?;
    let sech = gn_ratio(dim, sigma, TrialProfile::SechPower { power: 1.0 }, 1.0, points)?;
    let (value, best) = if sech_best >= gaussian {
        (sech_best, TrialProfile::SechPower { power })
    } else {
        (gaussian, TrialProfile::Gaussian)
    };

    let mut scale_spread: f64 = 0.0;
    for scale in [0.25, 0.5, 2.0, 4.0] {
        let r = gn_ratio(dim, sigma, best, scale, points)?;
        scale_spread = scale_spread.max((r - value).abs() / value);
    }
    let refined = gn_ratio(dim, sigma, best, 1.0, 2 * points)?;
    Ok(GnEstimate {
        value,
        best,
        best_scale: 1.0,
        gaussian,
        sech,
        scale_spread,
        refinement_change: (refined - value).abs() / value,
        iterations,
    })
}
