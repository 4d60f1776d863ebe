//! Log-log least-squares fits used to turn ε-sweeps into trend verdicts.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default slope cutoff separating "decaying" from "bounded".
pub const DEFAULT_SLOPE_THRESHOLD: f64 = 0.1;

/// Minimum number of usable rows for a fit.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decaying,
    Bounded,
    Growing,
}

impl Trend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trend::Decaying => "decaying",
            Trend::Bounded => "bounded",
            Trend::Growing => "growing",
        }
    }
}

/// Result of fitting `log value = slope·log ε + intercept`.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// ε values whose metric was non-positive or non-finite and was dropped.
    pub excluded: Vec<f64>,
}

impl DecayFit {
    pub fn trend(&self, threshold: f64) -> Trend {
        if self.slope > threshold {
            Trend::Decaying
        } else if self.slope.abs() <= threshold {
            Trend::Bounded
        } else {
            Trend::Growing
        }
    }
}

/// Fit a power law to `(epsilon, value)` rows.
pub fn fit_decay_exponent(rows: &[(f64, f64)]) -> Result<DecayFit> {
    let mut excluded = Vec::new();
    let mut pts = Vec::with_capacity(rows.len());
    for &(eps, v) in rows {
        if eps > 0.0 && v > 0.0 && eps.is_finite() && v.is_finite() {
            pts.push((eps.ln(), v.ln()));
        } else {
            excluded.push(eps);
        }
    }
    if !excluded.is_empty() {
        log::warn!("dropping {} non-positive rows from fit", excluded.len());
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidInput(
            "fit needs at least two distinct epsilon values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
        excluded,
    })
}

/// True when every successive value is strictly smaller than the previous one.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
