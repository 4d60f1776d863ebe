//! Experiment configuration: a flat `key = value` file describing one
//! ε-sweep.
//!
//! ```text
//! dim = 1
//! sigma = 1
//! b_coefficient = 1
//! b_exponent = 1.5
//! focusing = true
//! epsilons = 0.2, 0.1, 0.05, 0.025
//! family = coherent_state
//! width = 3.5449
//! t_end = 1
//! metrics = delta_distance_s1, transport_mismatch_s1
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use serde::{Deserialize, Serialize};

use crate::dynamics::{BSchedule, DtPolicy};
use crate::error::{Error, Result};
use crate::fit::{DEFAULT_SLOPE_THRESHOLD, MIN_FIT_POINTS};
use crate::initial_data::{Envelope, Family, WavepacketSpec};

/// Per-ε quantities a sweep can record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DeltaDistanceS0,
    DeltaDistanceS1,
    TransportMismatchS0,
    TransportMismatchS1,
    A0Growth,
    KineticBound,
    NarrowbandPersistence,
    MomentDrift,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::DeltaDistanceS0,
        Metric::DeltaDistanceS1,
        Metric::TransportMismatchS0,
        Metric::TransportMismatchS1,
        Metric::A0Growth,
        Metric::KineticBound,
        Metric::NarrowbandPersistence,
        Metric::MomentDrift,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::DeltaDistanceS0 => "delta_distance_s0",
            Metric::DeltaDistanceS1 => "delta_distance_s1",
            Metric::TransportMismatchS0 => "transport_mismatch_s0",
            Metric::TransportMismatchS1 => "transport_mismatch_s1",
            Metric::A0Growth => "a0_growth",
            Metric::KineticBound => "kinetic_bound",
            Metric::NarrowbandPersistence => "narrowband_persistence",
            Metric::MomentDrift => "moment_drift",
        }
    }

    /// Whether the metric needs the one-dimensional phase-space machinery.
    pub fn needs_phase_space(&self) -> bool {
        matches!(
            self,
            Metric::DeltaDistanceS0
                | Metric::DeltaDistanceS1
                | Metric::TransportMismatchS0
                | Metric::TransportMismatchS1
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric '{s}'")))
    }
}

/// How long each sweep point is evolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Fixed(f64),
    /// `T(ε) = ε^{(β-1)/2}`, growing as ε → 0.
    LongTime,
}

impl Horizon {
    pub fn at(&self, epsilon: f64, beta: f64) -> f64 {
        match self {
            Horizon::Fixed(t) => *t,
            Horizon::LongTime => epsilon.powf(0.5 * (beta - 1.0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub dim: usize,
    pub sigma: f64,
    pub schedule: BSchedule,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub data: WavepacketSpec,
    pub horizon: Horizon,
    pub dt: DtPolicy,
    pub frame_stride: usize,
    pub metrics: Vec<Metric>,
    /// Fixed domain half-width; chosen per ε when absent.
    pub half_width: Option<f64>,
    /// Fixed points per axis; chosen per ε when absent.
    pub points: Option<usize>,
    pub max_points: usize,
    /// Restrict Fourier–Wigner distances to `|K| ≤ window`.
    pub window: Option<f64>,
    pub slope_threshold: f64,
}

/// Largest automatically chosen grid, per axis.
pub const DEFAULT_MAX_POINTS: usize = 1 << 14;

impl RegimeConfig {
    pub fn new(dim: usize, sigma: f64, schedule: BSchedule, epsilons: Vec<f64>, data: WavepacketSpec) -> Self {
        Self {
            dim,
            sigma,
            schedule,
            epsilons,
            data,
            horizon: Horizon::Fixed(1.0),
            dt: DtPolicy::default(),
            frame_stride: 10,
            metrics: Vec::new(),
            half_width: None,
            points: None,
            max_points: DEFAULT_MAX_POINTS,
            window: None,
            slope_threshold: DEFAULT_SLOPE_THRESHOLD,
        }
    }

    pub fn with_metrics(mut self, metrics: &[Metric]) -> Self {
        self.metrics = metrics.to_vec();
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    /// Checks needed to classify the schedule: any dimension up to 3.
    pub fn validate_schedule(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.schedule.coefficient > 0.0 && self.schedule.coefficient.is_finite()) {
            return bad(format!(
                "b_coefficient must be positive, got {}",
                self.schedule.coefficient
            ));
        }
        if self.epsilons.len() < MIN_FIT_POINTS {
            return bad(format!(
                "need at least {MIN_FIT_POINTS} epsilon values, got {}",
                self.epsilons.len()
            ));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("epsilon values must be positive".into());
        }
        if !self.epsilons.windows(2).all(|w| w[1] < w[0]) {
            return bad("epsilon values must be strictly decreasing".into());
        }
        Ok(())
    }

    /// Full validation for running a sweep (one or two dimensions).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.validate_schedule()?;
        if self.dim > 2 {
            return bad(format!("simulations support 1 or 2 dimensions, got {}", self.dim));
        }
        if self.data.dim() != self.dim {
            return bad(format!(
                "initial data is {}-dimensional but dim = {}",
                self.data.dim(),
                self.dim
            ));
        }
        self.data.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Horizon::Fixed(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("t_end must be positive, got {t}"));
            }
        }
        match self.dt {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("dt must be positive, got {dt}"))
            }
            DtPolicy::Auto { safety } if !(safety > 0.0 && safety.is_finite()) => {
                return bad(format!("dt_safety must be positive, got {safety}"))
            }
            _ => {}
        }
        if self.frame_stride == 0 {
            return bad("frame_stride must be at least 1".into());
        }
        if self.dim > 1 {
            if let Some(m) = self.metrics.iter().find(|m| m.needs_phase_space()) {
                return bad(format!("metric {m} is only available in one dimension"));
            }
        }
        if !self.max_points.is_power_of_two() || self.max_points < crate::grid::MIN_POINTS {
            return bad(format!(
                "max_points must be a power of two ≥ {}",
                crate::grid::MIN_POINTS
            ));
        }
        if let Some(w) = self.window {
            if !(w > 0.0) {
                return bad(format!("window must be positive, got {w}"));
            }
        }
        if !(self.slope_threshold > 0.0) {
            return bad(format!(
                "slope_threshold must be positive, got {}",
                self.slope_threshold
            ));
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut keys = Keys::default();
        for (section, props) in ini.iter() {
            if let Some(s) = section {
                return Err(Error::Config(format!("sections are not supported (found [{s}])")));
            }
            for (k, v) in props.iter() {
                keys.entries.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
            }
        }
        let cfg = keys.build()?;
        keys.reject_unknown()?;
        if cfg.dim <= 2 {
            cfg.validate()?;
        } else {
            cfg.validate_schedule()?;
        }
        Ok(cfg)
    }

    /// Flat `key = value` text that [`RegimeConfig::parse`] reads back.
    pub fn to_config_string(&self) -> String {
        let mut out = Vec::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        out.push(format!("dim = {}", self.dim));
        out.push(format!("sigma = {:?}", self.sigma));
        out.push(format!("b_coefficient = {:?}", self.schedule.coefficient));
        out.push(format!("b_exponent = {:?}", self.schedule.exponent));
        out.push(format!("focusing = {}", self.schedule.focusing));
        out.push(format!("epsilons = {}", list(&self.epsilons)));
        out.push(format!("family = {}", self.data.family.name()));
        match &self.data.family {
            Family::Wavepacket { envelope, width } | Family::CoherentState { envelope, width } => {
                out.push(format!("envelope = {}", envelope_name(*envelope)));
                out.push(format!("width = {width:?}"));
            }
            Family::RadialChirp { amplitude, rate } | Family::MonoChirp { amplitude, rate } => {
                out.push(format!("chirp_amplitude = {amplitude:?}"));
                out.push(format!("chirp_rate = {rate:?}"));
            }
            Family::Wkb {
                envelope,
                width,
                curvature,
            } => {
                out.push(format!("envelope = {}", envelope_name(*envelope)));
                out.push(format!("width = {width:?}"));
                out.push(format!("curvature = {curvature:?}"));
            }
            Family::Sampled { .. } => {}
        }
        out.push(format!("beta = {:?}", self.data.beta));
        out.push(format!("position = {}", list(&self.data.position)));
        out.push(format!("wavenumber = {}", list(&self.data.wavenumber)));
        match self.horizon {
            Horizon::Fixed(t) => out.push(format!("t_end = {t:?}")),
            Horizon::LongTime => out.push("t_end = long_time".into()),
        }
        match self.dt {
            DtPolicy::Auto { safety } => {
                out.push("dt = auto".into());
                out.push(format!("dt_safety = {safety:?}"));
            }
            DtPolicy::Fixed(dt) => out.push(format!("dt = {dt:?}")),
        }
        out.push(format!("frame_stride = {}", self.frame_stride));
        let metrics: Vec<&str> = self.metrics.iter().map(|m| m.as_str()).collect();
        out.push(format!("metrics = {}", metrics.join(", ")));
        if let Some(l) = self.half_width {
            out.push(format!("half_width = {l:?}"));
        }
        if let Some(n) = self.points {
            out.push(format!("points = {n}"));
        }
        out.push(format!("max_points = {}", self.max_points));
        if let Some(w) = self.window {
            out.push(format!("window = {w:?}"));
        }
        out.push(format!("slope_threshold = {:?}", self.slope_threshold));
        out.join("\n") + "\n"
    }
}

fn envelope_name(e: Envelope) -> &'static str {
    match e {
        Envelope::Gaussian => "gaussian",
        Envelope::Sech => "sech",
    }
}

#[derive(Default)]
struct Keys {
    entries: Vec<(String, String)>,
    used: std::cell::RefCell<Vec<String>>,
}

impl Keys {
    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().push(key.to_string());
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("cannot parse {key} = '{v}'"))),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("cannot parse {key} entry '{}'", s.trim())))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    /// `auto`/`none` or a number.
    fn optional_number<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) if v.eq_ignore_ascii_case("auto") || v.eq_ignore_ascii_case("none") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("cannot parse {key} = '{v}'"))),
        }
    }

    fn reject_unknown(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().find(|(k, _)| !used.contains(k)) {
            Some((k, _)) => Err(Error::Config(format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }

    fn build(&self) -> Result<RegimeConfig> {
        let dim: usize = self.required("dim")?;
        let sigma: f64 = self.required("sigma")?;
        let coefficient: f64 = self.or("b_coefficient", 1.0)?;
        let exponent: f64 = self.required("b_exponent")?;
        let focusing: bool = self.or("focusing", false)?;
        let schedule = BSchedule::new(coefficient, exponent, focusing)?;
        let epsilons = self
            .list("epsilons")?
            .ok_or_else(|| Error::Config("missing required key 'epsilons'".into()))?;

        let envelope = match self.raw("envelope") {
            Some(v) => Envelope::parse(v)?,
            None => Envelope::Gaussian,
        };
        let width: f64 = self.or("width", 1.0)?;
        let amplitude: f64 = self.or("chirp_amplitude", 1.0)?;
        let rate: f64 = self.or("chirp_rate", 1.0)?;
        let curvature: f64 = self.or("curvature", 0.0)?;
        let family_name: String = self.required("family")?;
        let family = match family_name.to_ascii_lowercase().as_str() {
            "wavepacket" => Family::Wavepacket { envelope, width },
            "coherent_state" => Family::CoherentState { envelope, width },
            "radial_chirp" => Family::RadialChirp { amplitude, rate },
            "mono_chirp" => Family::MonoChirp { amplitude, rate },
            "wkb" => Family::Wkb {
                envelope,
                width,
                curvature,
            },
            other => return Err(Error::Config(format!("unknown family '{other}'"))),
        };
        let beta: f64 = self.or("beta", 0.5)?;
        let data_dim = dim.min(2);
        let position = self.list("position")?.unwrap_or_else(|| vec![0.0; data_dim]);
        let wavenumber = self.list("wavenumber")?.unwrap_or_else(|| vec![0.0; data_dim]);
        let data = WavepacketSpec {
            family,
            beta,
            position,
            wavenumber,
        };

        let horizon = match self.raw("t_end") {
            None => Horizon::Fixed(1.0),
            Some(v) if v.eq_ignore_ascii_case("long_time") => Horizon::LongTime,
            Some(v) => Horizon::Fixed(
                v.parse()
                    .map_err(|_| Error::Config(format!("cannot parse t_end = '{v}'")))?,
            ),
        };
        let safety: f64 = self.or("dt_safety", 0.1)?;
        let dt = match self.optional_number::<f64>("dt")? {
            Some(dt) => DtPolicy::Fixed(dt),
            None => DtPolicy::Auto { safety },
        };
        let metrics = match self.raw("metrics") {
            None => vec![Metric::TransportMismatchS1],
            Some(v) => v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(Metric::from_str)
                .collect::<Result<Vec<_>>>()?,
        };

        Ok(RegimeConfig {
            dim,
            sigma,
            schedule,
            epsilons,
            data,
            horizon,
            dt,
            frame_stride: self.or("frame_stride", 10)?,
            metrics,
            half_width: self.optional_number("half_width")?,
            points: self.optional_number("points")?,
            max_points: self.or("max_points", DEFAULT_MAX_POINTS)?,
            window: self.optional_number("window")?,
            slope_threshold: self.or("slope_threshold", DEFAULT_SLOPE_THRESHOLD)?,
        })
    }
}
