//! The acceptance suite: one function per criterion, each returning a
//! pass/fail line with the measured numbers and the tolerance used.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Metric, RegimeConfig};
use crate::dynamics::{
    energy_with_coefficient, galilean_transform, moment_norms, solve, BSchedule, NLSParams, SolveOptions,
};
use crate::error::Result;
use crate::fit::strictly_decreasing;
use crate::grid::Axis;
use crate::grid::{
    forward_transform, gradient_norm, inverse_transform, make_grid, spectral_shift, SampledField, SpatialGrid,
};
use crate::initial_data::{closed_form_fourier, synthesize, Envelope, Family, WavepacketSpec};
use crate::norms::a_s_norm;
use crate::phase_space::{
    fourier_wigner, fourier_wigner_slopes, free_transport_function, wigner_transform, PhaseGrid, PhaseSpaceFunction,
};
use crate::sweep::{auto_grid, epsilon_sweep, SweepOptions, SweepResult};
use crate::tables::{reproduce_tables, resolved_initial_field, TableFamily, TablesOptions, TablesReport};

pub const DEFAULT_SEED: u64 = 7;

/// Sweep used by the concentration and transport criteria.
pub const SWEEP_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Envelope width of the coherent state in the concentration sweeps; `4π`
/// is the squared width whose free spreading at `t = 1` is smallest.
pub fn concentration_width() -> f64 {
    (4.0 * PI).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub checks: Vec<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2}: {} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.checks.join("; ")
        )
    }
}

/// Accumulates individual checks of one criterion.
struct Checks {
    pass: bool,
    lines: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn below(&mut self, label: &str, value: f64, bound: f64) {
        let ok = value < bound;
        self.record(label, format!("{value:.3e} < {bound:.0e}"), ok);
    }

    fn record(&mut self, label: &str, detail: String, ok: bool) {
        self.pass &= ok;
        self.lines
            .push(format!("{label}: {detail}{}", if ok { "" } else { " VIOLATED" }));
    }

    fn fail(&mut self, label: &str, err: impl std::fmt::Display) {
        self.pass = false;
        self.lines.push(format!("{label}: error: {err}"));
    }

    fn finish(self, id: u32, name: &'static str, start: Instant) -> CriterionResult {
        CriterionResult {
            id,
            name,
            pass: self.pass,
            checks: self.lines,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

fn max_diff<'a>(a: impl IntoIterator<Item = &'a C64>, b: impl IntoIterator<Item = C64>) -> f64 {
    a.into_iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
}

fn gaussian_field(grid: &SpatialGrid, centre: f64) -> SampledField {
    SampledField::from_fn(grid.clone(), 1.0, |x| {
        C64::new((-PI * x.iter().map(|c| (c - centre).powi(2)).sum::<f64>()).exp(), 0.0)
    })
    .expect("finite samples")
}

/// A few random Gaussian bumps with random phases, well inside the box.
fn random_bumps(grid: &SpatialGrid, rng: &mut ChaCha8Rng) -> SampledField {
    let bumps: Vec<(f64, f64, f64, C64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.5..1.5),
                rng.gen_range(-1.0..1.0),
                C64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.0 * PI)),
            )
        })
        .collect();
    SampledField::from_fn(grid.clone(), 1.0, |x| {
        bumps
            .iter()
            .map(|(c, w, k, a)| {
                let r2: f64 = x.iter().map(|v| (v - c).powi(2)).sum();
                a * (-PI * r2 / (w * w)).exp() * C64::from_polar(1.0, 2.0 * PI * k * x[0])
            })
            .sum()
    })
    .expect("finite samples")
}

/// 1. Spectral core identities.
pub fn spectral_core(seed: u64) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for dim in [1, 2] {
        let n = if dim == 1 { 512 } else { 128 };
        let grid = make_grid(dim, n, 8.0).expect("valid grid");
        let g = gaussian_field(&grid, 0.0);
        let spec = forward_transform(&g);
        let fixed = max_diff(
            spec.values(),
            (0..grid.len()).map(|i| C64::new((-PI * grid.wavenumber_norm_sq(i)).exp(), 0.0)),
        );
        c.below(&format!("{dim}D Gaussian fixed point"), fixed, 1e-12);

        let f = random_bumps(&grid, &mut rng);
        let spec = forward_transform(&f);
        let parseval = (spec.mass() - f.mass()).abs() / f.mass();
        c.below(&format!("{dim}D Parseval (relative)"), parseval, 1e-12);
        let back = inverse_transform(&spec);
        let round = max_diff(back.values(), f.values().iter().copied()) / f.max_abs();
        c.below(&format!("{dim}D round trip (relative)"), round, 1e-12);

        let offset = vec![0.37; dim];
        match spectral_shift(&g, &offset) {
            Ok(shifted) => {
                let exact = gaussian_field(&grid, 0.37);
                c.below(
                    &format!("{dim}D shift theorem"),
                    max_diff(shifted.values(), exact.values().iter().copied()),
                    1e-10,
                );
            }
            Err(e) => c.fail("shift theorem", e),
        }
    }
    c.finish(1, "spectral core", start)
}

/// 2. Sampled families against their closed-form transforms.
pub fn oracle_equivalence() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let cases: [(TableFamily, usize, f64); 4] = [
        (TableFamily::Wavepacket, 1, 0.3),
        (TableFamily::RadialChirp, 1, 0.3),
        (TableFamily::RadialChirp, 2, 0.5),
        (TableFamily::MonoChirp, 2, 0.3),
    ];
    for (family, dim, beta) in cases {
        let mut worst: f64 = 0.0;
        for eps in [0.2, 0.1, 0.05] {
            let placement = vec![0.1; dim];
            let spec = family.spec(beta, dim).at(placement.clone(), placement);
            let cap = if dim == 1 { 1 << 16 } else { 1 << 12 };
            let res = resolved_initial_field(&spec, eps, cap).and_then(|f| {
                let spectrum = forward_transform(&f);
                let grid = f.grid();
                let mut err: f64 = 0.0;
                for (i, v) in spectrum.values().iter().enumerate() {
                    let k = &grid.wavenumber(i)[..dim];
                    err = err.max((v - closed_form_fourier(&spec, eps, k)?).norm());
                }
                Ok(err)
            });
            match res {
                Ok(e) => worst = worst.max(e),
                Err(e) => c.fail(&format!("{} n={dim} eps={eps}", family.name()), e),
            }
        }
        c.below(
            &format!("{} n={dim} beta={beta} max pointwise", family.name()),
            worst,
            1e-6,
        );
    }
    c.finish(2, "closed-form transforms of the data families", start)
}

/// 3. Mass and energy conservation; which potential coefficient is conserved.
pub fn conservation() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let eps = 0.05;
    let sigma = 1.0;
    let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![-0.5], vec![0.5]);
    let grid = make_grid(1, 2048, 8.0).expect("valid grid");
    let run = |b: f64| -> Result<(f64, f64, f64)> {
        let initial = synthesize(&spec, eps, &grid)?;
        let params = NLSParams::new(eps, sigma, b)?;
        let traj = solve(&params, &initial, 1.0, &SolveOptions::default().with_stride(1))?;
        let right = traj.energy_drift();
        let wrong = traj.energy_drift_with_coefficient(1.0 / (2.0 * sigma + 1.0));
        Ok((traj.mass_drift(), right, wrong))
    };
    for (label, b) in [("b=+eps^2", eps * eps), ("b=-eps^2", -eps * eps)] {
        match run(b) {
            Ok((mass, energy, alternative)) => {
                c.below(&format!("{label} mass drift"), mass, 1e-8);
                c.below(&format!("{label} energy drift, potential/(sigma+1)"), energy, 1e-6);
                c.record(
                    &format!("{label} energy drift, potential/(2sigma+1)"),
                    format!("{alternative:.3e} > 100 x {energy:.3e}"),
                    alternative > 100.0 * energy,
                );
            }
            Err(e) => c.fail(label, e),
        }
    }
    // The coefficient actually used by the energy functional.
    if let Ok(f) = synthesize(&spec, eps, &grid) {
        let p = NLSParams::new(eps, sigma, eps * eps).expect("valid params");
        let half = energy_with_coefficient(&p, &f, 0.5).total;
        let used = crate::dynamics::energy(&p, &f).total;
        c.record(
            "energy uses potential/(sigma+1)",
            format!("|{used:.6} - {half:.6}| = {:.1e}", (used - half).abs()),
            (used - half).abs() <= 1e-14 * used.abs().max(1.0),
        );
    }
    c.finish(3, "conservation laws", start)
}

/// 4. Galilean covariance of the flow.
pub fn galilean_invariance() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let eps = 0.1;
    let t = 0.5;
    let (x0, v) = (0.3, 0.4);
    let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![-1.0], vec![0.2]);
    let grid = make_grid(1, 2048, 8.0).expect("valid grid");
    for b in [0.1, -0.1] {
        let res = (|| -> Result<f64> {
            let params = NLSParams::new(eps, 1.0, b)?;
            let initial = synthesize(&spec, eps, &grid)?;
            let boosted = galilean_transform(&initial, &[x0], &[v], 0.0)?;
            let options = SolveOptions::default();
            let direct = solve(&params, &boosted, t, &options)?;
            let plain = solve(&params, &initial, t, &options)?;
            let moved = galilean_transform(plain.last(), &[x0], &[v], t)?;
            direct.last().l2_distance(&moved)
        })();
        match res {
            Ok(d) => c.below(&format!("b={b} L2 mismatch at t={t}"), d, 1e-6),
            Err(e) => c.fail(&format!("b={b}"), e),
        }
    }
    c.finish(4, "Galilean invariance", start)
}

/// 5. Marginals, normalization, closed form and derivative bounds of `W`.
pub fn wigner_invariants() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let res = (|| -> Result<()> {
        let eps = 0.2;
        let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.3], vec![0.4]);
        let grid = make_grid(1, 512, 10.0)?;
        let f = synthesize(&spec, eps, &grid)?;
        let w = wigner_transform(&f)?;
        let dens = w.function.marginal_over_second();
        c.below(
            "position marginal",
            max_diff(&dens, f.values().iter().map(|v| C64::new(v.norm_sqr(), 0.0))),
            1e-8,
        );
        let kaxis = w.function.grid().second;
        let mut err: f64 = 0.0;
        for (j, v) in w.function.marginal_over_first().iter().enumerate() {
            let k = kaxis.value(j);
            let hat = closed_form_fourier(&spec, eps, &[k / eps])?;
            err = err.max((v - hat.norm_sqr() / eps).norm());
        }
        c.below("wavenumber marginal", err, 1e-8);
        c.below("total mass", (w.function.integral() - 1.0).norm(), 1e-8);

        let chirp = TableFamily::RadialChirp.spec(0.5, 1);
        let chirped = resolved_initial_field(&chirp, 0.1, 1 << 14)?;
        for (label, field) in [("coherent state", &f), ("radial chirp", &chirped)] {
            let peak = fourier_wigner(field)?.spectrum.max_abs();
            c.below(&format!("{label} |FL-inf norm - 1|"), (peak - 1.0).abs(), 1e-10);
        }

        let unit = SampledField::from_fn(make_grid(1, 128, 6.0)?, 1.0, |x| {
            C64::new(2f64.powf(0.25) * (-PI * x[0] * x[0]).exp(), 0.0)
        })?;
        let wg = wigner_transform(&unit)?;
        let err = (0..wg.function.grid().len())
            .map(|i| {
                let (x, k) = wg.function.grid().point(i);
                (wg.function.values()[i] - 2.0 * (-2.0 * PI * (x * x + k * k)).exp()).norm()
            })
            .fold(0.0, f64::max);
        c.below("Gaussian closed form", err, 1e-8);

        // |∂_K Ŵ| ≤ ε‖∇ψ‖‖ψ‖ and |∂_X Ŵ| ≤ 2π‖xψ‖‖ψ‖ (unit mass).
        for (label, field) in [("coherent state", &f), ("radial chirp", &chirped)] {
            let fw = fourier_wigner(field)?;
            let (dk, dx) = fourier_wigner_slopes(&fw);
            let kb = field.epsilon() * gradient_norm(field);
            let xb = 2.0 * PI * moment_norms(field)?[0];
            c.record(&format!("{label} sup|dK W^|"), format!("{dk:.4} <= {kb:.4}"), dk <= kb);
            c.record(&format!("{label} sup|dX W^|"), format!("{dx:.4} <= {xb:.4}"), dx <= xb);
        }
        Ok(())
    })();
    if let Err(e) = res {
        c.fail("setup", e);
    }
    c.finish(5, "Wigner invariants", start)
}

/// Band-limited random phase-space function: a few Gaussian bumps with
/// complex weights, compact in `k` so transport stays inside the box.
pub fn random_phase_function(grid: PhaseGrid, rng: &mut ChaCha8Rng) -> PhaseSpaceFunction {
    let bumps: Vec<(f64, f64, f64, f64, C64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(0.4..1.0),
                rng.gen_range(0.05..0.1),
                C64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.0 * PI)),
            )
        })
        .collect();
    PhaseSpaceFunction::from_fn(grid, |x, k| {
        bumps
            .iter()
            .map(|(xc, kc, wx, wk, a)| a * (-PI * (((x - xc) / wx).powi(2) + ((k - kc) / wk).powi(2))).exp())
            .sum()
    })
}

pub const TRANSPORT_CORPUS: usize = 50;
pub const TRANSPORT_TIMES: [f64; 3] = [0.25, 1.0, 2.0];

/// Grid for the transport corpus. With `dk = dx/π` the shift `4πkt` is a
/// whole number of `x` steps for every `t` in [`TRANSPORT_TIMES`], so the
/// sampled transport permutes samples and the sampled sup is exact.
pub fn transport_corpus_grid() -> PhaseGrid {
    let dx = 0.125;
    PhaseGrid::new(Axis::centered(512, dx), Axis::centered(512, dx / PI))
}

/// 6. Free transport on random phase-space functions.
pub fn transport_bounds(seed: u64) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = transport_corpus_grid();
    let mut a1_violations = 0;
    let mut iso_violations = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_iso: f64 = 0.0;
    let mut errors = 0;
    for _ in 0..TRANSPORT_CORPUS {
        let f = random_phase_function(grid, &mut rng);
        let (Ok(a1), fl) = (a_s_norm(&f, 1.0), crate::norms::fl_inf_norm(&f)) else {
            errors += 1;
            continue;
        };
        for t in TRANSPORT_TIMES {
            let Ok(moved) = free_transport_function(&f, t) else {
                errors += 1;
                continue;
            };
            let bound = 2.0 + (4.0 * PI * t).powi(2);
            let ratio = a_s_norm(&moved, 1.0).unwrap_or(f64::INFINITY) / a1;
            worst_ratio = worst_ratio.max(ratio / bound);
            if ratio > bound {
                a1_violations += 1;
            }
            let iso = (crate::norms::fl_inf_norm(&moved) - fl).abs() / fl;
            worst_iso = worst_iso.max(iso);
            if iso > ISOMETRY_TOLERANCE {
                iso_violations += 1;
            }
        }
    }
    let total = TRANSPORT_CORPUS * TRANSPORT_TIMES.len();
    c.record(
        "A1 growth bound",
        format!("{a1_violations}/{total} violations, worst ratio/bound {worst_ratio:.3}"),
        a1_violations == 0,
    );
    c.record(
        "FL-inf isometry",
        format!("{iso_violations}/{total} violations, worst relative change {worst_iso:.2e} (tolerance {ISOMETRY_TOLERANCE:.0e})"),
        iso_violations == 0,
    );
    c.record("evaluation errors", format!("{errors}"), errors == 0);
    c.finish(6, "free-transport bounds", start)
}

/// Relative change of the `FL^∞` norm accepted under transport (round-off).
pub const ISOMETRY_TOLERANCE: f64 = 1e-12;

/// 7. The Wiener-algebra norm stays within `1 + 1/(2σ)` at every step.
pub fn wiener_bound() -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let sigma = 1.0;
    let cap = 1.0 + 1.0 / (2.0 * sigma);
    let spec = WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.5]);
    for eps in [0.2, 0.1, 0.05] {
        let res = (|| -> Result<(f64, f64, usize)> {
            let choice = auto_grid(&spec, eps, 1.0, 1 << 14)?;
            let grid = make_grid(1, choice.points, choice.half_width)?;
            let initial = synthesize(&spec, eps, &grid)?;
            let a0 = a_s_norm(&initial, 0.0)?;
            let b = -eps / (3.0 * a0 * a0);
            let traj = solve(
                &NLSParams::new(eps, sigma, b)?,
                &initial,
                1.0,
                &SolveOptions::default().with_stride(1),
            )?;
            let mut worst: f64 = 0.0;
            let mut violations = 0;
            for frame in &traj.frames {
                let r = a_s_norm(frame, 0.0)? / a0;
                worst = worst.max(r);
                if r > cap {
                    violations += 1;
                }
            }
            Ok((b, worst, violations))
        })();
        match res {
            Ok((b, worst, violations)) => c.record(
                &format!("eps={eps} b={b:.3e}"),
                format!("max ratio {worst:.6} <= {cap}, {violations} violations"),
                violations == 0,
            ),
            Err(e) => c.fail(&format!("eps={eps}"), e),
        }
    }
    c.finish(7, "Wiener-algebra bound", start)
}

fn concentration_config(schedule: BSchedule, data: WavepacketSpec, metrics: &[Metric]) -> RegimeConfig {
    RegimeConfig::new(1, 1.0, schedule, SWEEP_EPSILONS.to_vec(), data).with_metrics(metrics)
}

pub fn coherent_sweep_data() -> WavepacketSpec {
    WavepacketSpec::coherent_state(Envelope::Gaussian, concentration_width(), vec![0.0], vec![0.0])
}

/// Data that is not a wavepacket: a fixed Gaussian, independent of `ε`.
/// The width keeps the strongly defocused run on a modest grid.
pub fn broadband_data() -> WavepacketSpec {
    WavepacketSpec::new(
        Family::Wavepacket {
            envelope: Envelope::Gaussian,
            width: 4.0,
        },
        0.0,
        1,
    )
}

fn fitted(result: &SweepResult, metric: Metric) -> (Vec<f64>, f64, f64) {
    let values: Vec<f64> = result.values(metric).iter().map(|v| v.1).collect();
    let (slope, r2) = result
        .fits
        .get(&metric)
        .map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r_squared));
    (values, slope, r2)
}

fn fmt_values(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
}

/// 8. Concentration of the Wigner function on the classical point.
pub fn concentration(options: &SweepOptions, sweeps: &mut Vec<(String, SweepResult)>) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let metric = Metric::DeltaDistanceS1;
    let focusing = BSchedule::new(1.0, 1.5, true)
        .and_then(|s| epsilon_sweep(&concentration_config(s, coherent_sweep_data(), &[metric]), options));
    match focusing {
        Ok(r) => {
            let (values, slope, r2) = fitted(&r, metric);
            c.record(
                "focusing b=-eps^1.5 strictly decreasing",
                fmt_values(&values),
                strictly_decreasing(&values),
            );
            c.record("fitted slope", format!("{slope:.4} > 0.25"), slope > 0.25);
            c.record("R^2", format!("{r2:.4} > 0.9"), r2 > 0.9);
            sweeps.push(("concentration_focusing".into(), r));
        }
        Err(e) => c.fail("focusing sweep", e),
    }
    let defocusing = BSchedule::new(1.0, 0.5, false)
        .and_then(|s| epsilon_sweep(&concentration_config(s, coherent_sweep_data(), &[metric]), options));
    match defocusing {
        Ok(r) => {
            let (values, slope, _) = fitted(&r, metric);
            c.record(
                "defocusing b=+eps^0.5 strictly decreasing",
                format!("{} (slope {slope:.4})", fmt_values(&values)),
                strictly_decreasing(&values),
            );
            sweeps.push(("concentration_defocusing".into(), r));
        }
        Err(e) => c.fail("defocusing sweep", e),
    }
    c.finish(8, "Wigner concentration on the classical trajectory", start)
}

/// 9. Transport mismatch decays for weak coupling and is flagged otherwise.
pub fn transport_mismatch_sweeps(options: &SweepOptions, sweeps: &mut Vec<(String, SweepResult)>) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    let metrics = [Metric::TransportMismatchS0, Metric::TransportMismatchS1];
    let weak = BSchedule::new(1.0, 3.0, false)
        .and_then(|s| epsilon_sweep(&concentration_config(s, coherent_sweep_data(), &metrics), options));
    match weak {
        Ok(r) => {
            for m in metrics {
                let (values, slope, _) = fitted(&r, m);
                let pass = r.verdict(m).is_some_and(|v| v.pass) && strictly_decreasing(&values);
                c.record(
                    &format!("b=eps^3 {m}"),
                    format!("{} slope {slope:.3} > 0.1", fmt_values(&values)),
                    pass,
                );
            }
            sweeps.push(("transport_weak_coupling".into(), r));
        }
        Err(e) => c.fail("weak-coupling sweep", e),
    }
    let strong = BSchedule::new(1.0, 0.5, false)
        .and_then(|s| epsilon_sweep(&concentration_config(s, broadband_data(), &metrics), options));
    match strong {
        Ok(r) => {
            for m in metrics {
                let (values, slope, _) = fitted(&r, m);
                let flagged = r.verdict(m).is_some_and(|v| !v.pass);
                let detail = format!(
                    "{} slope {slope:.3}, flagged non-decaying: {flagged}",
                    fmt_values(&values)
                );
                if m == Metric::TransportMismatchS0 {
                    c.record(
                        &format!("control b=eps^0.5 broadband {m}"),
                        detail,
                        flagged && !strictly_decreasing(&values),
                    );
                } else {
                    // The weight suppresses the large-K discrepancy, so this
                    // one decays like eps^0.5 for eps-independent data.
                    c.lines
                        .push(format!("control b=eps^0.5 broadband {m} (reported): {detail}"));
                }
            }
            sweeps.push(("transport_control".into(), r));
        }
        Err(e) => c.fail("control sweep", e),
    }
    c.finish(9, "transport mismatch", start)
}

/// 10. Norm-scaling table.
pub fn table_reproduction(jobs: usize) -> (CriterionResult, Option<TablesReport>) {
    let start = Instant::now();
    let mut c = Checks::new();
    let options = TablesOptions {
        jobs,
        ..TablesOptions::norms_only()
    };
    match reproduce_tables(&options) {
        Ok(report) => {
            for cell in &report.cells {
                c.record(
                    &cell.cell,
                    format!("fitted {:.4} vs {:.4}", cell.fitted_exponent, cell.predicted_exponent),
                    cell.pass,
                );
            }
            (c.finish(10, "norm-scaling table", start), Some(report))
        }
        Err(e) => {
            c.fail("tables", e);
            (c.finish(10, "norm-scaling table", start), None)
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AcceptanceOptions {
    pub seed: u64,
    pub jobs: usize,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            jobs: 1,
        }
    }
}

pub struct AcceptanceReport {
    pub results: Vec<CriterionResult>,
    pub sweeps: Vec<(String, SweepResult)>,
    pub tables: Option<TablesReport>,
}

impl AcceptanceReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

/// Criteria 1 to 10. Reproducibility across runs is checked by running this
/// twice and comparing the written outputs.
pub fn run_acceptance(options: &AcceptanceOptions, mut progress: impl FnMut(&CriterionResult)) -> AcceptanceReport {
    let sweep_options = SweepOptions {
        jobs: options.jobs,
        record_timings: false,
    };
    let mut sweeps = Vec::new();
    let mut results = Vec::new();
    let mut push = |r: CriterionResult, results: &mut Vec<CriterionResult>| {
        progress(&r);
        results.push(r);
    };
    push(spectral_core(options.seed), &mut results);
    push(oracle_equivalence(), &mut results);
    push(conservation(), &mut results);
    push(galilean_invariance(), &mut results);
    push(wigner_invariants(), &mut results);
    push(transport_bounds(options.seed), &mut results);
    push(wiener_bound(), &mut results);
    push(concentration(&sweep_options, &mut sweeps), &mut results);
    push(transport_mismatch_sweeps(&sweep_options, &mut sweeps), &mut results);
    let (r, tables) = table_reproduction(options.jobs);
    push(r, &mut results);
    AcceptanceReport {
        results,
        sweeps,
        tables,
    }
}
