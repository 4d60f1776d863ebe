//! C interface to `scnls`.
//!
//! Every function returns a [`ScnlsStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`scnls_last_error`]. Handles are opaque and must be released with the
//! matching `_free` function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use num_complex::Complex64;
use scnls::config::RegimeConfig;
use scnls::dynamics::{solve, DtPolicy, NLSParams, SolveOptions};
use scnls::grid::{SampledField, SpatialGrid};
use scnls::initial_data::{synthesize, Envelope, WavepacketSpec};
use scnls::norms::{a_s_norm, fl_inf_norm};
use scnls::phase_space::{delta_distance_of_field, fourier_wigner, transport_mismatch};
use scnls::sweep::{epsilon_sweep, SweepOptions, SweepResult};
use scnls::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    UnderResolved = 4,
    Numerical = 5,
    Unsupported = 6,
    Io = 7,
    Panic = 8,
}

impl From<&Error> for ScnlsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidGrid(_) | Error::InvalidInput(_) | Error::GridMismatch | Error::ShiftTooLarge { .. } => {
                ScnlsStatus::InvalidArgument
            }
            Error::Config(_) => ScnlsStatus::Config,
            Error::UnderResolved { .. } | Error::MarginViolation { .. } => ScnlsStatus::UnderResolved,
            Error::Unsupported(_) => ScnlsStatus::Unsupported,
            Error::Io(_) => ScnlsStatus::Io,
            Error::Numerical(_) | Error::SolverFailure { .. } | Error::TooFewPoints { .. } => ScnlsStatus::Numerical,
        }
    }
}

/// Uniform periodic grid in one or two dimensions.
pub struct ScnlsGrid(SpatialGrid);

/// Complex field sampled on a grid, tagged with its `ε`.
pub struct ScnlsField(SampledField);

/// Parsed experiment configuration.
pub struct ScnlsConfig(RegimeConfig);

/// Outcome of an ε-sweep.
pub struct ScnlsSweep(SweepResult);

/// Step statistics of a solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ScnlsSolveStats {
    pub dt: f64,
    pub steps: u64,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Run `f`, translating errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScnlsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScnlsStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is NULL"));
            ScnlsStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            ScnlsStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            ScnlsStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            ScnlsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn scnls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scnls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Grid of `points` samples per axis on `[-half_width, half_width)^dim`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn scnls_grid_new(
    dim: usize,
    points: usize,
    half_width: f64,
    out: *mut *mut ScnlsGrid,
) -> ScnlsStatus {
    guard(|| put(out, ScnlsGrid(SpatialGrid::new(dim, points, half_width)?)))
}

/// # Safety
/// `grid` must be NULL or a handle from [`scnls_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scnls_grid_free(grid: *mut ScnlsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Total number of samples.
///
/// # Safety
/// `grid` must be a live grid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_grid_len(grid: *const ScnlsGrid, out: *mut usize) -> ScnlsStatus {
    guard(|| write(out, get(grid, "grid")?.0.len()))
}

/// Field from separate real and imaginary sample arrays of length
/// equal to the grid size, in row-major order.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn scnls_field_from_samples(
    grid: *const ScnlsGrid,
    epsilon: f64,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut ScnlsField,
) -> ScnlsStatus {
    guard(|| {
        let grid = &get(grid, "grid")?.0;
        if len != grid.len() {
            return Err(Fail::Arg(format!("expected {} samples, got {len}", grid.len())));
        }
        let (re, im) = (slice(re, len, "re")?, slice(im, len, "im")?);
        let values = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        put(out, ScnlsField(SampledField::new(grid.clone(), values, epsilon)?))
    })
}

/// Gaussian coherent state of unit mass centred at `position` with
/// wavenumber `wavenumber` (one entry per grid dimension).
///
/// # Safety
/// `position` and `wavenumber` must point to `dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn scnls_field_coherent_state(
    grid: *const ScnlsGrid,
    epsilon: f64,
    width: f64,
    position: *const f64,
    wavenumber: *const f64,
    out: *mut *mut ScnlsField,
) -> ScnlsStatus {
    guard(|| {
        let grid = &get(grid, "grid")?.0;
        let dim = grid.dim();
        let spec = WavepacketSpec::coherent_state(
            Envelope::Gaussian,
            width,
            slice(position, dim, "position")?.to_vec(),
            slice(wavenumber, dim, "wavenumber")?.to_vec(),
        );
        put(out, ScnlsField(synthesize(&spec, epsilon, grid)?))
    })
}

/// # Safety
/// `field` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn scnls_field_free(field: *mut ScnlsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copy the samples into caller arrays of length `len` (the grid size).
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn scnls_field_values(
    field: *const ScnlsField,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> ScnlsStatus {
    guard(|| {
        let values = get(field, "field")?.0.values();
        if len != values.len() {
            return Err(Fail::Arg(format!("expected {} samples, got {len}", values.len())));
        }
        if re.is_null() || im.is_null() {
            return Err(Fail::Null("output array"));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (i, v) in values.iter().enumerate() {
            re[i] = v.re;
            im[i] = v.im;
        }
        Ok(())
    })
}

/// `∫|ψ|²`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_field_mass(field: *const ScnlsField, out: *mut f64) -> ScnlsStatus {
    guard(|| write(out, get(field, "field")?.0.mass()))
}

/// Evolve `field` to `t_end` with coupling `b` and nonlinearity power
/// `sigma`. `dt <= 0` selects the step automatically.
///
/// # Safety
/// `field` must be a live handle; `out` writable; `stats` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_solve(
    field: *const ScnlsField,
    sigma: f64,
    b: f64,
    t_end: f64,
    dt: f64,
    out: *mut *mut ScnlsField,
    stats: *mut ScnlsSolveStats,
) -> ScnlsStatus {
    guard(|| {
        let field = &get(field, "field")?.0;
        if out.is_null() {
            return Err(Fail::Null("output handle"));
        }
        let params = NLSParams::new(field.epsilon(), sigma, b)?;
        let mut options = SolveOptions::default();
        if dt > 0.0 {
            options = options.with_dt(DtPolicy::Fixed(dt));
        }
        let traj = solve(&params, field, t_end, &options)?;
        if !stats.is_null() {
            *stats = ScnlsSolveStats {
                dt: traj.dt,
                steps: traj.steps as u64,
                mass_drift: traj.mass_drift(),
                energy_drift: traj.energy_drift(),
            };
        }
        put(out, ScnlsField(traj.last().clone()))
    })
}

/// Wiener–Sobolev norm `∫(1+|k|)^s |ψ̂|`, `s >= 0`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_wiener_norm(field: *const ScnlsField, s: f64, out: *mut f64) -> ScnlsStatus {
    guard(|| write(out, a_s_norm(&get(field, "field")?.0, s)?))
}

/// `sup|ψ̂|`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_fl_inf_norm(field: *const ScnlsField, out: *mut f64) -> ScnlsStatus {
    guard(|| write(out, fl_inf_norm(&get(field, "field")?.0)))
}

/// `sup|Ŵ|` of the Wigner function of a one-dimensional field.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_wigner_sup(field: *const ScnlsField, out: *mut f64) -> ScnlsStatus {
    guard(|| write(out, fourier_wigner(&get(field, "field")?.0)?.spectrum.max_abs()))
}

/// Weighted distance of the Wigner function to the point mass at
/// `(position, wavenumber / 2π)`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_delta_distance(
    field: *const ScnlsField,
    position: f64,
    wavenumber: f64,
    s: f64,
    out: *mut f64,
) -> ScnlsStatus {
    guard(|| {
        let d = delta_distance_of_field(&get(field, "field")?.0, position, wavenumber, s, None)?;
        write(out, d)
    })
}

/// Weighted distance between the Wigner function of `evolved` and the
/// free transport of that of `initial` over time `t`.
///
/// # Safety
/// Both fields must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_transport_mismatch(
    evolved: *const ScnlsField,
    initial: *const ScnlsField,
    t: f64,
    s: f64,
    out: *mut f64,
) -> ScnlsStatus {
    guard(|| {
        let d = transport_mismatch(&get(evolved, "evolved")?.0, &get(initial, "initial")?.0, t, s, None)?;
        write(out, d)
    })
}

/// Parse configuration text in the `key = value` format of the CLI.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_config_parse(text: *const c_char, out: *mut *mut ScnlsConfig) -> ScnlsStatus {
    guard(|| put(out, ScnlsConfig(RegimeConfig::parse(c_str(text, "text")?)?)))
}

/// # Safety
/// `config` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn scnls_config_free(config: *mut ScnlsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Run the configured ε-sweep on `jobs` threads.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_sweep_run(
    config: *const ScnlsConfig,
    jobs: usize,
    out: *mut *mut ScnlsSweep,
) -> ScnlsStatus {
    guard(|| {
        let options = SweepOptions {
            jobs: jobs.max(1),
            record_timings: false,
        };
        put(out, ScnlsSweep(epsilon_sweep(&get(config, "config")?.0, &options)?))
    })
}

/// # Safety
/// `sweep` must be NULL or a live sweep handle.
#[no_mangle]
pub unsafe extern "C" fn scnls_sweep_free(sweep: *mut ScnlsSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Whether every verdict of the sweep passed.
///
/// # Safety
/// `sweep` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scnls_sweep_all_pass(sweep: *const ScnlsSweep, out: *mut bool) -> ScnlsStatus {
    guard(|| write(out, get(sweep, "sweep")?.0.all_pass()))
}

/// Write `epsilon,metric,value,runtime_s` rows to `path`.
///
/// # Safety
/// `sweep` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn scnls_sweep_write_csv(sweep: *const ScnlsSweep, path: *const c_char) -> ScnlsStatus {
    guard(|| {
        let sweep = &get(sweep, "sweep")?.0;
        scnls::io::write_sweep_csv(Path::new(c_str(path, "path")?), sweep)?;
        Ok(())
    })
}
