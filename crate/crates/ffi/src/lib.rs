//! C ABI over `bdris`.
//!
//! Every function returns a [`BdrisStatus`]; on anything but `BDRIS_STATUS_OK`
//! a message is available from [`bdris_last_error`] on the same thread.
//! Objects are opaque handles released with their matching `_free`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bdris::harness::{preset, run_sweep, write_csv, SweepPlan, SweepRecord};
use bdris::{
    build_training, max_affected, run_trial, Error, ImpairmentKind, ImpairmentSpec, NoiseMode, NoiseSpec, SystemConfig,
    TrainingDesign,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdrisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotOrthogonal = 4,
    /// Power iteration failed or a segment was degenerate.
    Numerical = 5,
    Io = 6,
    Panic = 7,
    Internal = 8,
}

#[repr(u32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdrisImpairmentKind {
    Ideal = 0,
    Type1 = 1,
    Type2 = 2,
    Type3 = 3,
}

#[repr(u32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdrisNoiseMode {
    SnrNormalized = 0,
    FixedSigma = 1,
}

pub struct BdrisConfig(SystemConfig);
pub struct BdrisDesign(TrainingDesign);
pub struct BdrisSweep(Vec<SweepRecord>);

/// Sweep axes. Array fields point to `*_len` elements; kinds use the
/// `BdrisImpairmentKind` values, `noise_mode` a `BdrisNoiseMode` value.
#[repr(C)]
pub struct BdrisSweepSpec {
    pub m_t: usize,
    pub m_r: usize,
    pub n: usize,
    pub nbars: *const usize,
    pub nbars_len: usize,
    pub kinds: *const u32,
    pub kinds_len: usize,
    pub snrs_db: *const f64,
    pub snrs_len: usize,
    pub fractions: *const f64,
    pub fractions_len: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub noise_mode: u32,
    pub amp_min: f64,
}

/// One aggregated sweep point; mirrors a CSV row.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct BdrisSweepRecord {
    pub impairment_type: u32,
    pub nbar: usize,
    pub q: usize,
    pub n: usize,
    pub m_t: usize,
    pub m_r: usize,
    pub t_pilots: usize,
    pub snr_db: f64,
    pub fraction: f64,
    pub max_affected: usize,
    pub affected_count: usize,
    pub trials: usize,
    pub nmse_mean: f64,
    pub nmse_median: f64,
    pub nmse_std: f64,
    pub noise_mode: u32,
    pub master_seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(BdrisStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn status_of(e: &Error) -> BdrisStatus {
    match e {
        Error::DimensionMismatch { .. } => BdrisStatus::DimensionMismatch,
        Error::NotOrthogonal { .. } => BdrisStatus::NotOrthogonal,
        Error::NoConvergence { .. } | Error::DegenerateSegment(_) => BdrisStatus::Numerical,
        Error::Io { .. } | Error::Csv { .. } => BdrisStatus::Io,
        Error::Trial { source, .. } => status_of(source),
        Error::Json(_) | Error::ThreadPool(_) => BdrisStatus::Internal,
        _ => BdrisStatus::InvalidArgument,
    }
}

fn null(what: &str) -> Failure {
    Failure(BdrisStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> Failure {
    Failure(BdrisStatus::InvalidArgument, msg)
}

/// Runs `body`, records any failure, and turns panics into `Panic`.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> BdrisStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BdrisStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            BdrisStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn kind_from(v: u32) -> Result<ImpairmentKind, Failure> {
    match v {
        0 => Ok(ImpairmentKind::Ideal),
        1 => Ok(ImpairmentKind::Type1),
        2 => Ok(ImpairmentKind::Type2),
        3 => Ok(ImpairmentKind::Type3),
        _ => Err(invalid(format!("unknown impairment kind {v}"))),
    }
}

fn kind_to(k: ImpairmentKind) -> u32 {
    match k {
        ImpairmentKind::Ideal => BdrisImpairmentKind::Ideal as u32,
        ImpairmentKind::Type1 => BdrisImpairmentKind::Type1 as u32,
        ImpairmentKind::Type2 => BdrisImpairmentKind::Type2 as u32,
        ImpairmentKind::Type3 => BdrisImpairmentKind::Type3 as u32,
    }
}

fn mode_from(v: u32) -> Result<NoiseMode, Failure> {
    match v {
        0 => Ok(NoiseMode::SnrNormalized),
        1 => Ok(NoiseMode::FixedSigma),
        _ => Err(invalid(format!("unknown noise mode {v}"))),
    }
}

fn mode_to(m: NoiseMode) -> u32 {
    match m {
        NoiseMode::SnrNormalized => BdrisNoiseMode::SnrNormalized as u32,
        NoiseMode::FixedSigma => BdrisNoiseMode::FixedSigma as u32,
    }
}

/// Message for the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bdris_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bdris_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a configuration with the minimum pilot length, snr-normalized
/// noise and seed 42.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_config_new(
    m_t: usize,
    m_r: usize,
    n: usize,
    nbar: usize,
    out: *mut *mut BdrisConfig,
) -> BdrisStatus {
    guard(|| {
        let cfg = SystemConfig::new(m_t, m_r, n, nbar)?;
        write_out(out, Box::into_raw(Box::new(BdrisConfig(cfg))), "out")
    })
}

/// # Safety
/// `cfg` must be a live handle from `bdris_config_new`.
#[no_mangle]
pub unsafe extern "C" fn bdris_config_set_seed(cfg: *mut BdrisConfig, seed: u64) -> BdrisStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        c.0 = c.0.clone().with_seed(seed);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle from `bdris_config_new`.
#[no_mangle]
pub unsafe extern "C" fn bdris_config_set_noise_mode(cfg: *mut BdrisConfig, mode: u32) -> BdrisStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        c.0 = c.0.clone().with_noise_mode(mode_from(mode)?);
        Ok(())
    })
}

/// Pilot length `T` and group count `Q`.
///
/// # Safety
/// `cfg` must be a live handle; `t` and `q` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_config_dims(cfg: *const BdrisConfig, t: *mut usize, q: *mut usize) -> BdrisStatus {
    guard(|| {
        let c = &deref(cfg, "cfg")?.0;
        write_out(t, c.t, "t")?;
        write_out(q, c.q, "q")
    })
}

/// # Safety
/// `cfg` must be null or a handle from `bdris_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdris_config_free(cfg: *mut BdrisConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Largest number of impedances `kind` can distort under `cfg`.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_max_affected(cfg: *const BdrisConfig, kind: u32, out: *mut usize) -> BdrisStatus {
    guard(|| {
        let c = &deref(cfg, "cfg")?.0;
        write_out(out, max_affected(kind_from(kind)?, c), "out")
    })
}

/// Builds the orthogonal training design for `cfg`.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_design_build(cfg: *const BdrisConfig, out: *mut *mut BdrisDesign) -> BdrisStatus {
    guard(|| {
        let design = build_training(&deref(cfg, "cfg")?.0)?;
        write_out(out, Box::into_raw(Box::new(BdrisDesign(design))), "out")
    })
}

/// Relative orthogonality residual of the design.
///
/// # Safety
/// `design` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_design_residual(design: *const BdrisDesign, out: *mut f64) -> BdrisStatus {
    guard(|| write_out(out, deref(design, "design")?.0.orthogonality_residual(), "out"))
}

/// # Safety
/// `design` must be null or a handle from `bdris_design_build` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdris_design_free(design: *mut BdrisDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Runs one seeded trial and writes its NMSE. Pass `INFINITY` as `snr_db`
/// for a noiseless trial.
///
/// # Safety
/// `cfg` and `design` must be live handles, the design built from a
/// configuration with the same dimensions; `nmse` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_run_trial(
    cfg: *const BdrisConfig,
    design: *const BdrisDesign,
    kind: u32,
    fraction: f64,
    snr_db: f64,
    trial_index: u64,
    nmse: *mut f64,
) -> BdrisStatus {
    guard(|| {
        let c = &deref(cfg, "cfg")?.0;
        let d = &deref(design, "design")?.0;
        if d.slots() != c.t || d.nbar() != c.nbar || d.groups() != c.q || d.m_t() != c.m_t {
            return Err(Failure(
                BdrisStatus::DimensionMismatch,
                "design was built for a different configuration".into(),
            ));
        }
        let spec = ImpairmentSpec::new(kind_from(kind)?, fraction)?;
        let o = run_trial(c, d, &spec, NoiseSpec::new(snr_db, c.noise_mode), trial_index, false)?;
        write_out(nmse, o.nmse, "nmse")
    })
}

/// Runs a full sweep on `workers` threads (0 or 1 runs inline).
///
/// # Safety
/// `spec` must point to a valid spec whose arrays hold the stated lengths;
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_sweep_run(
    spec: *const BdrisSweepSpec,
    workers: usize,
    out: *mut *mut BdrisSweep,
) -> BdrisStatus {
    guard(|| {
        let s = deref(spec, "spec")?;
        let plan = SweepPlan {
            m_t: s.m_t,
            m_r: s.m_r,
            n: s.n,
            nbars: slice(s.nbars, s.nbars_len, "nbars")?.to_vec(),
            kinds: slice(s.kinds, s.kinds_len, "kinds")?
                .iter()
                .map(|&k| kind_from(k))
                .collect::<Result<_, _>>()?,
            snrs_db: slice(s.snrs_db, s.snrs_len, "snrs_db")?.to_vec(),
            fractions: slice(s.fractions, s.fractions_len, "fractions")?.to_vec(),
            trials: s.trials,
            master_seed: s.master_seed,
            noise_mode: mode_from(s.noise_mode)?,
            amp_min: s.amp_min,
        };
        let records = run_sweep(&plan, workers)?;
        write_out(out, Box::into_raw(Box::new(BdrisSweep(records))), "out")
    })
}

/// Runs a named preset (`fig3` … `fig7`). `trials` of 0 keeps the preset's
/// trial count.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_sweep_preset(
    name: *const c_char,
    trials: usize,
    workers: usize,
    out: *mut *mut BdrisSweep,
) -> BdrisStatus {
    guard(|| {
        let mut p = preset(c_str(name, "name")?)?;
        if trials > 0 {
            p.plan.trials = trials;
        }
        let records = run_sweep(&p.plan, workers)?;
        write_out(out, Box::into_raw(Box::new(BdrisSweep(records))), "out")
    })
}

/// Number of records in a sweep result; 0 for a null handle.
///
/// # Safety
/// `sweep` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bdris_sweep_len(sweep: *const BdrisSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `sweep` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bdris_sweep_get(
    sweep: *const BdrisSweep,
    index: usize,
    out: *mut BdrisSweepRecord,
) -> BdrisStatus {
    guard(|| {
        let records = &deref(sweep, "sweep")?.0;
        let r = records
            .get(index)
            .ok_or_else(|| invalid(format!("record {index} out of range ({} records)", records.len())))?;
        let rec = BdrisSweepRecord {
            impairment_type: kind_to(r.impairment_type),
            nbar: r.nbar,
            q: r.q,
            n: r.n,
            m_t: r.m_t,
            m_r: r.m_r,
            t_pilots: r.t_pilots,
            snr_db: r.snr_db,
            fraction: r.fraction,
            max_affected: r.max_affected,
            affected_count: r.affected_count,
            trials: r.trials,
            nmse_mean: r.nmse_mean,
            nmse_median: r.nmse_median,
            nmse_std: r.nmse_std,
            noise_mode: mode_to(r.noise_mode),
            master_seed: r.master_seed,
        };
        write_out(out, rec, "out")
    })
}

/// Writes the sweep as CSV in the same format as the command-line tool.
///
/// # Safety
/// `sweep` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bdris_sweep_write_csv(sweep: *const BdrisSweep, path: *const c_char) -> BdrisStatus {
    guard(|| {
        let records = &deref(sweep, "sweep")?.0;
        write_csv(records, Path::new(c_str(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `sweep` must be null or a handle from a sweep function not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdris_sweep_free(sweep: *mut BdrisSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}
