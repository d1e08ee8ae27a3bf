//! C ABI over the identification toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free`. Every fallible call returns an [`LsStatus`]; on
//! failure a message is kept per thread and read with
//! [`ls_last_error_message`]. Panics are caught and reported as
//! [`LsStatus::Panic`].
//!
//! Arrays are row-major: command and status buffers hold `steps * 4`
//! doubles, one row of four engines per step.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lander_sysid::error::Error;
use lander_sysid::features::TARGETS;
use lander_sysid::plant::{simulate, CommandTrace, PlantConfig, PlantTrajectory, ENGINES};
use lander_sysid::regression::CoefficientModel;
use lander_sysid::rollout::rollout;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidInput = 3,
    NonFinite = 4,
    Depleted = 5,
    WidthMismatch = 6,
    NotConverged = 7,
    Diverged = 8,
    Io = 9,
    Parse = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Column selector for [`ls_trajectory_column`], in the order of the CSV
/// schema.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsColumn {
    Time = 0,
    Command1 = 1,
    Command2 = 2,
    Command3 = 3,
    Command4 = 4,
    Status1 = 5,
    Status2 = 6,
    Status3 = 7,
    Status4 = 8,
    Thrust1 = 9,
    Thrust2 = 10,
    Thrust3 = 11,
    Thrust4 = 12,
    Pressure = 13,
    FuelEjected = 14,
    OxEjected = 15,
}

/// Opaque plant or model trajectory.
pub struct LsTrajectory(PlantTrajectory);

/// Opaque fitted model.
pub struct LsModel(CoefficientModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LsStatus {
    match e {
        Error::InvalidConfig(_) => LsStatus::InvalidConfig,
        Error::InvalidInput(_) | Error::InsufficientHistory { .. } | Error::HistoryMismatch { .. } => {
            LsStatus::InvalidInput
        }
        Error::NonFiniteCommand { .. } | Error::NonFinite(_) => LsStatus::NonFinite,
        Error::Depleted { .. } => LsStatus::Depleted,
        Error::WidthMismatch { .. } => LsStatus::WidthMismatch,
        Error::NotConverged { .. } | Error::FoldFailed { .. } => LsStatus::NotConverged,
        Error::Diverged { .. } => LsStatus::Diverged,
        Error::Io { .. } => LsStatus::Io,
        Error::Json { .. } | Error::Csv { .. } => LsStatus::Parse,
    }
}

struct Failure(LsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult = std::result::Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lander_sysid".into());
            LsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Failure(LsStatus::InvalidInput, "path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn command_trace(commands: *const f64, status: *const f64, steps: usize, dt: f64) -> Result<CommandTrace, Failure> {
    let len = steps.checked_mul(ENGINES).ok_or_else(|| Failure(LsStatus::InvalidInput, "steps overflow".into()))?;
    let c = slice_arg(commands, len, "commands")?;
    let s = slice_arg(status, len, "status")?;
    let mut trace = CommandTrace::new(dt);
    for (cr, sr) in c.chunks_exact(ENGINES).zip(s.chunks_exact(ENGINES)) {
        trace.push(cr.try_into().expect("chunk of 4"), sr.try_into().expect("chunk of 4"));
    }
    Ok(trace)
}

unsafe fn plant_config(config_json: *const c_char) -> Result<PlantConfig, Failure> {
    let cfg = if config_json.is_null() {
        PlantConfig::default()
    } else {
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|_| Failure(LsStatus::InvalidInput, "config is not UTF-8".into()))?;
        serde_json::from_str(text).map_err(|e| Failure(LsStatus::Parse, format!("plant config: {e}")))?
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Message of the last failed call on this thread, or null after a
/// successful one. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Simulates the plant for `steps` commands, yielding `steps + 1` samples.
///
/// `config_json` is a JSON plant configuration or null for the defaults;
/// missing fields take defaults.
///
/// # Safety
/// `commands` and `status` must point to `steps * 4` doubles, `config_json`
/// must be null or NUL-terminated, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_simulate(
    config_json: *const c_char,
    commands: *const f64,
    status: *const f64,
    steps: usize,
    out: *mut *mut LsTrajectory,
) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = plant_config(config_json)?;
        let trace = command_trace(commands, status, steps, cfg.dt)?;
        let traj = simulate(&trace, &cfg)?;
        *out = Box::into_raw(Box::new(LsTrajectory(traj)));
        Ok(())
    })
}

/// Reads a trajectory CSV with the plant schema.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_trajectory_load(path: *const c_char, out: *mut *mut LsTrajectory) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let traj = PlantTrajectory::read_csv(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(LsTrajectory(traj)));
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_trajectory_len(traj: *const LsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Copies one column into `buf`, which must hold at least the trajectory
/// length.
///
/// # Safety
/// `traj` must be a live handle and `buf` must point to `buf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_trajectory_column(
    traj: *const LsTrajectory,
    column: LsColumn,
    buf: *mut f64,
    buf_len: usize,
) -> LsStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if buf_len < t.len() {
            return Err(Failure(
                LsStatus::BufferTooSmall,
                format!("buffer holds {buf_len} values, trajectory has {}", t.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, t.len());
        let c = column as usize;
        for (i, v) in out.iter_mut().enumerate() {
            *v = match c {
                0 => t.time(i),
                1..=4 => t.commands[i][c - 1],
                5..=8 => t.status[i][c - 5],
                9..=12 => t.thrusts[i][c - 9],
                13 => t.pressures[i],
                14 => t.m_fuel[i],
                _ => t.m_ox[i],
            };
        }
        Ok(())
    })
}

/// Writes a trajectory CSV with the plant schema.
///
/// # Safety
/// `traj` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ls_trajectory_save(traj: *const LsTrajectory, path: *const c_char) -> LsStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        t.write_csv(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_trajectory_free(traj: *mut LsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Loads a model saved by the `train` stage.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_model_load(path: *const c_char, out: *mut *mut LsModel) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = CoefficientModel::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(LsModel(model)));
        Ok(())
    })
}

/// History length n, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_model_history(model: *const LsModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n)
}

/// Width of the raw feature vector taken by [`ls_model_predict`].
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_model_input_width(model: *const LsModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.input_width())
}

/// Number of outputs written by [`ls_model_predict`].
#[no_mangle]
pub extern "C" fn ls_model_output_count() -> usize {
    TARGETS
}

/// Fraction of zero coefficients, or NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_model_sparsity(model: *const LsModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.0.sparsity)
}

/// One-step prediction from a raw feature vector: four thrusts, tank
/// pressure, ejected fuel and oxidizer mass.
///
/// # Safety
/// `x` must point to `width` doubles and `out` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_model_predict(
    model: *const LsModel,
    x: *const f64,
    width: usize,
    out: *mut f64,
    out_len: usize,
) -> LsStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let x = slice_arg(x, width, "x")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < TARGETS {
            return Err(Failure(LsStatus::BufferTooSmall, format!("output needs {TARGETS} values")));
        }
        let y = m.predict(x)?;
        std::slice::from_raw_parts_mut(out, TARGETS).copy_from_slice(&y);
        Ok(())
    })
}

/// Free-running prediction over `steps` commands. The first `n` samples of
/// the result are copied from `warmup`, which must hold at least that many.
///
/// # Safety
/// Handles must be live, `commands` and `status` must point to `steps * 4`
/// doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_rollout(
    model: *const LsModel,
    warmup: *const LsTrajectory,
    commands: *const f64,
    status: *const f64,
    steps: usize,
    out: *mut *mut LsTrajectory,
) -> LsStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let w = &warmup.as_ref().ok_or_else(|| null("warmup"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let trace = command_trace(commands, status, steps, w.dt)?;
        let r = rollout(m, &trace, w)?;
        *out = Box::into_raw(Box::new(LsTrajectory(r.clamped)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_model_free(model: *mut LsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
