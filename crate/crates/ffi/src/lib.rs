//! C interface to the beamsim library.
//!
//! Every fallible function returns a [`BeamsimStatus`] and writes its result
//! through out-pointers. On failure, [`beamsim_last_error`] describes what
//! went wrong on the calling thread. Objects cross the boundary as opaque
//! handles, each with its own `_free` function; passing NULL to a `_free`
//! function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use beamsim::algorithms::quantize::quantize_beta;
use beamsim::algorithms::{solve_three, solve_two};
use beamsim::harness::{self, presets, Suite, TrialRunner};
use beamsim::model::{evaluate_rss, rss_max, ChannelState, PhaseVector};
use beamsim::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BeamsimStatus {
    Ok = 0,
    /// A required pointer was NULL.
    NullPointer = 1,
    /// An argument was out of range or a string was not UTF-8.
    InvalidArgument = 2,
    /// A config failed to parse or validate.
    Config = 3,
    Io = 4,
    /// Any other library error.
    Runtime = 5,
    /// The library panicked; the handle involved should not be reused.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(BeamsimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config { .. } => BeamsimStatus::Config,
            Error::Io { .. } => BeamsimStatus::Io,
            Error::Contract(_) => BeamsimStatus::InvalidArgument,
            _ => BeamsimStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BeamsimStatus::NullPointer, format!("`{what}` is NULL"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(BeamsimStatus::InvalidArgument, msg.into())
}

/// Runs `f`, turning errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BeamsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BeamsimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            BeamsimStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn beamsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn beamsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn beamsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Solves for the misalignment and gain from readings at the kept phase,
/// rotated by pi, and rotated by pi/2.
///
/// # Safety
/// Out-pointers must be NULL or valid for writes; `beta` and `t_mag` are
/// required.
#[no_mangle]
pub unsafe extern "C" fn beamsim_solve_three(
    m1: f64,
    m2: f64,
    m3: f64,
    tx_power: f64,
    beta: *mut f64,
    t_mag: *mut f64,
    degenerate: *mut bool,
) -> BeamsimStatus {
    guard(|| {
        let (beta, t_mag) = (out(beta, "beta")?, out(t_mag, "t_mag")?);
        if !(tx_power > 0.0) || ![m1, m2, m3].iter().all(|m| m.is_finite() && *m >= 0.0) {
            return Err(invalid("readings must be finite and >= 0, tx_power > 0"));
        }
        let s = solve_three(m1, m2, m3, tx_power);
        *beta = s.beta;
        *t_mag = s.t_mag;
        if let Some(d) = degenerate.as_mut() {
            *d = s.degenerate;
        }
        Ok(())
    })
}

/// Recovers `|beta|` from two readings and a known gain.
///
/// # Safety
/// `beta_mag` must be valid for writes; `degenerate` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn beamsim_solve_two(
    m1: f64,
    m2: f64,
    t_mag: f64,
    tx_power: f64,
    beta_mag: *mut f64,
    degenerate: *mut bool,
) -> BeamsimStatus {
    guard(|| {
        let beta_mag = out(beta_mag, "beta_mag")?;
        if !(tx_power > 0.0) || ![m1, m2, t_mag].iter().all(|m| m.is_finite() && *m >= 0.0) {
            return Err(invalid("readings and gain must be finite and >= 0, tx_power > 0"));
        }
        let s = solve_two(m1, m2, t_mag, tx_power);
        *beta_mag = s.beta_mag;
        if let Some(d) = degenerate.as_mut() {
            *d = s.degenerate;
        }
        Ok(())
    })
}

/// Quantizes `beta` to `bits` bits. Inside the dead zone `*sent` is false
/// and `*value` is 0.
///
/// # Safety
/// `value` and `sent` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beamsim_quantize(
    beta: f64,
    bits: u8,
    dead_zone_factor: f64,
    value: *mut f64,
    sent: *mut bool,
) -> BeamsimStatus {
    guard(|| {
        let (value, sent) = (out(value, "value")?, out(sent, "sent")?);
        let q = quantize_beta(beta, bits, dead_zone_factor)?;
        *sent = q.value.is_some();
        *value = q.value.unwrap_or(0.0);
        Ok(())
    })
}

/// A fixed channel: per-node gains and phases plus transmit power.
pub struct BeamsimChannel(ChannelState);

/// Creates a channel of `n` nodes.
///
/// # Safety
/// `gains` and `phases` must point to `n` doubles; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn beamsim_channel_new(
    gains: *const f64,
    phases: *const f64,
    n: usize,
    tx_power: f64,
    out_channel: *mut *mut BeamsimChannel,
) -> BeamsimStatus {
    guard(|| {
        let slot = out(out_channel, "out_channel")?;
        let g = slice_arg(gains, n, "gains")?.to_vec();
        let p = slice_arg(phases, n, "phases")?.to_vec();
        let c = ChannelState::new(g, p, tx_power)?;
        *slot = Box::into_raw(Box::new(BeamsimChannel(c)));
        Ok(())
    })
}

/// # Safety
/// `channel` must be NULL or a live handle from [`beamsim_channel_new`].
#[no_mangle]
pub unsafe extern "C" fn beamsim_channel_free(channel: *mut BeamsimChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Noiseless RSS for the given transmitter phase offsets.
///
/// # Safety
/// `phases` must point to `n` doubles, `n` matching the channel size.
#[no_mangle]
pub unsafe extern "C" fn beamsim_channel_rss(
    channel: *const BeamsimChannel,
    phases: *const f64,
    n: usize,
    rss: *mut f64,
) -> BeamsimStatus {
    guard(|| {
        let c = &channel.as_ref().ok_or_else(|| null("channel"))?.0;
        let rss = out(rss, "rss")?;
        let psi = PhaseVector::new(slice_arg(phases, n, "phases")?.to_vec())?;
        *rss = evaluate_rss(c, &psi)?;
        Ok(())
    })
}

/// RSS with every node aligned.
///
/// # Safety
/// `channel` must be a live handle; `rss` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beamsim_channel_rss_max(channel: *const BeamsimChannel, rss: *mut f64) -> BeamsimStatus {
    guard(|| {
        let c = &channel.as_ref().ok_or_else(|| null("channel"))?.0;
        *out(rss, "rss")? = rss_max(c);
        Ok(())
    })
}

/// A validated list of experiments.
pub struct BeamsimSuite(Suite);

/// Parses a config (single experiment or suite) from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_suite` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beamsim_suite_parse(json: *const c_char, out_suite: *mut *mut BeamsimSuite) -> BeamsimStatus {
    guard(|| {
        let slot = out(out_suite, "out_suite")?;
        let suite = harness::parse_suite(str_arg(json, "json")?, "experiment")?;
        *slot = Box::into_raw(Box::new(BeamsimSuite(suite)));
        Ok(())
    })
}

/// Loads a bundled preset by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out_suite` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beamsim_suite_preset(name: *const c_char, out_suite: *mut *mut BeamsimSuite) -> BeamsimStatus {
    guard(|| {
        let slot = out(out_suite, "out_suite")?;
        let suite = harness::load_preset(str_arg(name, "name")?)?;
        *slot = Box::into_raw(Box::new(BeamsimSuite(suite)));
        Ok(())
    })
}

/// # Safety
/// `suite` must be NULL or a live suite handle.
#[no_mangle]
pub unsafe extern "C" fn beamsim_suite_free(suite: *mut BeamsimSuite) {
    if !suite.is_null() {
        drop(Box::from_raw(suite));
    }
}

/// Number of experiments in the suite, 0 for NULL.
///
/// # Safety
/// `suite` must be NULL or a live suite handle.
#[no_mangle]
pub unsafe extern "C" fn beamsim_suite_len(suite: *const BeamsimSuite) -> usize {
    suite.as_ref().map_or(0, |s| s.0.runs.len())
}

/// Overrides seed, trial count and slot budget of every run. Negative
/// values (or 0 for counts) leave a field unchanged.
///
/// # Safety
/// `suite` must be a live suite handle.
#[no_mangle]
pub unsafe extern "C" fn beamsim_suite_override(
    suite: *mut BeamsimSuite,
    seed: i64,
    trials: i64,
    budget: i64,
) -> BeamsimStatus {
    guard(|| {
        let s = &mut suite.as_mut().ok_or_else(|| null("suite"))?.0;
        let trials = match trials {
            t if t <= 0 => None,
            t => Some(u32::try_from(t).map_err(|_| invalid("trials out of range"))?),
        };
        let seed = u64::try_from(seed).ok();
        let budget = u64::try_from(budget).ok().filter(|b| *b > 0);
        s.override_all(seed, trials, budget);
        s.validate()?;
        Ok(())
    })
}

/// Runs every experiment and writes summaries, traces and the plot under
/// `out_dir`.
///
/// # Safety
/// `suite` must be a live handle and `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn beamsim_suite_run(suite: *const BeamsimSuite, out_dir: *const c_char) -> BeamsimStatus {
    guard(|| {
        let s = &suite.as_ref().ok_or_else(|| null("suite"))?.0;
        harness::run_suite(s, Path::new(str_arg(out_dir, "out_dir")?))?;
        Ok(())
    })
}

/// Names of the bundled presets, one per line. Free with
/// [`beamsim_string_free`].
#[no_mangle]
pub extern "C" fn beamsim_presets() -> *mut c_char {
    let names: Vec<&str> = presets::PRESETS.iter().map(|p| p.name).collect();
    CString::new(names.join("\n")).expect("no nuls in preset names").into_raw()
}

/// One row of a trial trace.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BeamsimRecord {
    pub trial: u32,
    pub slot: u64,
    pub rss: f64,
    pub rss_max: f64,
    pub ratio: f64,
    pub n_active: usize,
}

/// One trial of one experiment, advanced a slot at a time.
pub struct BeamsimTrial {
    runner: TrialRunner,
    stage: CString,
}

/// Starts trial `trial` of experiment `run` of the suite. The trial keeps
/// its own copy of the config.
///
/// # Safety
/// `suite` must be a live handle; `out_trial` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beamsim_trial_new(
    suite: *const BeamsimSuite,
    run: usize,
    trial: u32,
    out_trial: *mut *mut BeamsimTrial,
) -> BeamsimStatus {
    guard(|| {
        let s = &suite.as_ref().ok_or_else(|| null("suite"))?.0;
        let slot = out(out_trial, "out_trial")?;
        let cfg = s
            .runs
            .get(run)
            .ok_or_else(|| invalid(format!("run {run} out of range, suite has {}", s.runs.len())))?;
        *slot = Box::into_raw(Box::new(BeamsimTrial {
            runner: TrialRunner::new(cfg, trial),
            stage: CString::default(),
        }));
        Ok(())
    })
}

/// # Safety
/// `trial` must be NULL or a live trial handle.
#[no_mangle]
pub unsafe extern "C" fn beamsim_trial_free(trial: *mut BeamsimTrial) {
    if !trial.is_null() {
        drop(Box::from_raw(trial));
    }
}

/// Runs one slot and writes its trace row.
///
/// # Safety
/// `trial` must be a live handle; `record` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beamsim_trial_step(trial: *mut BeamsimTrial, record: *mut BeamsimRecord) -> BeamsimStatus {
    guard(|| {
        let t = trial.as_mut().ok_or_else(|| null("trial"))?;
        let record = out(record, "record")?;
        let r = t.runner.step()?;
        t.stage = CString::new(r.stage).expect("stage tags have no nuls");
        *record = BeamsimRecord {
            trial: r.trial,
            slot: r.slot,
            rss: r.rss,
            rss_max: r.rss_max,
            ratio: r.ratio,
            n_active: r.n_active,
        };
        Ok(())
    })
}

/// Algorithm stage of the last slot run, "" before the first. Valid until
/// the next step or free.
///
/// # Safety
/// `trial` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beamsim_trial_stage(trial: *const BeamsimTrial) -> *const c_char {
    trial.as_ref().map_or(ptr::null(), |t| t.stage.as_ptr())
}
