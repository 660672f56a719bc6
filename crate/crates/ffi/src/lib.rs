//! C ABI over `earsim`.
//!
//! Every function returns an [`EarsimStatus`]; results travel through out
//! pointers. Trials and experiments are opaque handles that the caller must
//! release with the matching `*_free` function. After a non-OK status,
//! `earsim_last_error` describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use earsim::analytic::ChannelParams;
use earsim::channel::{ber_to_per, FecModel};
use earsim::harness::{
    analytic_lambda, run_experiment, ConfigFile, ExperimentConfig, ExperimentResult,
};
use earsim::schemes::{run_trial, Scheme, TrialConfig, TrialResult};
use earsim::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EarsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Loss rates were not ascending where a closed form needs them sorted.
    Unsorted = 3,
    /// A trial hit its round cap or broke a protocol invariant.
    Simulation = 4,
    Config = 5,
    Io = 6,
    /// The output buffer is too small; the required size was still written.
    BufferTooSmall = 7,
    /// No closed form exists for the request.
    Unavailable = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EarsimScheme {
    Arq = 0,
    NcArq = 1,
    Ear = 2,
}

impl From<EarsimScheme> for Scheme {
    fn from(s: EarsimScheme) -> Self {
        match s {
            EarsimScheme::Arq => Scheme::Arq,
            EarsimScheme::NcArq => Scheme::NcArq,
            EarsimScheme::Ear => Scheme::Ear,
        }
    }
}

/// Summary of one finished trial.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EarsimTrialStats {
    pub initial_transmissions: u64,
    pub retransmissions: u64,
    pub coded_transmissions: u64,
    pub unwanted_retransmissions: u64,
    pub rounds: u64,
    pub overhead_a_bytes: u64,
    pub overhead_b_bytes: u64,
    pub lambda: f64,
    /// 1 when no safety invariant broke and every packet arrived.
    pub clean: u8,
}

/// Opaque handle to a finished trial.
pub struct EarsimTrial(TrialResult);

/// Opaque handle to a finished experiment grid.
pub struct EarsimExperiment(ExperimentResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> EarsimStatus {
    match e {
        Error::Unsorted { .. } => EarsimStatus::Unsorted,
        Error::RoundCap { .. } => EarsimStatus::Simulation,
        Error::Config(_) | Error::ParseConfig { .. } => EarsimStatus::Config,
        Error::ReadConfig { .. } | Error::Io(_) | Error::Csv(_) => EarsimStatus::Io,
        Error::Grid { source, .. } => status_of(source),
        _ => EarsimStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (EarsimStatus, String)>) -> EarsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EarsimStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside earsim".into());
            EarsimStatus::Panic
        }
    }
}

fn lib(e: Error) -> (EarsimStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (EarsimStatus, String) {
    (EarsimStatus::NullPointer, format!("{name} is null"))
}

/// # Safety
/// `omegas` must point at `receivers` readable doubles.
unsafe fn channel(
    omegas: *const f64,
    receivers: usize,
) -> Result<ChannelParams, (EarsimStatus, String)> {
    if omegas.is_null() {
        return Err(null("omegas"));
    }
    let w = std::slice::from_raw_parts(omegas, receivers).to_vec();
    ChannelParams::new(w).map_err(lib)
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn earsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Closed-form retransmissions per delivered packet. Loss rates may be in
/// any order.
///
/// # Safety
/// `omegas` must point at `receivers` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn earsim_lambda(
    scheme: EarsimScheme,
    omegas: *const f64,
    receivers: usize,
    out: *mut f64,
) -> EarsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = channel(omegas, receivers)?;
        let l = analytic_lambda(scheme.into(), &c).ok_or((
            EarsimStatus::Unavailable,
            "no closed form for these loss rates".into(),
        ))?;
        *out = l;
        Ok(())
    })
}

/// Packet erasure rate after the default Reed-Solomon and CRC protection.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn earsim_ber_to_per(ber: f64, out: *mut f64) -> EarsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ber_to_per(ber, &FecModel::default()).map_err(lib)?;
        Ok(())
    })
}

/// Simulates one trial. On success `*out` owns a handle for
/// `earsim_trial_free`.
///
/// # Safety
/// `omegas` must point at `receivers` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn earsim_trial_run(
    scheme: EarsimScheme,
    omegas: *const f64,
    receivers: usize,
    packets: usize,
    seed: u64,
    trial: u64,
    out: *mut *mut EarsimTrial,
) -> EarsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut cfg = TrialConfig::new(scheme.into(), channel(omegas, receivers)?, packets, seed);
        cfg.trial = trial;
        let r = run_trial(&cfg).map_err(lib)?;
        *out = Box::into_raw(Box::new(EarsimTrial(r)));
        Ok(())
    })
}

/// # Safety
/// `trial` must come from `earsim_trial_run`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn earsim_trial_stats(
    trial: *const EarsimTrial,
    out: *mut EarsimTrialStats,
) -> EarsimStatus {
    guard(|| {
        let (Some(t), false) = (trial.as_ref(), out.is_null()) else {
            return Err(null("trial or out"));
        };
        let r = &t.0;
        *out = EarsimTrialStats {
            initial_transmissions: r.initial_transmissions,
            retransmissions: r.retransmissions,
            coded_transmissions: r.coded_transmissions,
            unwanted_retransmissions: r.unwanted_retransmissions,
            rounds: r.rounds,
            overhead_a_bytes: r.overhead_a_bytes,
            overhead_b_bytes: r.overhead_b_bytes,
            lambda: r.lambda(),
            clean: r.is_clean() as u8,
        };
        Ok(())
    })
}

/// # Safety
/// `trial` must come from `earsim_trial_run` and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn earsim_trial_free(trial: *mut EarsimTrial) {
    if !trial.is_null() {
        drop(Box::from_raw(trial));
    }
}

/// Runs an experiment described by TOML text, using the same keys as the
/// command-line config file. On success `*out` owns a handle for
/// `earsim_experiment_free`.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn earsim_experiment_run(
    toml: *const c_char,
    out: *mut *mut EarsimExperiment,
) -> EarsimStatus {
    guard(|| {
        if toml.is_null() || out.is_null() {
            return Err(null("toml or out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| (EarsimStatus::InvalidArgument, e.to_string()))?;
        let file = ConfigFile::from_toml(text, Path::new("<ffi>")).map_err(lib)?;
        let config = ExperimentConfig::resolve(file, None).map_err(lib)?;
        let result = run_experiment(&config).map_err(lib)?;
        if let Some((label, t)) = result.unclean().first() {
            return Err((
                EarsimStatus::Simulation,
                format!("{label} scheme={} broke a protocol invariant", t.scheme),
            ));
        }
        *out = Box::into_raw(Box::new(EarsimExperiment(result)));
        Ok(())
    })
}

/// Copies the results CSV, NUL-terminated, into `buf`. `*needed` receives
/// the size including the terminator; pass a null `buf` to query it.
///
/// # Safety
/// `experiment` must come from `earsim_experiment_run`, `buf` must hold
/// `len` bytes unless null, and `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn earsim_experiment_csv(
    experiment: *const EarsimExperiment,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> EarsimStatus {
    guard(|| {
        let (Some(x), false) = (experiment.as_ref(), needed.is_null()) else {
            return Err(null("experiment or needed"));
        };
        let mut bytes = Vec::new();
        x.0.write_csv(&mut bytes).map_err(lib)?;
        *needed = bytes.len() + 1;
        if buf.is_null() || len < bytes.len() + 1 {
            return Err((
                EarsimStatus::BufferTooSmall,
                format!("{} bytes needed", bytes.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `experiment` must come from `earsim_experiment_run` and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn earsim_experiment_free(experiment: *mut EarsimExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}
