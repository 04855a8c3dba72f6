//! C ABI over the dense-coding library.
//!
//! Message sets are opaque `DcMessageSet` handles owned by the caller and
//! released with `dc_message_set_free`. Every fallible call returns a
//! `DcStatus`; on failure `dc_last_error` describes the most recent error on
//! the calling thread. Strings returned by the library are released with
//! `dc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dense_coding::feasibility::{decide, search_feasible, Decision, Mode, RankProfile, SearchConfig};
use dense_coding::io::MessageSetFile;
use dense_coding::protocol::{build_decoder, simulate_many, verify_message_set};
use dense_coding::qmat::{MessageSet, SchmidtSpectrum};
use dense_coding::{analytic, Error};

/// Result of a library call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    InvalidArgument = 2,
    /// The search or construction gave a negative result.
    Infeasible = 3,
    VerificationFailed = 4,
    /// Malformed JSON, unsupported format version or invalid UTF-8.
    Format = 5,
    Io = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Opaque message set.
pub struct DcMessageSet {
    set: MessageSet,
    seed: Option<u64>,
}

/// Encoding mode for `dc_search`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcMode {
    Unitary = 0,
    General = 1,
}

/// Search settings; obtain defaults from `dc_search_options_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DcSearchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub success_tol: f64,
    pub max_iterations: usize,
    pub max_kappa: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DcStatus {
    match e {
        Error::Format(_) => DcStatus::Format,
        Error::Io(_) => DcStatus::Io,
        Error::Verification(_) => DcStatus::VerificationFailed,
        Error::NoTransition(_) | Error::CertificateInfeasible { .. } | Error::NoObstruction | Error::NotPaired(_) => {
            DcStatus::Infeasible
        }
        _ => DcStatus::InvalidArgument,
    }
}

fn fail(status: DcStatus, msg: impl Into<String>) -> DcStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<DcStatus, DcStatus>) -> DcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) | Ok(Err(s)) => s,
        Err(_) => fail(DcStatus::Internal, "panic inside the library"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, DcStatus>;
}

impl<T> OrStatus<T> for dense_coding::Result<T> {
    fn or_status(self) -> Result<T, DcStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn reference<'a, T>(p: *const T, name: &str) -> Result<&'a T, DcStatus> {
    p.as_ref().ok_or_else(|| fail(DcStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_param<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, DcStatus> {
    p.as_mut().ok_or_else(|| fail(DcStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], DcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DcStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, DcStatus> {
    if p.is_null() {
        return Err(fail(DcStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(DcStatus::Format, format!("{name} is not UTF-8")))
}

fn handle(set: MessageSet, seed: Option<u64>) -> *mut DcMessageSet {
    Box::into_raw(Box::new(DcMessageSet { set, seed }))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn dc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn dc_search_options_default() -> DcSearchOptions {
    let c = SearchConfig::default();
    DcSearchOptions {
        restarts: c.restarts,
        seed: c.seed,
        success_tol: c.success_tol,
        max_iterations: c.max_iterations,
        max_kappa: c.max_kappa,
    }
}

/// Search for `n_messages` messages at the spectrum `lambdas[0..dim]`.
///
/// With `kappas` non-null only that rank profile (`n_messages` entries) is
/// searched; otherwise every profile allowed by `mode`. On `Ok` `*out`
/// receives a new handle; on `Infeasible` it is set to null. `best_cost`
/// may be null.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn dc_search(
    dim: usize,
    lambdas: *const f64,
    n_messages: usize,
    mode: DcMode,
    kappas: *const usize,
    options: *const DcSearchOptions,
    out: *mut *mut DcMessageSet,
    best_cost: *mut f64,
) -> DcStatus {
    guard(|| {
        let out = out_param(out, "out")?;
        *out = ptr::null_mut();
        let opts = reference(options, "options")?;
        let spec = SchmidtSpectrum::new(slice(lambdas, dim, "lambdas")?.to_vec()).or_status()?;
        let cfg = SearchConfig {
            restarts: opts.restarts,
            seed: opts.seed,
            success_tol: opts.success_tol,
            max_iterations: opts.max_iterations,
            max_kappa: opts.max_kappa,
            ..SearchConfig::default()
        };
        let (witness, cost, seed) = if kappas.is_null() {
            let m = if mode == DcMode::Unitary { Mode::Unitary } else { Mode::General };
            match decide(dim, &spec, n_messages, m, &cfg).or_status()? {
                Decision::Feasible(o) => (o.witness.clone(), Some(o.best_cost), o.decisive_seed()),
                d => (None, d.best_cost(), None),
            }
        } else {
            let profile = RankProfile::new(slice(kappas, n_messages, "kappas")?.to_vec()).or_status()?;
            let o = search_feasible(dim, &spec, &profile, &cfg).or_status()?;
            (o.witness.clone(), Some(o.best_cost), o.decisive_seed())
        };
        if let Some(b) = best_cost.as_mut() {
            *b = cost.unwrap_or(f64::NAN);
        }
        match witness {
            Some(w) => {
                *out = handle(w, seed);
                Ok(DcStatus::Ok)
            }
            None => Err(fail(DcStatus::Infeasible, "no message set found")),
        }
    })
}

/// Parse a message-set JSON document.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_message_set_from_json(json: *const c_char, out: *mut *mut DcMessageSet) -> DcStatus {
    guard(|| {
        let out = out_param(out, "out")?;
        *out = ptr::null_mut();
        let file = MessageSetFile::from_json(text(json, "json")?).or_status()?;
        let set = file.to_set().or_status()?;
        *out = handle(set, file.metadata.seed);
        Ok(DcStatus::Ok)
    })
}

/// Serialize a message set; free the result with `dc_string_free`.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_message_set_to_json(set: *const DcMessageSet, out: *mut *mut c_char) -> DcStatus {
    guard(|| {
        let out = out_param(out, "out")?;
        *out = ptr::null_mut();
        let h = reference(set, "set")?;
        let json = MessageSetFile::from_set(&h.set, h.seed).to_json().or_status()?;
        *out = CString::new(json).map_err(|_| fail(DcStatus::Internal, "nul in JSON"))?.into_raw();
        Ok(DcStatus::Ok)
    })
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_message_set_free(set: *mut DcMessageSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of messages, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_message_set_len(set: *const DcMessageSet) -> usize {
    set.as_ref().map_or(0, |h| h.set.len())
}

/// Local dimension, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_message_set_dim(set: *const DcMessageSet) -> usize {
    set.as_ref().map_or(0, |h| h.set.dim())
}

/// Kraus rank of message `j`, or 0 when out of range.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_message_set_kraus_rank(set: *const DcMessageSet, j: usize) -> usize {
    set.as_ref().and_then(|h| h.set.messages().get(j)).map_or(0, |m| m.kraus_rank())
}

/// Orthogonality cost of the set.
///
/// # Safety
/// `set` must be a live handle; `cost` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_message_set_cost(set: *const DcMessageSet, cost: *mut f64) -> DcStatus {
    guard(|| {
        let h = reference(set, "set")?;
        *out_param(cost, "cost")? = dense_coding::feasibility::orthogonality_cost(&h.set);
        Ok(DcStatus::Ok)
    })
}

/// Verify at `tol`; `Ok` on pass, `VerificationFailed` otherwise. The
/// largest violation is stored in `max_violation` when it is non-null.
///
/// # Safety
/// `set` must be a live handle; `max_violation` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dc_verify(set: *const DcMessageSet, tol: f64, max_violation: *mut f64) -> DcStatus {
    guard(|| {
        let h = reference(set, "set")?;
        let v = verify_message_set(&h.set, tol);
        if let Some(m) = max_violation.as_mut() {
            *m = v.max_violation;
        }
        if v.passed {
            Ok(DcStatus::Ok)
        } else {
            Err(fail(DcStatus::VerificationFailed, v.worst.unwrap_or_else(|| "verification failed".into())))
        }
    })
}

/// Run `trials` seeded protocol trials; `accuracy` receives the fraction
/// decoded with certainty.
///
/// # Safety
/// `set` must be a live handle; `accuracy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_simulate(set: *const DcMessageSet, trials: usize, seed: u64, accuracy: *mut f64) -> DcStatus {
    guard(|| {
        let h = reference(set, "set")?;
        let acc = out_param(accuracy, "accuracy")?;
        let decoder = build_decoder(&h.set, 1e-10).or_status()?;
        *acc = simulate_many(&h.set, &decoder, trials, seed).or_status()?.accuracy();
        Ok(DcStatus::Ok)
    })
}

/// Slack `4 - (1-3x)/x²` of the ninth-unitary certificate; `feasible` is
/// set to 1 when it is non-negative.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_ninth_certificate(x: f64, slack: *mut f64, feasible: *mut i32) -> DcStatus {
    guard(|| {
        let slack = out_param(slack, "slack")?;
        let feasible = out_param(feasible, "feasible")?;
        let c = analytic::ninth_feasibility_certificate(x).or_status()?;
        *slack = c.slack;
        *feasible = c.feasible as i32;
        Ok(DcStatus::Ok)
    })
}

/// Obstruction gap `λ₀/λ₁ - λ₁/λ₀` for a third two-qubit message.
///
/// # Safety
/// `gap` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_qubit_no_go(lambda0: f64, gap: *mut f64) -> DcStatus {
    guard(|| {
        let gap = out_param(gap, "gap")?;
        *gap = analytic::qubit_no_go(lambda0).or_status()?.gap;
        Ok(DcStatus::Ok)
    })
}

/// The eight-unitary block set at edge-E ratio `x`, with identity dressings
/// and `β₂` phases `phase_diag`, `phase_anti`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_block_set(x: f64, phase_diag: f64, phase_anti: f64, out: *mut *mut DcMessageSet) -> DcStatus {
    guard(|| {
        let out = out_param(out, "out")?;
        *out = ptr::null_mut();
        let bs = analytic::build_block_set(x, analytic::Dressings::identity(), (phase_diag, phase_anti)).or_status()?;
        *out = handle(bs.message_set(), None);
        Ok(DcStatus::Ok)
    })
}
