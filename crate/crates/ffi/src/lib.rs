//! C ABI over the ratchetlab library.
//!
//! Every fallible function returns an [`RlStatus`]; on failure the message is
//! available from [`rl_last_error_message`] on the same thread. Handles are
//! opaque, created by `*_from_json` / builder functions and released with the
//! matching `*_free`. Strings returned through `char **` out-parameters are
//! owned by the caller and released with [`rl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ratchetlab::equivalence::{forward_epsilon_machine, reverse_epsilon_machine};
use ratchetlab::info::{classical_dissipation, classify_efficiency, entropy_rate};
use ratchetlab::machine::{stationary_distribution, time_reverse, word_probability, Machine};
use ratchetlab::qmachine::{
    build_qmachine, build_reverse_qmachine, check_forward_efficiency, check_reverse_efficiency, qword_probability,
    quantum_dissipation, Kind, PhaseTable, QMachine,
};
use ratchetlab::{Error, ErrorCategory, Limits};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Precondition = 4,
    Internal = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque classical machine.
pub struct RlMachine(Machine);

/// Opaque q-machine.
pub struct RlQMachine(QMachine);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: RlStatus, msg: impl Into<String>) -> RlStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> RlStatus {
    let status = match e.category() {
        ErrorCategory::InvalidInput => RlStatus::InvalidInput,
        ErrorCategory::Precondition => RlStatus::Precondition,
        ErrorCategory::Internal => RlStatus::Internal,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), RlStatus>) -> RlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(RlStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, RlStatus>;
}

impl<T> OrStatus<T> for ratchetlab::Result<T> {
    fn or_status(self) -> Result<T, RlStatus> {
        self.map_err(from_error)
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, RlStatus> {
    // SAFETY: caller guarantees `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| fail(RlStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, RlStatus> {
    // SAFETY: caller guarantees `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| fail(RlStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, RlStatus> {
    if p.is_null() {
        return Err(fail(RlStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(RlStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn write_slice(values: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> Result<(), RlStatus> {
    if !written.is_null() {
        // SAFETY: checked non-null; caller guarantees validity.
        unsafe { *written = values.len() };
    }
    if len < values.len() {
        return Err(fail(
            RlStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} required", values.len()),
        ));
    }
    if buf.is_null() {
        return Err(fail(RlStatus::NullPointer, "output buffer is null"));
    }
    // SAFETY: `buf` has room for `len >= values.len()` doubles.
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, RlStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(RlStatus::Internal, "string contains NUL"))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parses and validates a machine from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_from_json(json: *const c_char, out_machine: *mut *mut RlMachine) -> RlStatus {
    guard(|| {
        let slot = unsafe { out(out_machine, "out_machine") }?;
        let m = Machine::from_json(unsafe { text(json, "json") }?).or_status()?;
        *slot = Box::into_raw(Box::new(RlMachine(m)));
        Ok(())
    })
}

/// Releases a machine handle. NULL is ignored.
///
/// # Safety
/// `machine` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_free(machine: *mut RlMachine) {
    if !machine.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(machine) });
    }
}

/// Serializes a machine to JSON; free the result with [`rl_string_free`].
///
/// # Safety
/// `machine` must be a live handle; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_to_json(machine: *const RlMachine, out_json: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        let slot = unsafe { out(out_json, "out_json") }?;
        *slot = into_c_string(m.0.to_json())?;
        Ok(())
    })
}

/// Number of states and symbols.
///
/// # Safety
/// `machine` must be a live handle; out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_shape(
    machine: *const RlMachine,
    out_states: *mut usize,
    out_symbols: *mut usize,
) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        *unsafe { out(out_states, "out_states") }? = m.0.num_states();
        *unsafe { out(out_symbols, "out_symbols") }? = m.0.num_symbols();
        Ok(())
    })
}

/// Writes the stationary distribution into `buf` (state order of the file).
/// `written` (optional) receives the required length.
///
/// # Safety
/// `machine` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_stationary(
    machine: *const RlMachine,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        let pi = stationary_distribution(&m.0).or_status()?;
        unsafe { write_slice(pi.as_slice(), buf, len, written) }
    })
}

/// Probability of a word given as concatenated single-character symbols or
/// whitespace-separated symbol labels.
///
/// # Safety
/// `machine` must be a live handle; `word` NUL-terminated; `out_prob` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_word_probability(
    machine: *const RlMachine,
    word: *const c_char,
    out_prob: *mut f64,
) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        let w = m.0.parse_word(unsafe { text(word, "word") }?).or_status()?;
        *unsafe { out(out_prob, "out_prob") }? = word_probability(&m.0, &w).or_status()?;
        Ok(())
    })
}

fn new_machine(slot: &mut *mut RlMachine, m: Machine) {
    *slot = Box::into_raw(Box::new(RlMachine(m)));
}

/// Time reversal of a machine as a new handle.
///
/// # Safety
/// `machine` must be a live handle; `out_machine` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_time_reverse(machine: *const RlMachine, out_machine: *mut *mut RlMachine) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        let slot = unsafe { out(out_machine, "out_machine") }?;
        new_machine(slot, time_reverse(&m.0).or_status()?);
        Ok(())
    })
}

/// Forward (`reverse == false`) or reverse epsilon-machine as a new handle.
/// Enumeration caps follow the `RATCHETLAB_CAP` environment variable.
///
/// # Safety
/// `machine` must be a live handle; `out_machine` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_epsilon_machine(
    machine: *const RlMachine,
    reverse: bool,
    out_machine: *mut *mut RlMachine,
) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        let slot = unsafe { out(out_machine, "out_machine") }?;
        let limits = Limits::from_env();
        let em = if reverse {
            reverse_epsilon_machine(&m.0, &limits)
        } else {
            forward_epsilon_machine(&m.0, &limits)
        };
        new_machine(slot, em.or_status()?);
        Ok(())
    })
}

/// Structural efficiency verdict of the classical classifier.
///
/// # Safety
/// `machine` must be a live handle; `out_efficient` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_classify(machine: *const RlMachine, out_efficient: *mut bool) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        *unsafe { out(out_efficient, "out_efficient") }? = classify_efficiency(&m.0).or_status()?.efficient;
        Ok(())
    })
}

/// Classical locality dissipation in bits for `t = 1..=t_max`.
///
/// # Safety
/// `machine` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_dissipation(
    machine: *const RlMachine,
    t_max: usize,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        let trace = classical_dissipation(&m.0, t_max, &Limits::from_env()).or_status()?;
        let values: Vec<f64> = trace.records.iter().map(|r| r.dissipation).collect();
        unsafe { write_slice(&values, buf, len, written) }
    })
}

/// Entropy rate in bits per symbol.
///
/// # Safety
/// `machine` must be a live handle; `out_rate` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_machine_entropy_rate(machine: *const RlMachine, out_rate: *mut f64) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        *unsafe { out(out_rate, "out_rate") }? = entropy_rate(&m.0, &Limits::from_env()).or_status()?.bits_per_symbol;
        Ok(())
    })
}

/// Builds a forward (`reverse == false`) or reverse q-machine. `phases` is
/// NULL for all-zero phases, otherwise `num_symbols * num_states` values in
/// symbol-major order.
///
/// # Safety
/// `machine` must be a live handle; `phases` NULL or holding `phases_len`
/// doubles; `out_qmachine` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_build(
    machine: *const RlMachine,
    reverse: bool,
    phases: *const f64,
    phases_len: usize,
    out_qmachine: *mut *mut RlQMachine,
) -> RlStatus {
    guard(|| {
        let m = unsafe { borrow(machine, "machine") }?;
        let slot = unsafe { out(out_qmachine, "out_qmachine") }?;
        let (k, n) = (m.0.num_symbols(), m.0.num_states());
        let table = if phases.is_null() {
            PhaseTable::zeros(k, n)
        } else {
            if phases_len != k * n {
                return Err(fail(
                    RlStatus::InvalidInput,
                    format!("phase table needs {} values, got {phases_len}", k * n),
                ));
            }
            // SAFETY: caller guarantees `phases_len` readable doubles.
            let flat = unsafe { std::slice::from_raw_parts(phases, phases_len) };
            PhaseTable::new(flat.chunks(n).map(<[f64]>::to_vec).collect()).or_status()?
        };
        let qm = if reverse {
            build_reverse_qmachine(&m.0, &table)
        } else {
            build_qmachine(&m.0, &table)
        };
        *slot = Box::into_raw(Box::new(RlQMachine(qm.or_status()?)));
        Ok(())
    })
}

/// Loads and revalidates a q-machine from JSON.
///
/// # Safety
/// `json` must be NUL-terminated; `out_qmachine` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_from_json(json: *const c_char, out_qmachine: *mut *mut RlQMachine) -> RlStatus {
    guard(|| {
        let slot = unsafe { out(out_qmachine, "out_qmachine") }?;
        let qm = QMachine::from_json(unsafe { text(json, "json") }?).or_status()?;
        *slot = Box::into_raw(Box::new(RlQMachine(qm)));
        Ok(())
    })
}

/// Serializes a q-machine to JSON; free the result with [`rl_string_free`].
///
/// # Safety
/// `qmachine` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_to_json(qmachine: *const RlQMachine, out_json: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let q = unsafe { borrow(qmachine, "qmachine") }?;
        *unsafe { out(out_json, "out_json") }? = into_c_string(q.0.to_json())?;
        Ok(())
    })
}

/// Releases a q-machine handle. NULL is ignored.
///
/// # Safety
/// `qmachine` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_free(qmachine: *mut RlQMachine) {
    if !qmachine.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(qmachine) });
    }
}

/// Memory dimension `d`.
///
/// # Safety
/// `qmachine` must be a live handle; `out_dim` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_dim(qmachine: *const RlQMachine, out_dim: *mut usize) -> RlStatus {
    guard(|| {
        let q = unsafe { borrow(qmachine, "qmachine") }?;
        *unsafe { out(out_dim, "out_dim") }? = q.0.dim();
        Ok(())
    })
}

/// `Tr[K^w rho K^w^dagger]` for a word in the source alphabet.
///
/// # Safety
/// `qmachine` must be a live handle; `word` NUL-terminated; `out_prob` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_word_probability(
    qmachine: *const RlQMachine,
    word: *const c_char,
    out_prob: *mut f64,
) -> RlStatus {
    guard(|| {
        let q = unsafe { borrow(qmachine, "qmachine") }?;
        let w = q.0.source().parse_word(unsafe { text(word, "word") }?).or_status()?;
        *unsafe { out(out_prob, "out_prob") }? = qword_probability(&q.0, &w).or_status()?;
        Ok(())
    })
}

/// Quantum locality dissipation in bits for `t = 1..=t_max`.
///
/// # Safety
/// `qmachine` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_dissipation(
    qmachine: *const RlQMachine,
    t_max: usize,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> RlStatus {
    guard(|| {
        let q = unsafe { borrow(qmachine, "qmachine") }?;
        let trace = quantum_dissipation(&q.0, t_max, &Limits::from_env()).or_status()?;
        let values: Vec<f64> = trace.records.iter().map(|r| r.dissipation).collect();
        unsafe { write_slice(&values, buf, len, written) }
    })
}

/// Efficiency verdict of the theorem checker matching the q-machine's kind;
/// `t_check` is the cross-check horizon (0 disables it).
///
/// # Safety
/// `qmachine` must be a live handle; `out_efficient` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_qmachine_check(
    qmachine: *const RlQMachine,
    t_check: usize,
    out_efficient: *mut bool,
) -> RlStatus {
    guard(|| {
        let q = unsafe { borrow(qmachine, "qmachine") }?;
        let limits = Limits::from_env();
        let verdict = match q.0.kind() {
            Kind::Forward => check_forward_efficiency(&q.0, t_check, &limits),
            Kind::Reverse => check_reverse_efficiency(&q.0, t_check, &limits),
        };
        *unsafe { out(out_efficient, "out_efficient") }? = verdict.or_status()?.efficient;
        Ok(())
    })
}
