//! C ABI over the `qsim` simulator.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the
//! matching `*_free` function. Every fallible call returns a [`QsimStatus`];
//! on failure [`qsim_last_error`] describes what went wrong on this thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qsim::noise::{run_trajectories, NoiseModel, TrajectoryConfig};
use qsim::pauli::parse_pauli_file;
use qsim::statevec::parse_circuit;
use qsim::ucc::{build_ucc_circuit, parse_amplitudes, TrotterPlan, DEFAULT_AMPLITUDE_CUTOFF};
use qsim::{init_basis_state, Circuit, Mapping, PauliSum, QsimError, StateVector};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Parse = 4,
    SizeMismatch = 5,
    Runtime = 6,
    Panic = 7,
}

/// Opaque state vector.
pub struct QsimState(StateVector);

/// Opaque gate sequence.
pub struct QsimCircuit {
    circuit: Circuit,
    reference: u64,
}

/// Opaque Pauli-string sum.
pub struct QsimPauliSum(PauliSum);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &QsimError) -> QsimStatus {
    match e {
        QsimError::Capacity { .. } => QsimStatus::Capacity,
        QsimError::Parse { .. } => QsimStatus::Parse,
        QsimError::SizeMismatch { .. } => QsimStatus::SizeMismatch,
        QsimError::QubitIndex { .. }
        | QsimError::ModeIndex { .. }
        | QsimError::InvalidGate(..)
        | QsimError::InvalidScenario(..)
        | QsimError::Contract(..) => QsimStatus::InvalidArgument,
        _ => QsimStatus::Runtime,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (QsimStatus, String)>) -> QsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QsimStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside qsim".into());
            QsimStatus::Panic
        }
    }
}

fn lift<T>(r: qsim::Result<T>) -> Result<T, (QsimStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (QsimStatus, String) {
    (QsimStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn utf8<'a>(p: *const c_char, name: &str) -> Result<&'a str, (QsimStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (QsimStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, (QsimStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn get_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (QsimStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), (QsimStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; empty when nothing has failed.
#[no_mangle]
pub extern "C" fn qsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Allocates the basis state `|occupied>` on `num_qubits` qubits.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qsim_state_new(num_qubits: usize, occupied: u64, out: *mut *mut QsimState) -> QsimStatus {
    guard(|| {
        let s = lift(init_basis_state(num_qubits, occupied))?;
        put(out, Box::into_raw(Box::new(QsimState(s))), "out")
    })
}

/// # Safety
/// `state` must be null or a handle from [`qsim_state_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qsim_state_free(state: *mut QsimState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Qubit count, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qsim_state_num_qubits(state: *const QsimState) -> usize {
    state.as_ref().map_or(0, |s| s.0.num_qubits())
}

/// Reads amplitude `index`.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qsim_state_amplitude(
    state: *const QsimState,
    index: u64,
    re: *mut f64,
    im: *mut f64,
) -> QsimStatus {
    guard(|| {
        let s = get(state, "state")?;
        let a = *s.0.amplitudes().get(index as usize).ok_or((
            QsimStatus::InvalidArgument,
            format!("index {index} outside a {}-qubit state", s.0.num_qubits()),
        ))?;
        put(re, a.re, "re")?;
        put(im, a.im, "im")
    })
}

/// Squared norm.
///
/// # Safety
/// `state` must be a live handle; `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn qsim_state_norm_sqr(state: *const QsimState, out: *mut f64) -> QsimStatus {
    guard(|| put(out, get(state, "state")?.0.norm_sqr(), "out"))
}

/// Parses the circuit text format. `reference_out` receives the file's
/// reference state, or 0 when it declares none.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` and `reference_out` writable.
#[no_mangle]
pub unsafe extern "C" fn qsim_circuit_parse(
    text: *const c_char,
    out: *mut *mut QsimCircuit,
    reference_out: *mut u64,
) -> QsimStatus {
    guard(|| {
        let file = lift(parse_circuit(utf8(text, "text")?))?;
        let reference = file.reference.unwrap_or(0);
        put(reference_out, reference, "reference_out")?;
        put(out, Box::into_raw(Box::new(QsimCircuit { circuit: file.circuit, reference })), "out")
    })
}

/// Builds a UCC circuit from an amplitude file. `mapping` is 0 for
/// Jordan-Wigner and 1 for Bravyi-Kitaev.
///
/// # Safety
/// `amplitudes` must be a NUL-terminated string; `out` and `reference_out` writable.
#[no_mangle]
pub unsafe extern "C" fn qsim_ucc_circuit(
    amplitudes: *const c_char,
    mapping: u32,
    eta: usize,
    out: *mut *mut QsimCircuit,
    reference_out: *mut u64,
) -> QsimStatus {
    guard(|| {
        let mapping = match mapping {
            0 => Mapping::JordanWigner,
            1 => Mapping::BravyiKitaev,
            m => return Err((QsimStatus::InvalidArgument, format!("unknown mapping code {m}"))),
        };
        let amps = lift(parse_amplitudes(utf8(amplitudes, "amplitudes")?))?;
        let plan = lift(TrotterPlan::new(eta))?;
        let u = lift(build_ucc_circuit(&amps, mapping, &plan, DEFAULT_AMPLITUDE_CUTOFF))?;
        put(reference_out, u.reference, "reference_out")?;
        put(out, Box::into_raw(Box::new(QsimCircuit { circuit: u.circuit, reference: u.reference })), "out")
    })
}

/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qsim_circuit_free(circuit: *mut QsimCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Gate count, or 0 for a null handle.
///
/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qsim_circuit_gate_count(circuit: *const QsimCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.circuit.gate_count())
}

/// Qubit count, or 0 for a null handle.
///
/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qsim_circuit_num_qubits(circuit: *const QsimCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.circuit.num_qubits())
}

/// Applies every gate of `circuit` to `state` without noise.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn qsim_state_apply_circuit(state: *mut QsimState, circuit: *const QsimCircuit) -> QsimStatus {
    guard(|| {
        let c = get(circuit, "circuit")?;
        lift(get_mut(state, "state")?.0.apply_circuit(&c.circuit))
    })
}

/// Parses the Pauli-sum text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qsim_pauli_sum_parse(text: *const c_char, out: *mut *mut QsimPauliSum) -> QsimStatus {
    guard(|| {
        let (_, sum) = lift(parse_pauli_file(utf8(text, "text")?))?;
        put(out, Box::into_raw(Box::new(QsimPauliSum(sum))), "out")
    })
}

/// # Safety
/// `sum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qsim_pauli_sum_free(sum: *mut QsimPauliSum) {
    if !sum.is_null() {
        drop(Box::from_raw(sum));
    }
}

/// Real part of `<state| sum |state>`.
///
/// # Safety
/// Both handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qsim_state_expectation(
    state: *const QsimState,
    sum: *const QsimPauliSum,
    out: *mut f64,
) -> QsimStatus {
    guard(|| {
        let v = lift(get(state, "state")?.0.expectation_sum(&get(sum, "sum")?.0))?;
        put(out, v, "out")
    })
}

/// Trajectory mean and standard error of `observable` after `circuit` runs
/// from its reference state under noise with coherence parameters `m1`, `m2`
/// (infinity disables a channel).
///
/// # Safety
/// Handles must be live; `mean` and `std_error` writable.
#[no_mangle]
pub unsafe extern "C" fn qsim_run_trajectories(
    circuit: *const QsimCircuit,
    observable: *const QsimPauliSum,
    m1: f64,
    m2: f64,
    trajectories: usize,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> QsimStatus {
    guard(|| {
        let c = get(circuit, "circuit")?;
        let obs = get(observable, "observable")?;
        let model = lift(NoiseModel::new(m1, m2))?;
        let cfg = TrajectoryConfig { num_trajectories: trajectories, master_seed: seed, ..Default::default() };
        let r = lift(run_trajectories(&c.circuit, c.reference, &model, std::slice::from_ref(&obs.0), &cfg))?;
        put(mean, r.stats[0].mean, "mean")?;
        put(std_error, r.stats[0].std_error, "std_error")
    })
}
