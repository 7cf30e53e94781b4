//! C ABI for the `pauli-shield` simulator.
//!
//! Every function returns a [`PsStatus`]; results come back through out
//! pointers. On failure the message is available from [`ps_last_error`] on the
//! same thread. Handles are opaque and must be released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use pauli_shield::experiments::{parse_config, run_sweep, SweepResult, SweepSpec};
use pauli_shield::fidelity::{fidelity_fast, fidelity_oracle, OverlapMatrix};
use pauli_shield::potentials::{Shape, TaskKind};
use pauli_shield::scenario::Scenario;
use pauli_shield::thermal;
use pauli_shield::{spectral, Error};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Numerical = 4,
    GridTooSmall = 5,
    Io = 6,
    Panic = 7,
}

impl From<&Error> for PsStatus {
    fn from(e: &Error) -> Self {
        match e.root() {
            Error::Config(_) => PsStatus::Config,
            Error::GridTooSmall { .. } => PsStatus::GridTooSmall,
            Error::Io(_) => PsStatus::Io,
            Error::InvalidInput(_) | Error::GridMismatch | Error::OracleTooLarge { .. } => {
                PsStatus::InvalidInput
            }
            _ => PsStatus::Numerical,
        }
    }
}

/// Control task selector for [`ps_scenario_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsTask {
    Expansion = 0,
    Transport = 1,
    Splitting = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsShape {
    Linear = 0,
    Sinusoidal = 1,
}

/// A parsed sweep configuration.
pub struct PsSweep {
    spec: SweepSpec,
}

/// Rows produced by [`ps_sweep_run`].
pub struct PsSweepResult {
    result: SweepResult,
}

/// One task on its default lattice; eigenbases are cached between calls.
pub struct PsScenario {
    scenario: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(e: Error) -> PsStatus {
    let status = PsStatus::from(&e);
    set_error(e.to_string());
    status
}

fn guard(body: impl FnOnce() -> Result<(), PsStatus>) -> PsStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            PsStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), PsStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is NULL"));
        Err(PsStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by CString::into_raw in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

unsafe fn overlap_from_raw(
    re: *const f64,
    im: *const f64,
    n: usize,
    n_p: usize,
) -> Result<OverlapMatrix, PsStatus> {
    non_null(re, "re")?;
    non_null(im, "im")?;
    let len = n.checked_mul(n_p).ok_or(PsStatus::InvalidInput)?;
    // SAFETY: caller provides n * n_p readable doubles behind each pointer.
    let (re, im) = unsafe {
        (
            std::slice::from_raw_parts(re, len),
            std::slice::from_raw_parts(im, len),
        )
    };
    let entries = re
        .iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    OverlapMatrix::new(n, n_p, entries).map_err(fail)
}

/// Fidelity of a row-major `n x n_p` overlap matrix via the Gram determinant.
///
/// # Safety
/// `re` and `im` must each point to `n * n_p` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_fidelity_fast(
    re: *const f64,
    im: *const f64,
    n: usize,
    n_p: usize,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        non_null(out, "out")?;
        let a = unsafe { overlap_from_raw(re, im, n, n_p) }?;
        let f = fidelity_fast(&a).map_err(fail)?;
        // SAFETY: checked non-null above.
        unsafe { *out = f.value };
        Ok(())
    })
}

/// Fidelity by explicit enumeration of subsets and permutations (small sizes only).
///
/// # Safety
/// As for [`ps_fidelity_fast`].
#[no_mangle]
pub unsafe extern "C" fn ps_fidelity_oracle(
    re: *const f64,
    im: *const f64,
    n: usize,
    n_p: usize,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        non_null(out, "out")?;
        let a = unsafe { overlap_from_raw(re, im, n, n_p) }?;
        let f = fidelity_oracle(&a).map_err(fail)?;
        unsafe { *out = f.value };
        Ok(())
    })
}

/// Writes `E_{N+1} - E_N` for `N = 1..=n_max` of the anharmonic trap into `out`.
///
/// # Safety
/// `out` must point to `n_max` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_fermi_gap(lambda: f64, n_max: usize, out: *mut f64) -> PsStatus {
    guard(|| {
        non_null(out, "out")?;
        let profile = spectral::fermi_gap_profile(lambda, n_max).map_err(fail)?;
        // SAFETY: caller provides n_max slots.
        let out = unsafe { std::slice::from_raw_parts_mut(out, n_max) };
        for (slot, (_, gap)) in out.iter_mut().zip(profile) {
            *slot = gap;
        }
        Ok(())
    })
}

/// Parses a sweep configuration (`key = value` lines).
///
/// # Safety
/// `text` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_sweep_from_config(
    text: *const c_char,
    out: *mut *mut PsSweep,
) -> PsStatus {
    guard(|| {
        non_null(text, "text")?;
        non_null(out, "out")?;
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| fail(Error::Config("config is not UTF-8".into())))?;
        let spec = parse_config(text).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(PsSweep { spec })) };
        Ok(())
    })
}

/// Runs every grid point of a sweep.
///
/// # Safety
/// `sweep` must come from [`ps_sweep_from_config`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_sweep_run(
    sweep: *const PsSweep,
    out: *mut *mut PsSweepResult,
) -> PsStatus {
    guard(|| {
        non_null(sweep, "sweep")?;
        non_null(out, "out")?;
        let spec = unsafe { &(*sweep).spec };
        let result = run_sweep(spec).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(PsSweepResult { result })) };
        Ok(())
    })
}

/// # Safety
/// `sweep` must be NULL or a live handle from [`ps_sweep_from_config`].
#[no_mangle]
pub unsafe extern "C" fn ps_sweep_free(sweep: *mut PsSweep) {
    if !sweep.is_null() {
        drop(unsafe { Box::from_raw(sweep) });
    }
}

/// Number of rows in a sweep result.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_sweep_result_len(
    result: *const PsSweepResult,
    out: *mut usize,
) -> PsStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(out, "out")?;
        unsafe { *out = (*result).result.len() };
        Ok(())
    })
}

/// Fidelity of row `index` (gap profiles report `delta_E` instead).
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_sweep_result_value(
    result: *const PsSweepResult,
    index: usize,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(out, "out")?;
        let result = unsafe { &(*result).result };
        let value = match &result.rows {
            pauli_shield::experiments::SweepRows::Fidelity(r) => r.get(index).map(|r| r.fidelity),
            pauli_shield::experiments::SweepRows::Gap(r) => r.get(index).map(|r| r.delta_e),
        };
        let value = value.ok_or_else(|| {
            fail(Error::InvalidInput(format!(
                "row {index} of {}",
                result.len()
            )))
        })?;
        unsafe { *out = value };
        Ok(())
    })
}

/// CSV rendering of a sweep result; release with [`ps_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_sweep_result_csv(
    result: *const PsSweepResult,
    out: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(out, "out")?;
        let csv = unsafe { &(*result).result }.to_csv().map_err(fail)?;
        let c = CString::new(csv).map_err(|_| fail(Error::InvalidInput("NUL in CSV".into())))?;
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a live handle from [`ps_sweep_run`].
#[no_mangle]
pub unsafe extern "C" fn ps_sweep_result_free(result: *mut PsSweepResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// A task with its default parameters and lattice.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_new(
    task: PsTask,
    shape: PsShape,
    out: *mut *mut PsScenario,
) -> PsStatus {
    guard(|| {
        non_null(out, "out")?;
        let kind = match task {
            PsTask::Expansion => TaskKind::Expansion,
            PsTask::Transport => TaskKind::Transport,
            PsTask::Splitting => TaskKind::Splitting,
        };
        let shape = match shape {
            PsShape::Linear => Shape::Linear,
            PsShape::Sinusoidal => Shape::Sinusoidal,
        };
        let scenario = Scenario::with_defaults(kind.default_task(), shape);
        unsafe { *out = Box::into_raw(Box::new(PsScenario { scenario })) };
        Ok(())
    })
}

/// Fidelity after a process of length `total_time` with `n_p` protected and
/// `n_b` buffer particles at temperature `tau`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_fidelity(
    scenario: *mut PsScenario,
    total_time: f64,
    n_p: usize,
    n_b: usize,
    tau: f64,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        non_null(scenario, "scenario")?;
        non_null(out, "out")?;
        let s = unsafe { &mut (*scenario).scenario };
        let n = n_p + n_b;
        if n_p == 0 {
            return Err(fail(Error::InvalidInput("N_p must be at least 1".into())));
        }
        let value = if tau > 0.0 {
            let ensemble = thermal::ensembles_for(s, &[(n, tau)], thermal::DEFAULT_TAIL_BOUND)
                .map_err(fail)?
                .remove(0);
            let evolution = s
                .evolve(total_time, ensemble.levels_needed().max(n), n_p)
                .map_err(fail)?;
            thermal::average_fidelity(&evolution, &ensemble, n_p)
                .map_err(fail)?
                .result
                .value
        } else {
            s.evolve(total_time, n, n_p)
                .and_then(|e| e.fidelity(n_p, n_b))
                .map_err(fail)?
                .value
        };
        unsafe { *out = value };
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a live handle from [`ps_scenario_new`].
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_free(scenario: *mut PsScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}
