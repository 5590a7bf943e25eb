//! C ABI over the pimo library.
//!
//! Conventions:
//! - Objects cross the boundary as opaque handles, created by `*_load` /
//!   `*_fit` / `*_from_json` functions and released by the matching `*_free`.
//! - Every fallible function returns a status code (`PIMO_OK` = 0); outputs
//!   go through out-pointers that are written only on success.
//! - On failure, `pimo_last_error_message` returns a thread-local,
//!   NUL-terminated description valid until the next failing call on the
//!   same thread.
//! - Strings returned through out-pointers are owned by the caller and must
//!   be released with `pimo_string_free`.
//! - Panics never unwind across the boundary; they are caught and reported
//!   as `PIMO_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pimo::ensemble::{load_ensemble, save_ensemble, MatrixEnsemble};
use pimo::gauss::{gaussianity_report, sample_ensemble, PatternMoments};
use pimo::contract::evaluate_all;
use pimo::graph::{canonical_set, ObservableSet};
use pimo::report::to_json_string;
use pimo::{Error, Result};

/// Success.
pub const PIMO_OK: i32 = 0;
/// Invalid argument (null pointer, bad flag value, dimension mismatch).
pub const PIMO_INVALID_ARGUMENT: i32 = 2;
/// File or format error while reading or writing data.
pub const PIMO_INGEST_ERROR: i32 = 3;
/// Numerical failure (e.g. an indefinite fitted covariance).
pub const PIMO_NUMERICAL_ERROR: i32 = 4;
/// Input data too degenerate for the requested operation.
pub const PIMO_DEGENERATE_DATA: i32 = 5;
/// A panic was caught at the language boundary.
pub const PIMO_PANIC: i32 = 6;

/// A word-indexed ensemble of square matrices (opaque).
pub struct PimoEnsemble(MatrixEnsemble);

/// An ordered set of matrix observables (opaque).
pub struct PimoSet(ObservableSet);

/// A fitted Gaussian entry model (opaque).
pub struct PimoModel(PatternMoments);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(error: &Error) -> i32 {
    error.exit_code()
}

/// Runs `body`, mapping library errors and panics onto status codes.
fn guarded<F: FnOnce() -> Result<()>>(body: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PIMO_OK,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            PIMO_PANIC
        }
    }
}

fn invalid(message: &str) -> Error {
    Error::InvalidInput(message.into())
}

/// Converts a required C string argument.
unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str> {
    if ptr.is_null() {
        return Err(invalid(&format!("{name} must not be null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(&format!("{name} is not valid UTF-8")))
}

unsafe fn required_ref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T> {
    ptr.as_ref()
        .ok_or_else(|| invalid(&format!("{name} must not be null")))
}

fn required_out<T>(ptr: *mut T, name: &str) -> Result<*mut T> {
    if ptr.is_null() {
        Err(invalid(&format!("{name} must not be null")))
    } else {
        Ok(ptr)
    }
}

/// Allocates a C string owned by the caller.
fn into_c_string(text: String) -> Result<*mut c_char> {
    CString::new(text)
        .map(CString::into_raw)
        .map_err(|_| Error::Numerical("string contains an interior NUL byte".into()))
}

/// Returns the error message of the last failing call on this thread, or an
/// empty string if none failed yet. The pointer stays valid until the next
/// failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn pimo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned through one of this library's
/// string out-parameters (or null, which is a no-op). Free it at most once.
#[no_mangle]
pub unsafe extern "C" fn pimo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a matrix ensemble from a directory (manifest.json + per-word CSV).
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be a valid pointer.
/// On success `*out` owns the ensemble; release it with
/// `pimo_ensemble_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_ensemble_load(
    dir: *const c_char,
    out: *mut *mut PimoEnsemble,
) -> i32 {
    guarded(|| {
        let out = required_out(out, "out")?;
        let dir = required_str(dir, "dir")?;
        let ens = load_ensemble(Path::new(dir))?;
        out.write(Box::into_raw(Box::new(PimoEnsemble(ens))));
        Ok(())
    })
}

/// Writes an ensemble to a directory in the manifest + CSV layout.
///
/// # Safety
/// `ens` must be a live handle from this library; `dir` a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn pimo_ensemble_save(
    ens: *const PimoEnsemble,
    dir: *const c_char,
) -> i32 {
    guarded(|| {
        let ens = required_ref(ens, "ens")?;
        let dir = required_str(dir, "dir")?;
        save_ensemble(&ens.0, Path::new(dir))
    })
}

/// Releases an ensemble handle.
///
/// # Safety
/// `ens` must be a handle from this library (or null, a no-op); release it
/// at most once.
#[no_mangle]
pub unsafe extern "C" fn pimo_ensemble_free(ens: *mut PimoEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Matrix dimension of the ensemble; 0 when `ens` is null.
///
/// # Safety
/// `ens` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn pimo_ensemble_dim(ens: *const PimoEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.dim())
}

/// Number of words in the ensemble; 0 when `ens` is null.
///
/// # Safety
/// `ens` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn pimo_ensemble_len(ens: *const PimoEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.len())
}

/// Builds one of the canonical observable sets ("13", "10", "15", "23",
/// "28").
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer. On
/// success `*out` owns the set; release it with `pimo_set_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_set_named(name: *const c_char, out: *mut *mut PimoSet) -> i32 {
    guarded(|| {
        let out = required_out(out, "out")?;
        let name = required_str(name, "name")?;
        let set = canonical_set(name)?;
        out.write(Box::into_raw(Box::new(PimoSet(set))));
        Ok(())
    })
}

/// Builds a custom observable set from a JSON array of graphs (the same
/// format accepted by the CLI's `--set FILE`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer. On
/// success `*out` owns the set; release it with `pimo_set_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_set_from_json(
    json: *const c_char,
    out: *mut *mut PimoSet,
) -> i32 {
    guarded(|| {
        let out = required_out(out, "out")?;
        let json = required_str(json, "json")?;
        let set = ObservableSet::from_json(json)?;
        out.write(Box::into_raw(Box::new(PimoSet(set))));
        Ok(())
    })
}

/// Releases a set handle.
///
/// # Safety
/// `set` must be a handle from this library (or null, a no-op); release it
/// at most once.
#[no_mangle]
pub unsafe extern "C" fn pimo_set_free(set: *mut PimoSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of observables in the set; 0 when `set` is null.
///
/// # Safety
/// `set` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn pimo_set_len(set: *const PimoSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Evaluates every observable of `set` on one `dim` x `dim` matrix given in
/// row-major order. Writes `pimo_set_len(set)` values into `out_values`.
///
/// # Safety
/// `set` must be a live handle; `matrix` must point to `dim * dim` doubles;
/// `out_values` must have room for `pimo_set_len(set)` doubles.
#[no_mangle]
pub unsafe extern "C" fn pimo_set_evaluate(
    set: *const PimoSet,
    matrix: *const f64,
    dim: usize,
    out_values: *mut f64,
) -> i32 {
    guarded(|| {
        let set = required_ref(set, "set")?;
        if matrix.is_null() {
            return Err(invalid("matrix must not be null"));
        }
        let out_values = required_out(out_values, "out_values")?;
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let data = std::slice::from_raw_parts(matrix, dim * dim);
        let m = nalgebra_matrix(dim, data);
        let values = evaluate_all(&set.0, &m)?;
        std::ptr::copy_nonoverlapping(values.as_ptr(), out_values, values.len());
        Ok(())
    })
}

fn nalgebra_matrix(dim: usize, data: &[f64]) -> pimo::nalgebra::DMatrix<f64> {
    pimo::nalgebra::DMatrix::from_row_slice(dim, dim, data)
}

/// Fits the Gaussian entry model on an ensemble.
///
/// # Safety
/// `ens` must be a live handle; `out` a valid pointer. On success `*out`
/// owns the model; release it with `pimo_model_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_model_fit(
    ens: *const PimoEnsemble,
    out: *mut *mut PimoModel,
) -> i32 {
    guarded(|| {
        let out = required_out(out, "out")?;
        let ens = required_ref(ens, "ens")?;
        let pm = PatternMoments::fit(&ens.0)?;
        out.write(Box::into_raw(Box::new(PimoModel(pm))));
        Ok(())
    })
}

/// Releases a model handle.
///
/// # Safety
/// `model` must be a handle from this library (or null, a no-op); release
/// it at most once.
#[no_mangle]
pub unsafe extern "C" fn pimo_model_free(model: *mut PimoModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Matrix dimension the model was fitted at; 0 when `model` is null.
///
/// # Safety
/// `model` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn pimo_model_dim(model: *const PimoModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// Expected value under the model of observable `index` of `set` (0-based).
///
/// # Safety
/// `model` and `set` must be live handles; `out_value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pimo_model_moment(
    model: *const PimoModel,
    set: *const PimoSet,
    index: usize,
    out_value: *mut f64,
) -> i32 {
    guarded(|| {
        let model = required_ref(model, "model")?;
        let set = required_ref(set, "set")?;
        let out_value = required_out(out_value, "out_value")?;
        let obs = set.0.observables.get(index).ok_or_else(|| {
            invalid(&format!(
                "index {index} out of range for a set of {}",
                set.0.len()
            ))
        })?;
        out_value.write(model.0.theoretical_moment(obs)?);
        Ok(())
    })
}

/// Serializes a model to JSON.
///
/// # Safety
/// `model` must be a live handle; `out_json` a valid pointer. On success
/// `*out_json` is a caller-owned string; release it with
/// `pimo_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_model_to_json(
    model: *const PimoModel,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        let model = required_ref(model, "model")?;
        let out_json = required_out(out_json, "out_json")?;
        out_json.write(into_c_string(model.0.to_json())?);
        Ok(())
    })
}

/// Restores a model from its JSON serialization.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer. On
/// success `*out` owns the model; release it with `pimo_model_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_model_from_json(
    json: *const c_char,
    out: *mut *mut PimoModel,
) -> i32 {
    guarded(|| {
        let out = required_out(out, "out")?;
        let json = required_str(json, "json")?;
        let pm = PatternMoments::from_json(json)?;
        out.write(Box::into_raw(Box::new(PimoModel(pm))));
        Ok(())
    })
}

/// Draws `count` matrices from the model into a new ensemble
/// (reproducible for a fixed `seed`).
///
/// # Safety
/// `model` must be a live handle; `out` a valid pointer. On success `*out`
/// owns the ensemble; release it with `pimo_ensemble_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_model_sample(
    model: *const PimoModel,
    count: usize,
    seed: u64,
    out: *mut *mut PimoEnsemble,
) -> i32 {
    guarded(|| {
        let model = required_ref(model, "model")?;
        let out = required_out(out, "out")?;
        let ens = sample_ensemble(&model.0, model.0.dim(), count, seed)?;
        out.write(Box::into_raw(Box::new(PimoEnsemble(ens))));
        Ok(())
    })
}

/// Fits the model on `ens` and compares observable means of `set` against
/// it; the full report is returned as a JSON string.
///
/// # Safety
/// `ens` and `set` must be live handles; `out_json` a valid pointer. On
/// success `*out_json` is a caller-owned string; release it with
/// `pimo_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pimo_gaussianity_json(
    ens: *const PimoEnsemble,
    set: *const PimoSet,
    out_json: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        let ens = required_ref(ens, "ens")?;
        let set = required_ref(set, "set")?;
        let out_json = required_out(out_json, "out_json")?;
        let report = gaussianity_report(&set.0, &ens.0)?;
        out_json.write(into_c_string(to_json_string(&report)?)?);
        Ok(())
    })
}

/// Test hook: panics behind the boundary guard. Excluded from the header.
#[doc(hidden)]
#[no_mangle]
pub extern "C" fn pimo__debug_panic() -> i32 {
    guarded(|| {
        panic!("deliberate test panic");
    })
}
