//! C ABI for the ginnkan library: opaque model handles, integer status
//! codes, and a thread-local last-error message. See `include/ginnkan.h`
//! for the matching declarations.
//!
//! Feature matrices cross the boundary feature-major: `features[f * n_rows
//! + r]` is row `r` of feature `f`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;
use std::slice;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ginnkan::checkpoint::Checkpoint;
use ginnkan::model::{AnyModel, ModelKind};
use ginnkan::nn::{predict, train_supervised, TrainConfig};

/// Status codes returned by every fallible call.
pub const GK_OK: i32 = 0;
/// A required pointer argument was null.
pub const GK_ERR_NULL: i32 = 1;
/// Invalid argument (bad model kind, empty data, non-UTF-8 string, ...).
pub const GK_ERR_INVALID: i32 = 2;
/// The operation itself failed (training, extraction, I/O).
pub const GK_ERR_RUNTIME: i32 = 3;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(code: i32, msg: &str) -> i32 {
    set_error(msg);
    code
}

/// Opaque trained-model handle.
pub struct GkModel {
    model: AnyModel,
    config: TrainConfig,
}

/// Message for the most recent error on this thread; valid until the next
/// failing call from the same thread. Never null.
#[no_mangle]
pub extern "C" fn gk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn parse_kind(kind: *const c_char) -> Result<ModelKind, i32> {
    if kind.is_null() {
        return Err(fail(GK_ERR_NULL, "kind is null"));
    }
    let s = CStr::from_ptr(kind)
        .to_str()
        .map_err(|_| fail(GK_ERR_INVALID, "kind is not UTF-8"))?;
    s.parse()
        .map_err(|e: ginnkan::Error| fail(GK_ERR_INVALID, &e.to_string()))
}

unsafe fn feature_columns(
    features: *const f64,
    n_features: usize,
    n_rows: usize,
) -> Result<Vec<Vec<f64>>, i32> {
    if features.is_null() {
        return Err(fail(GK_ERR_NULL, "features is null"));
    }
    if n_features == 0 || n_rows == 0 {
        return Err(fail(GK_ERR_INVALID, "feature matrix is empty"));
    }
    let flat = slice::from_raw_parts(features, n_features * n_rows);
    Ok(flat.chunks(n_rows).map(|c| c.to_vec()).collect())
}

/// Trains a fresh model of `kind` ("fc", "ginn", "kan", "ginn-kan") on the
/// given data and writes the handle to `out`. `max_steps == 0` keeps the
/// library default (2000); `lr <= 0` keeps the default (0.01).
///
/// # Safety
/// `features` must point to `n_features * n_rows` doubles, `targets` to
/// `n_rows` doubles, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gk_train(
    kind: *const c_char,
    features: *const f64,
    n_features: usize,
    n_rows: usize,
    targets: *const f64,
    max_steps: usize,
    lr: f64,
    seed: u64,
    out: *mut *mut GkModel,
) -> i32 {
    if out.is_null() {
        return fail(GK_ERR_NULL, "out is null");
    }
    *out = ptr::null_mut();
    if targets.is_null() {
        return fail(GK_ERR_NULL, "targets is null");
    }
    let kind = match parse_kind(kind) {
        Ok(k) => k,
        Err(code) => return code,
    };
    let cols = match feature_columns(features, n_features, n_rows) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let targets = slice::from_raw_parts(targets, n_rows);
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        seed,
        max_steps: if max_steps == 0 { defaults.max_steps } else { max_steps },
        lr: if lr <= 0.0 { defaults.lr } else { lr },
        ..defaults
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = AnyModel::new(kind, &cols, &mut rng);
    if let Err(e) = train_supervised(&mut model, &cols, targets, &config) {
        return fail(GK_ERR_RUNTIME, &e.to_string());
    }
    *out = Box::into_raw(Box::new(GkModel { model, config }));
    GK_OK
}

/// Evaluates the model on `n_rows` points and writes `n_rows` predictions.
///
/// # Safety
/// `model` must be a live handle, `features` must point to `n_features *
/// n_rows` doubles, and `out` must have room for `n_rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn gk_predict(
    model: *const GkModel,
    features: *const f64,
    n_features: usize,
    n_rows: usize,
    out: *mut f64,
) -> i32 {
    if model.is_null() || out.is_null() {
        return fail(GK_ERR_NULL, "model or out is null");
    }
    let cols = match feature_columns(features, n_features, n_rows) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match predict(&(*model).model, &cols) {
        Ok(pred) => {
            ptr::copy_nonoverlapping(pred.as_ptr(), out, pred.len());
            GK_OK
        }
        Err(e) => fail(GK_ERR_RUNTIME, &e.to_string()),
    }
}

/// Writes the recovered symbolic equation as a NUL-terminated string.
/// `needed` (optional) receives the full length including the NUL; if the
/// buffer is too small the text is truncated and GK_OK is still returned,
/// so call again with a larger buffer when `*needed > buf_len`.
///
/// # Safety
/// `model` must be a live handle and `buf` must have room for `buf_len`
/// bytes (or be null with `buf_len == 0`).
#[no_mangle]
pub unsafe extern "C" fn gk_extract(
    model: *const GkModel,
    buf: *mut c_char,
    buf_len: usize,
    needed: *mut usize,
) -> i32 {
    if model.is_null() {
        return fail(GK_ERR_NULL, "model is null");
    }
    let text = match (*model).model.extract_equation() {
        Ok(expr) => expr.render(),
        Err(e) => return fail(GK_ERR_RUNTIME, &e.to_string()),
    };
    let bytes = text.as_bytes();
    if !needed.is_null() {
        *needed = bytes.len() + 1;
    }
    if !buf.is_null() && buf_len > 0 {
        let n = bytes.len().min(buf_len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
    }
    GK_OK
}

/// Saves the model (with its training configuration) as a JSON checkpoint.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gk_save(model: *const GkModel, path: *const c_char) -> i32 {
    if model.is_null() || path.is_null() {
        return fail(GK_ERR_NULL, "model or path is null");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => return fail(GK_ERR_INVALID, "path is not UTF-8"),
    };
    let handle = &*model;
    let ckpt = Checkpoint::new(handle.model.clone(), handle.config.clone());
    match ckpt.save(Path::new(path)) {
        Ok(()) => GK_OK,
        Err(e) => fail(GK_ERR_RUNTIME, &e.to_string()),
    }
}

/// Loads a JSON checkpoint into a fresh handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gk_load(path: *const c_char, out: *mut *mut GkModel) -> i32 {
    if out.is_null() {
        return fail(GK_ERR_NULL, "out is null");
    }
    *out = ptr::null_mut();
    if path.is_null() {
        return fail(GK_ERR_NULL, "path is null");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => return fail(GK_ERR_INVALID, "path is not UTF-8"),
    };
    match Checkpoint::load(Path::new(path)) {
        Ok(ckpt) => {
            *out = Box::into_raw(Box::new(GkModel {
                model: ckpt.model,
                config: ckpt.config,
            }));
            GK_OK
        }
        Err(e) => fail(GK_ERR_RUNTIME, &e.to_string()),
    }
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `model` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gk_free(model: *mut GkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    /// Feature-major x1*x2^2 sample.
    fn data() -> (Vec<f64>, Vec<f64>, usize) {
        let x1 = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 0.7, 1.3];
        let x2 = [2.0, 0.5, 1.0, 2.5, 3.0, 1.5, 0.9, 2.2];
        let flat: Vec<f64> = x1.iter().chain(x2.iter()).cloned().collect();
        let y: Vec<f64> = x1.iter().zip(x2).map(|(&a, b)| a * b * b).collect();
        (flat, y, x1.len())
    }

    unsafe fn train_ginn(steps: usize) -> *mut GkModel {
        let (flat, y, n) = data();
        let kind = CString::new("ginn").unwrap();
        let mut handle: *mut GkModel = ptr::null_mut();
        let rc = gk_train(
            kind.as_ptr(),
            flat.as_ptr(),
            2,
            n,
            y.as_ptr(),
            steps,
            0.0,
            0,
            &mut handle,
        );
        assert_eq!(rc, GK_OK);
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn train_predict_extract_save_load_round_trip() {
        unsafe {
            let handle = train_ginn(200);
            let (flat, _, n) = data();
            let mut pred = vec![0.0; n];
            assert_eq!(gk_predict(handle, flat.as_ptr(), 2, n, pred.as_mut_ptr()), GK_OK);
            assert!(pred.iter().all(|v| v.is_finite()));

            let mut buf = vec![0i8; 256];
            let mut needed = 0usize;
            assert_eq!(gk_extract(handle, buf.as_mut_ptr(), buf.len(), &mut needed), GK_OK);
            let eq = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
            assert!(needed > 1 && eq.contains("x1"), "equation: {eq}");

            let dir = tempfile::tempdir().unwrap();
            let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
            assert_eq!(gk_save(handle, path.as_ptr()), GK_OK);
            let mut loaded: *mut GkModel = ptr::null_mut();
            assert_eq!(gk_load(path.as_ptr(), &mut loaded), GK_OK);
            let mut pred2 = vec![0.0; n];
            assert_eq!(gk_predict(loaded, flat.as_ptr(), 2, n, pred2.as_mut_ptr()), GK_OK);
            assert_eq!(pred, pred2);
            gk_free(handle);
            gk_free(loaded);
        }
    }

    #[test]
    fn error_paths_set_codes_and_messages() {
        unsafe {
            let (flat, y, n) = data();
            let mut handle: *mut GkModel = ptr::null_mut();
            let bad = CString::new("transformer").unwrap();
            let rc = gk_train(
                bad.as_ptr(), flat.as_ptr(), 2, n, y.as_ptr(), 10, 0.0, 0, &mut handle,
            );
            assert_eq!(rc, GK_ERR_INVALID);
            assert!(handle.is_null());
            let msg = CStr::from_ptr(gk_last_error()).to_str().unwrap();
            assert!(msg.contains("transformer"), "message: {msg}");

            let kind = CString::new("ginn").unwrap();
            assert_eq!(
                gk_train(kind.as_ptr(), ptr::null(), 2, n, y.as_ptr(), 10, 0.0, 0, &mut handle),
                GK_ERR_NULL
            );
            assert_eq!(
                gk_train(kind.as_ptr(), flat.as_ptr(), 2, 0, y.as_ptr(), 10, 0.0, 0, &mut handle),
                GK_ERR_INVALID
            );
            let missing = CString::new("/nonexistent/m.json").unwrap();
            let mut loaded: *mut GkModel = ptr::null_mut();
            assert_eq!(gk_load(missing.as_ptr(), &mut loaded), GK_ERR_RUNTIME);
            gk_free(ptr::null_mut());
        }
    }

    #[test]
    fn extract_truncates_into_small_buffers() {
        unsafe {
            let handle = train_ginn(50);
            let mut needed = 0usize;
            assert_eq!(gk_extract(handle, ptr::null_mut(), 0, &mut needed), GK_OK);
            assert!(needed > 4);
            let mut buf = vec![0i8; 4];
            assert_eq!(gk_extract(handle, buf.as_mut_ptr(), buf.len(), ptr::null_mut()), GK_OK);
            assert_eq!(buf[3], 0);
            assert!(CStr::from_ptr(buf.as_ptr()).to_bytes().len() <= 3);
            gk_free(handle);
        }
    }
}
