//! C ABI for riskdyn.
//!
//! Conventions:
//! - Every fallible function returns a [`RiskdynStatus`]; on failure the
//!   message is available from [`riskdyn_last_error`] on the same thread.
//! - Handles are opaque and must be released with their `_free` function.
//! - Matrices are row-major `double` buffers of `n_rows * n_cols` values.
//! - Strings returned through out-parameters are owned by the caller and
//!   must be released with [`riskdyn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use riskdyn::clustering::{assign, kmeans_fit, ClusterModel, KMeansConfig};
use riskdyn::data_model::{load_dataset, record_features, ColumnMap, Dataset};
use riskdyn::evaluation::{auc, silhouette};
use riskdyn::pipeline::{run_pipeline, PipelineConfig};
use riskdyn::{Error, ErrorKind, FeatureMatrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskdynStatus {
    Ok = 0,
    /// Invalid configuration or argument.
    Usage = 1,
    /// Bad or missing input data.
    Data = 2,
    /// Numerical failure such as zero variance or a rank-deficient matrix.
    Numerical = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Loaded country-year panel.
pub struct RiskdynDataset {
    inner: Dataset,
}

/// Fitted k-means model.
pub struct RiskdynKMeans {
    inner: ClusterModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> RiskdynStatus {
    match err.kind() {
        ErrorKind::Usage => RiskdynStatus::Usage,
        ErrorKind::Data => RiskdynStatus::Data,
        ErrorKind::Numerical => RiskdynStatus::Numerical,
    }
}

struct Failure(RiskdynStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RiskdynStatus::NullPointer, format!("`{what}` is null"))
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RiskdynStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RiskdynStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            RiskdynStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RiskdynStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
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

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn matrix_arg(
    data: *const f64,
    n_rows: usize,
    n_cols: usize,
) -> Result<FeatureMatrix, Failure> {
    let len = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| Failure(RiskdynStatus::Usage, "matrix size overflows".into()))?;
    let values = slice_arg(data, len, "data")?;
    let rows: Vec<Vec<f64>> = values.chunks(n_cols.max(1)).map(|r| r.to_vec()).collect();
    Ok(FeatureMatrix::from_rows(&rows)?)
}

fn check_len(got: usize, expected: usize, what: &str) -> Result<(), Failure> {
    if got < expected {
        return Err(Failure(
            RiskdynStatus::Usage,
            format!("`{what}` holds {got} values, {expected} needed"),
        ));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next riskdyn call on the same thread.
#[no_mangle]
pub extern "C" fn riskdyn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn riskdyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a CSV with the default column names.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_dataset_load(
    path: *const c_char,
    out: *mut *mut RiskdynDataset,
) -> RiskdynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let loaded = load_dataset(Path::new(path), &ColumnMap::default())?;
        *out = Box::into_raw(Box::new(RiskdynDataset {
            inner: loaded.dataset,
        }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or a handle from [`riskdyn_dataset_load`].
#[no_mangle]
pub unsafe extern "C" fn riskdyn_dataset_free(ds: *mut RiskdynDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of country-year rows; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_dataset_rows(ds: *const RiskdynDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

/// Number of distinct countries; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_dataset_countries(ds: *const RiskdynDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.countries().len())
}

/// Copy the six indicators of every row (sorted by country, then year) into
/// `out`, which must hold `rows * 6` doubles.
///
/// # Safety
/// `ds` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_dataset_features(
    ds: *const RiskdynDataset,
    out: *mut f64,
    len: usize,
) -> RiskdynStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let need = ds.inner.len() * 6;
        check_len(len, need, "out")?;
        let out = slice_out(out, need, "out")?;
        for (chunk, r) in out.chunks_mut(6).zip(ds.inner.records()) {
            chunk.copy_from_slice(&record_features(r));
        }
        Ok(())
    })
}

/// Fit k-means with `restarts` k-means++ restarts.
///
/// # Safety
/// `data` must point to `n_rows * n_cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_kmeans_fit(
    data: *const f64,
    n_rows: usize,
    n_cols: usize,
    k: usize,
    restarts: usize,
    seed: u64,
    out: *mut *mut RiskdynKMeans,
) -> RiskdynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = matrix_arg(data, n_rows, n_cols)?;
        let config = KMeansConfig {
            k,
            n_restarts: restarts,
            seed,
            ..Default::default()
        };
        let model = kmeans_fit(&m, &config)?;
        *out = Box::into_raw(Box::new(RiskdynKMeans { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`riskdyn_kmeans_fit`].
#[no_mangle]
pub unsafe extern "C" fn riskdyn_kmeans_free(model: *mut RiskdynKMeans) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of clusters; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_kmeans_k(model: *const RiskdynKMeans) -> usize {
    model.as_ref().map_or(0, |m| m.inner.k())
}

/// Within-cluster sum of squares; NaN for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_kmeans_inertia(model: *const RiskdynKMeans) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.inner.inertia)
}

/// Copy the training assignments into `out` (`len` >= training rows).
///
/// # Safety
/// `model` must be a live handle; `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_kmeans_assignments(
    model: *const RiskdynKMeans,
    out: *mut usize,
    len: usize,
) -> RiskdynStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let a = &m.inner.assignments;
        check_len(len, a.len(), "out")?;
        slice_out(out, a.len(), "out")?.copy_from_slice(a);
        Ok(())
    })
}

/// Copy the centroids row-major into `out` (`len` >= k * n_cols).
///
/// # Safety
/// `model` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_kmeans_centroids(
    model: *const RiskdynKMeans,
    out: *mut f64,
    len: usize,
) -> RiskdynStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let flat: Vec<f64> = m.inner.centroids.concat();
        check_len(len, flat.len(), "out")?;
        slice_out(out, flat.len(), "out")?.copy_from_slice(&flat);
        Ok(())
    })
}

/// Nearest-centroid labels for new rows.
///
/// # Safety
/// `data` must point to `n_rows * n_cols` doubles and `out` to `n_rows`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_kmeans_predict(
    model: *const RiskdynKMeans,
    data: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut usize,
) -> RiskdynStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let x = matrix_arg(data, n_rows, n_cols)?;
        let labels = assign(&m.inner, &x)?;
        slice_out(out, n_rows, "out")?.copy_from_slice(&labels);
        Ok(())
    })
}

/// Mean silhouette of a labelling.
///
/// # Safety
/// `data` must point to `n_rows * n_cols` doubles, `labels` to `n_rows`
/// values and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_silhouette(
    data: *const f64,
    n_rows: usize,
    n_cols: usize,
    labels: *const usize,
    out: *mut f64,
) -> RiskdynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = matrix_arg(data, n_rows, n_cols)?;
        let labels = slice_arg(labels, n_rows, "labels")?;
        *out = silhouette(&x, labels)?;
        Ok(())
    })
}

/// ROC AUC of `scores` against binary `labels`, ties counted as one half.
///
/// # Safety
/// `scores` and `labels` must point to `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_auc(
    scores: *const f64,
    labels: *const usize,
    n: usize,
    out: *mut f64,
) -> RiskdynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = slice_arg(scores, n, "scores")?;
        let l = slice_arg(labels, n, "labels")?;
        *out = auc(s, l)?;
        Ok(())
    })
}

/// Run the full pipeline from a TOML config string. On success, if
/// `manifest_json` is not NULL it receives the run manifest as JSON.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `manifest_json` must be
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn riskdyn_run_pipeline(
    config_toml: *const c_char,
    manifest_json: *mut *mut c_char,
) -> RiskdynStatus {
    guard(|| {
        if !manifest_json.is_null() {
            *manifest_json = ptr::null_mut();
        }
        let cfg = PipelineConfig::from_toml_str(str_arg(config_toml, "config_toml")?)?;
        let manifest = run_pipeline(&cfg)?;
        if !manifest_json.is_null() {
            let json = serde_json::to_string(&manifest).map_err(Error::from)?;
            *manifest_json = CString::new(json)
                .map_err(|_| Failure(RiskdynStatus::Internal, "manifest holds NUL".into()))?
                .into_raw();
        }
        Ok(())
    })
}
