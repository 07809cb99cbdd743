//! C ABI over `mmr-cluster`.
//!
//! Conventions:
//!
//! * Every fallible function returns an [`MmrStatus`]; results come back
//!   through out-pointers. On failure the out-pointers are left untouched.
//! * [`mmr_last_error_message`] and [`mmr_last_error_code`] describe the most
//!   recent failure on the calling thread.
//! * Datasets and models are opaque handles released with their `_free`
//!   function. Strings returned by the library are released with
//!   [`mmr_string_free`].
//! * Panics never cross the boundary; they surface as
//!   [`MmrStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mmr_cluster::affinity::{APConfig, Preference};
use mmr_cluster::dataset::{parse_long_csv, parse_wide_csv, Dataset};
use mmr_cluster::hier::Linkage;
use mmr_cluster::kmeans::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use mmr_cluster::model_store::{self, ClusterModel};
use mmr_cluster::pairing::{self, PairingConfig, PairingMode};
use mmr_cluster::pipeline::{self, MethodConfig, TrainConfig};
use mmr_cluster::preprocess::{preprocess, ImputeStrategy, ScalerKind};
use mmr_cluster::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or invalid input data.
    Ingestion = 3,
    Preprocess = 4,
    Clustering = 5,
    Pairing = 6,
    /// An argument or option is out of range.
    InvalidArgument = 7,
    /// Model file or I/O failure.
    Persistence = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmrFormat {
    Wide = 0,
    Long = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmrImpute {
    MeanColumn = 0,
    LinearInterpolate = 1,
    ForwardFill = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmrScale {
    Standard = 0,
    MinMax = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmrLinkage {
    Single = 0,
    Complete = 1,
    Average = 2,
    Ward = 3,
}

/// Preprocessing chain. Pass NULL wherever a `const MmrPrep *` is accepted
/// to get linear interpolation followed by standardization.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MmrPrep {
    pub impute: MmrImpute,
    pub scale: MmrScale,
}

/// Pair thresholds. NULL selects r >= 0.9 similar, r <= -0.5 opposite,
/// alpha 0.05, level distance <= 0.5 with the level check enabled.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MmrPairing {
    pub similar_r_min: f64,
    pub opposite_r_max: f64,
    pub alpha: f64,
    pub level_distance_max: f64,
    /// Non-zero: SIMILAR also requires the level distance check.
    pub require_level: i32,
}

/// Parsed dataset.
pub struct MmrDataset {
    inner: Dataset,
}

/// Fitted or loaded cluster model.
pub struct MmrModel {
    model: ClusterModel,
    /// Present only for models fitted in this process.
    training_labels: Option<Vec<usize>>,
}

struct LastError {
    code: i32,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_error(code: i32, message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code, message }));
}

fn status_of(err: &Error) -> MmrStatus {
    match err {
        Error::InvalidConfig(_) | Error::KZero | Error::KTooLarge { .. } | Error::KOutOfRange { .. } => {
            MmrStatus::InvalidArgument
        }
        _ => match err.code() / 100 {
            1 => MmrStatus::Ingestion,
            2 => MmrStatus::Preprocess,
            3 => MmrStatus::Clustering,
            4 => MmrStatus::Pairing,
            5 => MmrStatus::InvalidArgument,
            _ => MmrStatus::Persistence,
        },
    }
}

struct Failure(MmrStatus, i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.code(), e.to_string())
    }
}

fn fail(status: MmrStatus, message: &str) -> Failure {
    Failure(status, -(status as i32), message.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MmrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MmrStatus::Ok,
        Ok(Err(Failure(status, code, message))) => {
            set_error(code, message);
            status
        }
        Err(_) => {
            set_error(-(MmrStatus::Panic as i32), "internal panic".into());
            MmrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(MmrStatus::NullPointer, &format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(MmrStatus::InvalidUtf8, &format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(MmrStatus::NullPointer, &format!("{what} is NULL")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(fail(MmrStatus::NullPointer, &format!("{what} is NULL")));
    }
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(MmrStatus::InvalidArgument, "output contains an interior NUL byte"))
}

unsafe fn prep_arg(p: *const MmrPrep) -> (ImputeStrategy, ScalerKind) {
    match p.as_ref() {
        None => (ImputeStrategy::default(), ScalerKind::default()),
        Some(p) => (
            match p.impute {
                MmrImpute::MeanColumn => ImputeStrategy::MeanColumn,
                MmrImpute::LinearInterpolate => ImputeStrategy::LinearInterpolate,
                MmrImpute::ForwardFill => ImputeStrategy::ForwardFill,
            },
            match p.scale {
                MmrScale::Standard => ScalerKind::Standard,
                MmrScale::MinMax => ScalerKind::MinMax,
            },
        ),
    }
}

unsafe fn copy_labels(labels: &[usize], out: *mut usize, len: usize) -> Result<(), Failure> {
    out_arg(out, "labels")?;
    if len < labels.len() {
        return Err(Failure(
            MmrStatus::BufferTooSmall,
            -(MmrStatus::BufferTooSmall as i32),
            format!("buffer holds {len} labels, {} needed", labels.len()),
        ));
    }
    ptr::copy_nonoverlapping(labels.as_ptr(), out, labels.len());
    Ok(())
}

/// Code of the last failure on this thread: the library's numeric error
/// code (100-699), a negated [`MmrStatus`] for boundary errors, or 0.
#[no_mangle]
pub extern "C" fn mmr_last_error_code() -> i32 {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |e| e.code))
}

/// Message for the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mmr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mmr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mmr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses CSV text into a dataset.
///
/// # Safety
/// `csv` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_dataset_parse(
    csv: *const c_char,
    format: MmrFormat,
    out: *mut *mut MmrDataset,
) -> MmrStatus {
    guard(|| {
        let text = str_arg(csv, "csv")?;
        out_arg(out, "out")?;
        let inner = match format {
            MmrFormat::Wide => parse_wide_csv(text)?,
            MmrFormat::Long => parse_long_csv(text)?,
        };
        *out = Box::into_raw(Box::new(MmrDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle from [`mmr_dataset_parse`].
#[no_mangle]
pub unsafe extern "C" fn mmr_dataset_free(dataset: *mut MmrDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of countries, or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mmr_dataset_len(dataset: *const MmrDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

/// First and last year of the dataset.
///
/// # Safety
/// `dataset` must be a live handle; `start` and `end` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_dataset_years(dataset: *const MmrDataset, start: *mut i32, end: *mut i32) -> MmrStatus {
    guard(|| {
        let d = ref_arg(dataset, "dataset")?;
        out_arg(start, "start")?;
        out_arg(end, "end")?;
        *start = d.inner.year_start();
        *end = d.inner.year_end();
        Ok(())
    })
}

unsafe fn train_into(
    dataset: *const MmrDataset,
    prep: *const MmrPrep,
    method: MethodConfig,
    out: *mut *mut MmrModel,
) -> MmrStatus {
    guard(|| {
        let d = ref_arg(dataset, "dataset")?;
        out_arg(out, "out")?;
        let (impute, scale) = prep_arg(prep);
        let outcome = pipeline::train(&d.inner, &TrainConfig { impute, scale, method })?;
        *out = Box::into_raw(Box::new(MmrModel { model: outcome.model, training_labels: Some(outcome.labels) }));
        Ok(())
    })
}

/// K-Means with k-means++ seeding; the best of `restarts` runs with seeds
/// `seed, seed + 1, ...` is kept.
///
/// # Safety
/// `dataset` must be a live handle; `prep` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_cluster_kmeans(
    dataset: *const MmrDataset,
    prep: *const MmrPrep,
    k: usize,
    seed: u64,
    restarts: usize,
    out: *mut *mut MmrModel,
) -> MmrStatus {
    let method = MethodConfig::KMeans { k, seed, restarts, max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL };
    train_into(dataset, prep, method, out)
}

/// Agglomerative clustering cut into `k` groups.
///
/// # Safety
/// As for [`mmr_cluster_kmeans`].
#[no_mangle]
pub unsafe extern "C" fn mmr_cluster_hier(
    dataset: *const MmrDataset,
    prep: *const MmrPrep,
    k: usize,
    linkage: MmrLinkage,
    out: *mut *mut MmrModel,
) -> MmrStatus {
    let linkage = match linkage {
        MmrLinkage::Single => Linkage::Single,
        MmrLinkage::Complete => Linkage::Complete,
        MmrLinkage::Average => Linkage::Average,
        MmrLinkage::Ward => Linkage::Ward,
    };
    train_into(dataset, prep, MethodConfig::Hier { k, linkage }, out)
}

/// Affinity propagation. A NaN `preference` selects the median similarity.
///
/// # Safety
/// As for [`mmr_cluster_kmeans`].
#[no_mangle]
pub unsafe extern "C" fn mmr_cluster_ap(
    dataset: *const MmrDataset,
    prep: *const MmrPrep,
    damping: f64,
    preference: f64,
    out: *mut *mut MmrModel,
) -> MmrStatus {
    let preference = if preference.is_nan() { Preference::Median } else { Preference::Value(preference) };
    let config = APConfig { damping, preference, ..APConfig::default() };
    train_into(dataset, prep, MethodConfig::Ap(config), out)
}

/// # Safety
/// `model` must be NULL or a handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mmr_model_free(model: *mut MmrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of clusters, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mmr_model_k(model: *const MmrModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.k)
}

/// Copies the training labels into `labels[0..n)`, where n is the number
/// of training countries. Fails for models loaded from JSON.
///
/// # Safety
/// `model` must be a live handle; `labels` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mmr_model_training_labels(
    model: *const MmrModel,
    labels: *mut usize,
    len: usize,
) -> MmrStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let train = m
            .training_labels
            .as_deref()
            .ok_or_else(|| fail(MmrStatus::InvalidArgument, "model was loaded, not fitted"))?;
        copy_labels(train, labels, len)
    })
}

/// Serializes the model; free the result with [`mmr_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_model_to_json(model: *const MmrModel, out: *mut *mut c_char) -> MmrStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        out_arg(out, "out")?;
        *out = into_c_string(m.model.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_model_from_json(json: *const c_char, out: *mut *mut MmrModel) -> MmrStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        out_arg(out, "out")?;
        let model = ClusterModel::from_json(text)?;
        *out = Box::into_raw(Box::new(MmrModel { model, training_labels: None }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn mmr_model_save(model: *const MmrModel, path: *const c_char) -> MmrStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let path = str_arg(path, "path")?;
        model_store::save(&m.model, Path::new(path))?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 path; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_model_load(path: *const c_char, out: *mut *mut MmrModel) -> MmrStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        out_arg(out, "out")?;
        let model = model_store::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(MmrModel { model, training_labels: None }));
        Ok(())
    })
}

/// Labels every country of `dataset` with the nearest reference point,
/// after the model's stored imputation and scaling. Writes
/// `mmr_dataset_len(dataset)` labels.
///
/// # Safety
/// Handles must be live; `labels` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mmr_predict(
    model: *const MmrModel,
    dataset: *const MmrDataset,
    labels: *mut usize,
    len: usize,
) -> MmrStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let d = ref_arg(dataset, "dataset")?;
        let prediction = model_store::predict(&m.model, &d.inner)?;
        copy_labels(&prediction.labels, labels, len)
    })
}

/// SIMILAR and OPPOSITE pairs as two CSV documents
/// (`country_a,country_b,r,t_stat,p_value,level_distance,verdict`).
/// Free both with [`mmr_string_free`].
///
/// # Safety
/// `dataset` must be live; `prep` and `options` NULL or valid; both out
/// pointers writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_pairs_csv(
    dataset: *const MmrDataset,
    prep: *const MmrPrep,
    options: *const MmrPairing,
    similar: *mut *mut c_char,
    opposite: *mut *mut c_char,
) -> MmrStatus {
    guard(|| {
        let d = ref_arg(dataset, "dataset")?;
        out_arg(similar, "similar")?;
        out_arg(opposite, "opposite")?;
        let config = match options.as_ref() {
            None => PairingConfig::default(),
            Some(o) => PairingConfig {
                similar_r_min: o.similar_r_min,
                opposite_r_max: o.opposite_r_max,
                alpha: o.alpha,
                level_distance_max: o.level_distance_max,
                mode: if o.require_level != 0 { PairingMode::LevelAndTrend } else { PairingMode::Trend },
            },
        };
        config.validate()?;
        let (impute, scale) = prep_arg(prep);
        let raw = mmr_cluster::to_matrix(&d.inner)?;
        let prepared = preprocess(&raw, impute, scale)?;
        let report = pairing::find_pairs(&prepared.matrix, &config)?;
        let s = into_c_string(pairing::pairs_to_csv(&report.similar))?;
        let o = match into_c_string(pairing::pairs_to_csv(&report.opposite)) {
            Ok(o) => o,
            Err(e) => {
                drop(CString::from_raw(s));
                return Err(e);
            }
        };
        *similar = s;
        *opposite = o;
        Ok(())
    })
}

/// Two-sided t-test of a correlation `r` over `n` observations. For
/// `|r| = 1` the statistic is +/-infinity and the p-value 0.
///
/// # Safety
/// `t_stat` and `p_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mmr_correlation_test(r: f64, n: usize, t_stat: *mut f64, p_value: *mut f64) -> MmrStatus {
    guard(|| {
        out_arg(t_stat, "t_stat")?;
        out_arg(p_value, "p_value")?;
        let test = pairing::correlation_test(r, n)?;
        *t_stat = test.t_stat;
        *p_value = test.p_value;
        Ok(())
    })
}
