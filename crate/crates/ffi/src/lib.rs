//! C ABI over the detector. Models and outcome series are opaque handles
//! owned by the caller and released with the matching `*_free`. Every
//! fallible call returns an [`SdStatus`]; on failure a message is available
//! from [`sd_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use sd_sentinel::detector::{self, BinaryOutcomeSeries, ModelParams, Variant};
use sd_sentinel::pipeline;
use sd_sentinel::preprocess::PreprocessSpec;
use sd_sentinel::score;
use sd_sentinel::spectro::SpectroSpec;
use sd_sentinel::windowing::{WindowSample, IMAGE_LEN, WINDOW_MIN};
use sd_sentinel::{EegTrace, Error, SdLabelSet};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    ShapeMismatch = 5,
    Degenerate = 6,
    TooShort = 7,
    Checkpoint = 8,
    Config = 9,
    Panic = 10,
}

/// Trained or freshly built network.
pub struct SdModel(ModelParams);

/// Per-minute probabilities and decisions for one trace.
pub struct SdOutcomes(BinaryOutcomeSeries);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SdStatus {
    match e {
        Error::Io { .. } => SdStatus::Io,
        Error::Parse { .. } => SdStatus::Parse,
        Error::InvalidArgument(_) => SdStatus::InvalidArgument,
        Error::ShapeMismatch(_) => SdStatus::ShapeMismatch,
        Error::Degenerate(_) => SdStatus::Degenerate,
        Error::TooShort { .. } => SdStatus::TooShort,
        Error::Config(_) => SdStatus::Config,
        Error::Checkpoint { .. } => SdStatus::Checkpoint,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SdStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SdStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn model_ref<'a>(m: *const SdModel) -> Result<&'a ModelParams, Fail> {
    unsafe { m.as_ref() }.map(|m| &m.0).ok_or(Fail::Null("model"))
}

fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the declared architecture; `variant` is 0 dual, 1 image-only,
/// 2 vector-only.
#[no_mangle]
pub extern "C" fn sd_model_build(variant: u32, seed: u64, out: *mut *mut SdModel) -> SdStatus {
    guard(|| {
        let v = match variant {
            0 => Variant::Dual,
            1 => Variant::ImageOnly,
            2 => Variant::VectorOnly,
            _ => return Err(Error::InvalidArgument(format!("unknown variant {variant}")).into()),
        };
        put(out, SdModel(detector::build_model(v, seed)))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_model_load(path: *const c_char, out: *mut *mut SdModel) -> SdStatus {
    guard(|| {
        let p = unsafe { path_arg(path) }?;
        put(out, SdModel(detector::load_checkpoint(&p)?))
    })
}

/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sd_model_save(model: *const SdModel, path: *const c_char) -> SdStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let p = unsafe { path_arg(path) }?;
        detector::save_checkpoint(m, &p)?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn sd_model_free(model: *mut SdModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of scalar parameters; 0 for a null handle.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sd_model_param_count(model: *const SdModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.param_count())
}

/// Probability for one window: a 30×30 image (`[freq][time]`, row-major)
/// and a 30-value power vector, both already normalized.
///
/// # Safety
/// Pointers must be valid for their lengths; `out_prob` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sd_model_predict(
    model: *const SdModel,
    image: *const f32,
    image_len: usize,
    vector: *const f32,
    vector_len: usize,
    out_prob: *mut f64,
) -> SdStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let image = unsafe { slice(image, image_len, "image") }?;
        let vector = unsafe { slice(vector, vector_len, "vector") }?;
        if image.len() != IMAGE_LEN || vector.len() != WINDOW_MIN {
            return Err(Error::ShapeMismatch(format!(
                "window needs {IMAGE_LEN} image and {WINDOW_MIN} vector values, got {} and {}",
                image.len(),
                vector.len()
            ))
            .into());
        }
        if out_prob.is_null() {
            return Err(Fail::Null("out_prob"));
        }
        let sample = WindowSample { image: image.to_vec(), vector: vector.to_vec(), center_min: 0, label: 0 };
        unsafe { *out_prob = detector::predict_sample(m, &sample)? };
        Ok(())
    })
}

/// Full detection on raw samples: conditioning, spectral features, window
/// crops and per-minute inference at `threshold`.
///
/// # Safety
/// `samples` must be valid for `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sd_detect(
    model: *const SdModel,
    samples: *const f64,
    n: usize,
    sample_rate_hz: f64,
    threshold: f64,
    out: *mut *mut SdOutcomes,
) -> SdStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let x = unsafe { slice(samples, n, "samples") }?;
        let trace = EegTrace::new(x.to_vec(), sample_rate_hz, 0.0, "ffi")?;
        if trace.duration_min() < WINDOW_MIN as f64 {
            return Err(Error::TooShort { required_min: WINDOW_MIN as f64, actual_min: trace.duration_min() }.into());
        }
        let windows = pipeline::extract_windows(
            &trace,
            &SdLabelSet::empty(),
            &PreprocessSpec::default(),
            &SpectroSpec::default(),
        )?;
        put(out, SdOutcomes(detector::infer(m, &windows, threshold)?))
    })
}

/// # Safety
/// `outcomes` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sd_outcomes_len(outcomes: *const SdOutcomes) -> usize {
    unsafe { outcomes.as_ref() }.map_or(0, |o| o.0.len())
}

/// Centre minute of the first outcome.
///
/// # Safety
/// `outcomes` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sd_outcomes_start_min(outcomes: *const SdOutcomes) -> u32 {
    unsafe { outcomes.as_ref() }.map_or(0, |o| o.0.start_min)
}

/// Borrowed array of `sd_outcomes_len` probabilities.
///
/// # Safety
/// `outcomes` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sd_outcomes_probabilities(outcomes: *const SdOutcomes) -> *const f64 {
    unsafe { outcomes.as_ref() }.map_or(ptr::null(), |o| o.0.probabilities.as_ptr())
}

/// Borrowed array of `sd_outcomes_len` 0/1 decisions.
///
/// # Safety
/// `outcomes` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sd_outcomes_values(outcomes: *const SdOutcomes) -> *const u8 {
    unsafe { outcomes.as_ref() }.map_or(ptr::null(), |o| o.0.values.as_ptr())
}

/// # Safety
/// `outcomes` must come from this library and not be used afterwards. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn sd_outcomes_free(outcomes: *mut SdOutcomes) {
    if !outcomes.is_null() {
        drop(unsafe { Box::from_raw(outcomes) });
    }
}

/// 30-minute sliding sums of `n` binary outcomes into `out_scores`, which
/// must hold `n - 29` values; `*out_len` receives that count.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn sd_confidence(
    values: *const u8,
    n: usize,
    out_scores: *mut u32,
    capacity: usize,
    out_len: *mut usize,
) -> SdStatus {
    guard(|| {
        let v = unsafe { slice(values, n, "values") }?;
        if v.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("outcomes must be 0 or 1".into()).into());
        }
        let series = BinaryOutcomeSeries {
            values: v.to_vec(),
            probabilities: v.iter().map(|&b| b as f64).collect(),
            start_min: 0,
        };
        let conf = score::confidence(&series)?;
        if out_len.is_null() {
            return Err(Fail::Null("out_len"));
        }
        unsafe { *out_len = conf.scores.len() };
        if capacity < conf.scores.len() {
            return Err(Error::ShapeMismatch(format!("{} scores need capacity {capacity}", conf.scores.len())).into());
        }
        if out_scores.is_null() {
            return Err(Fail::Null("out_scores"));
        }
        unsafe { ptr::copy_nonoverlapping(conf.scores.as_ptr(), out_scores, conf.scores.len()) };
        Ok(())
    })
}
