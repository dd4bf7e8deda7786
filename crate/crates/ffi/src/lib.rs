//! C ABI for the passrate library.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`PrStatus`]; on failure, [`pr_last_error_message`] describes the most
//! recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use passrate::classifier::{predict, read_model, softmax_probs, MlrModel};
use passrate::dominant::{dominant_subdivision_on, DominantSubdivision};
use passrate::evaluation::cohens_kappa;
use passrate::features::{feature_matrix, FeatureConfig, FeatureMatrix};
use passrate::geometry::Point;
use passrate::match_data::{load_match_dir, MatchDataset};
use passrate::motion::{MotionModel, TimeStepGrid, DEFAULT_A_MAX, DEFAULT_V_MAX};
use passrate::synthetic::{generate_match, SynthConfig};
use passrate::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Schema = 4,
    Integrity = 5,
    Precondition = 6,
    Dimension = 7,
    Geometry = 8,
    NotFound = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrMotionKind {
    Circle = 0,
    Ellipse = 1,
}

/// A loaded or generated match.
pub struct PrDataset(MatchDataset);

/// Dominant regions of every player at one step.
pub struct PrSubdivision(DominantSubdivision);

/// One feature row per pass.
pub struct PrFeatureMatrix(FeatureMatrix);

/// A trained classifier.
pub struct PrModel(MlrModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> PrStatus {
    match e {
        Error::Io(_) => PrStatus::Io,
        Error::Csv(e) if e.is_io_error() => PrStatus::Io,
        Error::Schema { .. } | Error::Csv(_) => PrStatus::Schema,
        Error::Integrity(_) | Error::OutOfInterval { .. } | Error::Coverage(_) => PrStatus::Integrity,
        Error::Dimension { .. } | Error::LengthMismatch { .. } | Error::LabelRange { .. } => PrStatus::Dimension,
        Error::NoPath | Error::OpenBoundary { .. } | Error::NonSimple => PrStatus::Geometry,
        Error::Config(_) => PrStatus::InvalidArgument,
        _ => PrStatus::Precondition,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), PrStatus>) -> PrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PrStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            PrStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, PrStatus>;
}

impl<T> OrStatus<T> for passrate::Result<T> {
    fn or_status(self) -> Result<T, PrStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

fn null(name: &str) -> PrStatus {
    set_error(format!("{name} is null"));
    PrStatus::NullArgument
}

fn invalid(msg: impl Into<String>) -> PrStatus {
    set_error(msg);
    PrStatus::InvalidArgument
}

/// # Safety
/// `p` must be null or point to a valid `T`.
unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, PrStatus> {
    p.as_ref().ok_or_else(|| null(name))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, PrStatus> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), PrStatus> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn motion_model(kind: PrMotionKind) -> MotionModel {
    match kind {
        PrMotionKind::Circle => MotionModel::circle(DEFAULT_V_MAX, DEFAULT_A_MAX),
        PrMotionKind::Ellipse => MotionModel::ellipse(DEFAULT_V_MAX, DEFAULT_A_MAX),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated and
/// NUL-terminated) and returns the full message length in bytes, or 0 when
/// there is no error. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Loads the three CSV files of a match from a directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_load_dir(dir: *const c_char, out: *mut *mut PrDataset) -> PrStatus {
    guard(|| {
        let dir = path_arg(dir, "dir")?;
        let ds = load_match_dir(&dir).or_status()?;
        write_out(out, Box::into_raw(Box::new(PrDataset(ds))), "out")
    })
}

/// Generates a synthetic match with default team sizes.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_generate(
    seed: u64,
    duration_steps: u32,
    pass_rate: f64,
    out: *mut *mut PrDataset,
) -> PrStatus {
    guard(|| {
        let cfg = SynthConfig {
            seed,
            duration_steps,
            pass_rate,
            ..SynthConfig::default()
        };
        let ds = generate_match(&cfg).map_err(|e| invalid(e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(PrDataset(ds))), "out")
    })
}

/// # Safety
/// `ds` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_free(ds: *mut PrDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_pass_count(ds: *const PrDataset, out: *mut usize) -> PrStatus {
    guard(|| {
        let ds = deref(ds, "ds")?;
        write_out(out, ds.0.extract_passes().len(), "out")
    })
}

/// Last clock step of the match.
///
/// # Safety
/// `ds` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_max_step(ds: *const PrDataset, out: *mut u32) -> PrStatus {
    guard(|| {
        let ds = deref(ds, "ds")?;
        write_out(out, ds.0.clock.max_step, "out")
    })
}

/// Computes the dominant regions at `step` with default model parameters.
///
/// # Safety
/// `ds` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_subdivision_compute(
    ds: *const PrDataset,
    step: u32,
    kind: PrMotionKind,
    out: *mut *mut PrSubdivision,
) -> PrStatus {
    guard(|| {
        let ds = &deref(ds, "ds")?.0;
        if step > ds.clock.max_step {
            return Err(invalid(format!("step {step} is past the last step {}", ds.clock.max_step)));
        }
        let cfg = FeatureConfig::default();
        let states = ds.states_at(step, cfg.facing_mode);
        let mut sub = dominant_subdivision_on(&states, &motion_model(kind), &TimeStepGrid::default(), cfg.n_sides, &ds.pitch)
            .or_status()?;
        sub.step = Some(step);
        write_out(out, Box::into_raw(Box::new(PrSubdivision(sub))), "out")
    })
}

/// # Safety
/// `sub` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_subdivision_free(sub: *mut PrSubdivision) {
    if !sub.is_null() {
        drop(Box::from_raw(sub));
    }
}

/// # Safety
/// `sub` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_subdivision_region_count(sub: *const PrSubdivision, out: *mut usize) -> PrStatus {
    guard(|| {
        let sub = deref(sub, "sub")?;
        write_out(out, sub.0.regions.len(), "out")
    })
}

/// Area in square metres of one player's region.
///
/// # Safety
/// `sub` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_subdivision_area(sub: *const PrSubdivision, player: u32, out: *mut f64) -> PrStatus {
    guard(|| {
        let sub = deref(sub, "sub")?;
        let Some(area) = sub.0.area(player) else {
            set_error(format!("player {player} has no region"));
            return Err(PrStatus::NotFound);
        };
        write_out(out, area, "out")
    })
}

/// Player whose region contains `(x, y)`; `PR_STATUS_NOT_FOUND` when none.
///
/// # Safety
/// `sub` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_subdivision_owner_at(
    sub: *const PrSubdivision,
    x: f64,
    y: f64,
    out: *mut u32,
) -> PrStatus {
    guard(|| {
        let sub = deref(sub, "sub")?;
        let Some(owner) = sub.0.owner_at(Point::new(x, y)) else {
            set_error(format!("no region contains ({x}, {y})"));
            return Err(PrStatus::NotFound);
        };
        write_out(out, owner, "out")
    })
}

/// Feature matrix of every pass, with masked entries imputed.
///
/// # Safety
/// `ds` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_features_compute(
    ds: *const PrDataset,
    kind: PrMotionKind,
    out: *mut *mut PrFeatureMatrix,
) -> PrStatus {
    guard(|| {
        let ds = &deref(ds, "ds")?.0;
        let passes = ds.extract_passes();
        let fm = feature_matrix(
            ds,
            &passes,
            &motion_model(kind),
            &TimeStepGrid::default(),
            &FeatureConfig::default(),
        )
        .or_status()?;
        write_out(out, Box::into_raw(Box::new(PrFeatureMatrix(fm))), "out")
    })
}

/// # Safety
/// `fm` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_features_free(fm: *mut PrFeatureMatrix) {
    if !fm.is_null() {
        drop(Box::from_raw(fm));
    }
}

/// # Safety
/// `fm` must be a live handle; `rows` and `cols` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn pr_features_shape(fm: *const PrFeatureMatrix, rows: *mut usize, cols: *mut usize) -> PrStatus {
    guard(|| {
        let fm = deref(fm, "fm")?;
        write_out(rows, fm.0.n_rows(), "rows")?;
        write_out(cols, fm.0.n_cols(), "cols")
    })
}

/// # Safety
/// `fm` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_features_get(
    fm: *const PrFeatureMatrix,
    row: usize,
    col: usize,
    out: *mut f64,
) -> PrStatus {
    guard(|| {
        let fm = deref(fm, "fm")?;
        let value = fm
            .0
            .rows
            .get(row)
            .and_then(|r| r.values.get(col))
            .ok_or_else(|| invalid(format!("cell ({row}, {col}) is out of range")))?;
        write_out(out, *value, "out")
    })
}

/// # Safety
/// `fm` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pr_features_write_csv(fm: *const PrFeatureMatrix, path: *const c_char) -> PrStatus {
    guard(|| {
        let fm = deref(fm, "fm")?;
        let path = path_arg(path, "path")?;
        fm.0.write_csv(&path).or_status()
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_model_load(path: *const c_char, out: *mut *mut PrModel) -> PrStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let model = read_model(&path).or_status()?;
        write_out(out, Box::into_raw(Box::new(PrModel(model))), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_model_free(model: *mut PrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes and of input features.
///
/// # Safety
/// `model` must be a live handle; `k` and `n` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn pr_model_shape(model: *const PrModel, k: *mut usize, n: *mut usize) -> PrStatus {
    guard(|| {
        let model = deref(model, "model")?;
        write_out(k, model.0.k, "k")?;
        write_out(n, model.0.n, "n")
    })
}

/// # Safety
/// `x` must point to `n` readable doubles.
unsafe fn prepared(model: &MlrModel, x: *const f64, n: usize) -> Result<Vec<f64>, PrStatus> {
    if x.is_null() {
        return Err(null("x"));
    }
    let raw = std::slice::from_raw_parts(x, n);
    model.prepare(raw).or_status()
}

/// Predicted 1-based class of a raw (unstandardized) feature row.
///
/// # Safety
/// `model` must be a live handle, `x` must point to `n` doubles and `out`
/// must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_model_predict(model: *const PrModel, x: *const f64, n: usize, out: *mut u32) -> PrStatus {
    guard(|| {
        let model = &deref(model, "model")?.0;
        let row = prepared(model, x, n)?;
        let class = predict(model, &row).or_status()?;
        write_out(out, class as u32, "out")
    })
}

/// Class probabilities of a raw feature row, written to `out[0..k]`.
///
/// # Safety
/// `model` must be a live handle, `x` must point to `n` doubles and `out`
/// to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pr_model_probabilities(
    model: *const PrModel,
    x: *const f64,
    n: usize,
    out: *mut f64,
    k: usize,
) -> PrStatus {
    guard(|| {
        let model = &deref(model, "model")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if k != model.k {
            return Err(invalid(format!("model has {} classes, buffer holds {k}", model.k)));
        }
        let row = prepared(model, x, n)?;
        let p = softmax_probs(model, &row).or_status()?;
        ptr::copy_nonoverlapping(p.as_ptr(), out, k);
        Ok(())
    })
}

/// Cohen's kappa of two labelings of `n` items.
///
/// # Safety
/// `a` and `b` must each point to `n` readable values and `out` must be
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_cohens_kappa(a: *const u32, b: *const u32, n: usize, out: *mut f64) -> PrStatus {
    guard(|| {
        if a.is_null() {
            return Err(null("a"));
        }
        if b.is_null() {
            return Err(null("b"));
        }
        let a: Vec<usize> = std::slice::from_raw_parts(a, n).iter().map(|&v| v as usize).collect();
        let b: Vec<usize> = std::slice::from_raw_parts(b, n).iter().map(|&v| v as usize).collect();
        let report = cohens_kappa(&a, &b).or_status()?;
        write_out(out, report.kappa, "out")
    })
}
