//! C ABI over the `equibound` library.
//!
//! Every fallible function returns an [`EqbStatus`]; on failure the message
//! is available from [`eqb_last_error`] on the same thread. Handles are
//! opaque, created by `*_new`/`*_load` functions and released with the
//! matching `*_free`. Passing a null handle to a `*_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use equibound::bounds::{self, BoundInputs, BoundKind, BoundReport};
use equibound::data::Dataset;
use equibound::group::{parse_group, GroupRef, GroupSignal};
use equibound::models::format::{read_model, write_model};
use equibound::models::{self, ModelSpec, Params, Pooling};
use equibound::training::{self, LossKind, TrainConfig};
use equibound::verify::{self, Scope};

/// Result codes shared by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Group = 3,
    Model = 4,
    Data = 5,
    Train = 6,
    Bound = 7,
    Io = 8,
    ChecksFailed = 9,
    Panic = 10,
}

/// Which bound a report came from.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqbBoundKind {
    GeneralPooling = 0,
    MaxPooling = 1,
    Locality = 2,
    BandLimitedFloor = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqbBoundReport {
    pub kind: EqbBoundKind,
    pub complexity_term: f64,
    pub confidence_term: f64,
    pub total: f64,
    /// `NaN` unless the max-pooling bound was used.
    pub mmax: f64,
    /// Nonzero when `mmax` came from sampling.
    pub lower_estimate: u8,
}

impl From<BoundReport> for EqbBoundReport {
    fn from(r: BoundReport) -> Self {
        EqbBoundReport {
            kind: match r.kind {
                BoundKind::GeneralPooling => EqbBoundKind::GeneralPooling,
                BoundKind::MaxPooling => EqbBoundKind::MaxPooling,
                BoundKind::Locality => EqbBoundKind::Locality,
                BoundKind::BandLimitedFloor => EqbBoundKind::BandLimitedFloor,
            },
            complexity_term: r.complexity_term,
            confidence_term: r.confidence_term,
            total: r.total,
            mmax: r.mmax.unwrap_or(f64::NAN),
            lower_estimate: r.lower_estimate as u8,
        }
    }
}

/// A finite group.
pub struct EqbGroup(GroupRef);

/// A model shape with its parameters.
pub struct EqbModel {
    spec: ModelSpec,
    params: Params,
}

/// Labelled group signals.
pub struct EqbDataset(Dataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Fail(EqbStatus, String);

fn fail<E: std::fmt::Display>(status: EqbStatus) -> impl FnOnce(E) -> Fail {
    move |e| Fail(status, e.to_string())
}

/// Runs `f`, recording its error message and turning panics into
/// [`EqbStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EqbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EqbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EqbStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(EqbStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(EqbStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: caller passes a live handle or null.
    unsafe { p.as_ref() }.ok_or_else(|| Fail(EqbStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(EqbStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: caller passes `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(EqbStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: caller passes a writable location.
    unsafe { out.write(v) };
    Ok(())
}

/// Message for the last failed call on this thread, or null after a
/// success. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn eqb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a group spec such as `c8`, `d4` or `c2xc4`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_group_new(spec: *const c_char, out: *mut *mut EqbGroup) -> EqbStatus {
    guard(|| {
        let s = unsafe { str_arg(spec, "spec") }?;
        let g = parse_group(s).map_err(fail(EqbStatus::Group))?;
        unsafe { write_out(out, Box::into_raw(Box::new(EqbGroup(g))), "out") }
    })
}

/// # Safety
/// `g` must be null or a handle from [`eqb_group_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eqb_group_free(g: *mut EqbGroup) {
    if !g.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(g) });
    }
}

/// `|G|`, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live group handle.
#[no_mangle]
pub unsafe extern "C" fn eqb_group_order(g: *const EqbGroup) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.0.order())
}

/// Writes the index of `a * b`.
///
/// # Safety
/// `g` must be a live group handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_group_mul(g: *const EqbGroup, a: usize, b: usize, out: *mut usize) -> EqbStatus {
    guard(|| {
        let g = unsafe { ref_arg(g, "group") }?;
        let n = g.0.order();
        if a >= n || b >= n {
            return Err(Fail(EqbStatus::InvalidArgument, format!("element index out of range for order {n}")));
        }
        unsafe { write_out(out, g.0.mul(a, b), "out") }
    })
}

/// Builds a dataset of `m` signals with `c0` channels each. `values` holds
/// `m * c0 * |G|` entries, sample-major then channel-major; `labels` holds
/// `m` entries in `{-1, +1}`.
///
/// # Safety
/// Pointers must reference the stated number of elements; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_dataset_new(
    g: *const EqbGroup,
    c0: usize,
    m: usize,
    values: *const f64,
    labels: *const f64,
    out: *mut *mut EqbDataset,
) -> EqbStatus {
    guard(|| {
        let g = unsafe { ref_arg(g, "group") }?;
        let dim = g.0.order() * c0;
        if c0 == 0 || m == 0 {
            return Err(Fail(EqbStatus::InvalidArgument, "c0 and m must be >= 1".into()));
        }
        let vals = unsafe { slice_arg(values, m * dim, "values") }?;
        let labs = unsafe { slice_arg(labels, m, "labels") }?;
        let inputs = vals
            .chunks(dim)
            .map(|c| GroupSignal::from_channels(g.0.clone(), c0, c.to_vec()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail(EqbStatus::Data))?;
        let d = Dataset::new(g.0.clone(), c0, inputs, labs.to_vec()).map_err(fail(EqbStatus::Data))?;
        unsafe { write_out(out, Box::into_raw(Box::new(EqbDataset(d))), "out") }
    })
}

/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn eqb_dataset_free(d: *mut EqbDataset) {
    if !d.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(d) });
    }
}

/// `b_x = max_i |x_i|`, or `NaN` for a null handle.
///
/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn eqb_dataset_b_x(d: *const EqbDataset) -> f64 {
    unsafe { d.as_ref() }.map_or(f64::NAN, |d| d.0.b_x())
}

/// New spatial group-convolution model with random parameters. `pooling`
/// is `avg`, `max` or `general:<rho>:<phi>`.
///
/// # Safety
/// `g` must be a live group handle, `pooling` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_model_new(
    g: *const EqbGroup,
    pooling: *const c_char,
    c0: usize,
    c1: usize,
    seed: u64,
    out: *mut *mut EqbModel,
) -> EqbStatus {
    guard(|| {
        let g = unsafe { ref_arg(g, "group") }?;
        let pooling: Pooling = unsafe { str_arg(pooling, "pooling") }?
            .parse()
            .map_err(fail(EqbStatus::InvalidArgument))?;
        let spec = ModelSpec::spatial(g.0.clone(), pooling, c0, c1).map_err(fail(EqbStatus::Model))?;
        let params = Params::random(&spec, &mut equibound::seed::rng(seed, &[0]));
        unsafe { write_out(out, Box::into_raw(Box::new(EqbModel { spec, params })), "out") }
    })
}

/// Reads a model file.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_model_load(path: *const c_char, out: *mut *mut EqbModel) -> EqbStatus {
    guard(|| {
        let path = unsafe { str_arg(path, "path") }?;
        let f = File::open(path).map_err(fail(EqbStatus::Io))?;
        let (spec, params) = read_model(BufReader::new(f)).map_err(fail(EqbStatus::Model))?;
        unsafe { write_out(out, Box::into_raw(Box::new(EqbModel { spec, params })), "out") }
    })
}

/// Writes a model file.
///
/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn eqb_model_save(model: *const EqbModel, path: *const c_char) -> EqbStatus {
    guard(|| {
        let model = unsafe { ref_arg(model, "model") }?;
        let path = unsafe { str_arg(path, "path") }?;
        let mut w = BufWriter::new(File::create(path).map_err(fail(EqbStatus::Io))?);
        write_model(&mut w, &model.spec, &model.params).map_err(fail(EqbStatus::Model))?;
        w.flush().map_err(fail(EqbStatus::Io))
    })
}

/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn eqb_model_free(model: *mut EqbModel) {
    if !model.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Network output on one signal of `len = c0 * |G|` values.
///
/// # Safety
/// `x` must reference `len` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_model_forward(model: *const EqbModel, x: *const f64, len: usize, out: *mut f64) -> EqbStatus {
    guard(|| {
        let model = unsafe { ref_arg(model, "model") }?;
        let g = model.spec.group().clone();
        if len != g.order() * model.spec.c0() {
            return Err(Fail(
                EqbStatus::InvalidArgument,
                format!("expected {} values, got {len}", g.order() * model.spec.c0()),
            ));
        }
        let xs = unsafe { slice_arg(x, len, "x") }?;
        let sig = GroupSignal::from_channels(g, model.spec.c0(), xs.to_vec()).map_err(fail(EqbStatus::Data))?;
        let y = models::forward(&model.spec, &model.params, &sig).map_err(fail(EqbStatus::Model))?;
        unsafe { write_out(out, y, "out") }
    })
}

/// `(M1, M2)` of the current parameters.
///
/// # Safety
/// `model` must be a live handle; `m1`, `m2` writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_model_norms(model: *const EqbModel, m1: *mut f64, m2: *mut f64) -> EqbStatus {
    guard(|| {
        let model = unsafe { ref_arg(model, "model") }?;
        let (a, b) = model.params.norms(&model.spec);
        unsafe { write_out(m1, a, "m1") }?;
        unsafe { write_out(m2, b, "m2") }
    })
}

/// Trains in place with Adam on the hinge loss (`loss = 0`) or the logistic
/// loss (`loss = 1`), full batch, and writes the final empirical loss.
///
/// # Safety
/// Handles must be live; `final_loss` may be null.
#[no_mangle]
pub unsafe extern "C" fn eqb_model_train(
    model: *mut EqbModel,
    data: *const EqbDataset,
    steps: usize,
    step_size: f64,
    loss: u32,
    seed: u64,
    final_loss: *mut f64,
) -> EqbStatus {
    guard(|| {
        // SAFETY: caller passes a live, exclusively borrowed handle.
        let model = unsafe { model.as_mut() }.ok_or_else(|| Fail(EqbStatus::NullPointer, "model is null".into()))?;
        let data = unsafe { ref_arg(data, "data") }?;
        let loss = match loss {
            0 => LossKind::Hinge,
            1 => LossKind::Logistic,
            k => return Err(Fail(EqbStatus::InvalidArgument, format!("unknown loss {k}"))),
        };
        let cfg = TrainConfig {
            steps,
            step_size,
            loss,
            seed,
            ..TrainConfig::default()
        };
        let out = training::train_from(&model.spec, &data.0, &cfg, model.params.clone()).map_err(fail(EqbStatus::Train))?;
        model.params = out.params;
        if !final_loss.is_null() {
            let l = training::empirical_loss(&model.spec, &model.params, &data.0, loss).map_err(fail(EqbStatus::Train))?;
            unsafe { write_out(final_loss, l, "final_loss") }?;
        }
        Ok(())
    })
}

/// General-pooling bound from raw inputs.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_bound_general(
    m1: f64,
    m2: f64,
    b_x: f64,
    m: usize,
    delta: f64,
    group_order: usize,
    out: *mut EqbBoundReport,
) -> EqbStatus {
    guard(|| {
        let r = bounds::bound_general_pooling(&BoundInputs::new(m1, m2, b_x, m, delta, group_order))
            .map_err(fail(EqbStatus::Bound))?;
        unsafe { write_out(out, r.into(), "out") }
    })
}

/// The bound matching the model's pooling, measured on `data`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_bound_for_model(
    model: *const EqbModel,
    data: *const EqbDataset,
    delta: f64,
    max_samples: usize,
    seed: u64,
    out: *mut EqbBoundReport,
) -> EqbStatus {
    guard(|| {
        let model = unsafe { ref_arg(model, "model") }?;
        let data = unsafe { ref_arg(data, "data") }?;
        let r = bounds::bound_for_model(&model.spec, &model.params, &data.0, delta, max_samples, seed)
            .map_err(fail(EqbStatus::Bound))?;
        unsafe { write_out(out, r.into(), "out") }
    })
}

/// Runs a self-check scope (`group`, `spectral`, `models`, `training`,
/// `bounds`, `rademacher` or `all`) and writes the number of failed checks.
/// Returns [`EqbStatus::ChecksFailed`] when any failed.
///
/// # Safety
/// `scope` must be NUL-terminated; `failed` may be null.
#[no_mangle]
pub unsafe extern "C" fn eqb_verify(scope: *const c_char, seed: u64, failed: *mut usize) -> EqbStatus {
    guard(|| {
        let scope: Scope = unsafe { str_arg(scope, "scope") }?
            .parse()
            .map_err(fail(EqbStatus::InvalidArgument))?;
        let results = verify::run(scope, seed);
        let bad: Vec<_> = results.iter().filter(|r| !r.passed()).collect();
        if !failed.is_null() {
            unsafe { write_out(failed, bad.len(), "failed") }?;
        }
        match bad.first() {
            Some(r) => Err(Fail(
                EqbStatus::ChecksFailed,
                format!("{}: {}", r.name, r.outcome.as_ref().unwrap_err()),
            )),
            None => Ok(()),
        }
    })
}
