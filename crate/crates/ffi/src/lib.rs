//! C ABI over the `pano-depth` toolkit.
//!
//! Conventions shared by every function:
//! - Grids are `width * height` arrays in row-major order, row 0 at the
//!   south pole, so element `(i, j)` lives at `j * width + i`.
//! - Functions return a [`PdStatus`]; on failure the message is available
//!   through [`pd_last_error_message`] on the same thread.
//! - Handles returned through `out` pointers are owned by the caller and
//!   released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pano_depth::boundary::{BoundaryAccumulator, BoundaryParams};
use pano_depth::direct::{self, DirectErrors};
use pano_depth::io::SampleManifest;
use pano_depth::losses::{self, LossKind, LossOptions, VnlConfig};
use pano_depth::report::{self, EvalOptions, GeomOptions};
use pano_depth::sphere;
use pano_depth::warp::{self, DisplacementField};
use pano_depth::{build_icosphere, DepthPanorama, Error, Grid, IcoSphere};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EmptyMask = 4,
    NonFinite = 5,
    Io = 6,
    Decode = 7,
    Misaligned = 8,
    SamplingExhausted = 9,
    MissingColumn = 10,
    Panic = 11,
}

impl From<&Error> for PdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::IndexOutOfRange { .. } | Error::InvalidArgument(_) => PdStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => PdStatus::DimensionMismatch,
            Error::EmptyMask(_) => PdStatus::EmptyMask,
            Error::NonFinite(_) => PdStatus::NonFinite,
            Error::Io { .. } => PdStatus::Io,
            Error::MalformedHeader { .. } | Error::WrongAspect { .. } | Error::Decode { .. } | Error::Manifest { .. } | Error::Json(_) => {
                PdStatus::Decode
            }
            Error::Misaligned(_) => PdStatus::Misaligned,
            Error::SamplingExhausted { .. } => PdStatus::SamplingExhausted,
            Error::MissingColumn(_) => PdStatus::MissingColumn,
        }
    }
}

/// Loss selector for [`pd_loss`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdLossKind {
    L1 = 0,
    Log = 1,
    Berhu = 2,
    Grad = 3,
    Cosine = 4,
    Vnl = 5,
    Comb = 6,
    CombVnl = 7,
    L1Vnl = 8,
}

impl From<PdLossKind> for LossKind {
    fn from(k: PdLossKind) -> Self {
        match k {
            PdLossKind::L1 => LossKind::L1,
            PdLossKind::Log => LossKind::Log,
            PdLossKind::Berhu => LossKind::Berhu,
            PdLossKind::Grad => LossKind::Grad,
            PdLossKind::Cosine => LossKind::Cosine,
            PdLossKind::Vnl => LossKind::Vnl,
            PdLossKind::Comb => LossKind::Comb,
            PdLossKind::CombVnl => LossKind::CombVnl,
            PdLossKind::L1Vnl => LossKind::L1Vnl,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PdDirectErrors {
    pub rmse: f64,
    pub rmsle: f64,
    pub abs_rel: f64,
    pub sq_rel: f64,
}

impl From<DirectErrors> for PdDirectErrors {
    fn from(e: DirectErrors) -> Self {
        PdDirectErrors {
            rmse: e.rmse,
            rmsle: e.rmsle,
            abs_rel: e.abs_rel,
            sq_rel: e.sq_rel,
        }
    }
}

/// Entries of the three-element arrays correspond to the 0.25, 0.5 and
/// 1.0 gradient thresholds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PdBoundaryReport {
    pub dbe_acc: f64,
    pub dbe_comp: f64,
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    pub f1: [f64; 3],
}

/// Options for [`pd_evaluate_manifests`]; start from
/// [`pd_eval_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PdEvalOptions {
    pub max_depth: f64,
    /// Non-zero adds solid-angle weighted metrics.
    pub spherical_weights: i32,
    /// Negative disables icosphere sampling.
    pub ico_order: i32,
    /// Non-zero enables point-cloud and mesh metrics.
    pub geometric: i32,
    pub m2m_samples: u64,
    pub seed: u64,
    /// Non-zero averages per-sample metrics instead of pooling pixels.
    pub per_sample_mean: i32,
    /// 0 uses one thread per core.
    pub jobs: u32,
}

/// Depth map with validity mask.
pub struct PdDepth(DepthPanorama);

/// Subdivided icosahedron.
pub struct PdIcosphere(IcoSphere);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(PdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(PdStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PdStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PdStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any error or panic for [`pd_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn cells(width: usize, height: usize) -> Result<usize, Fail> {
    width
        .checked_mul(height)
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid(format!("bad grid dimensions {width}x{height}")))
}

unsafe fn grid_f64(p: *const f64, width: usize, height: usize, what: &str) -> Result<Grid<f64>, Fail> {
    let n = cells(width, height)?;
    if p.is_null() {
        return Err(null(what));
    }
    Ok(Grid::from_vec(width, height, std::slice::from_raw_parts(p, n).to_vec())?)
}

unsafe fn grid_mask(p: *const u8, width: usize, height: usize) -> Result<Grid<bool>, Fail> {
    let n = cells(width, height)?;
    if p.is_null() {
        return Err(null("mask"));
    }
    Ok(Grid::from_vec(width, height, std::slice::from_raw_parts(p, n).iter().map(|&m| m != 0).collect())?)
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| invalid(format!("`{what}` is not UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length without the
/// terminator. Returns 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Wraps ground-truth style depth: pixels are valid where the depth is
/// finite and in `(0, max_depth]`, and additionally where `mask` is non-zero
/// when a mask is supplied.
///
/// # Safety
/// `depth` must hold `width * height` values, `mask` must be null or hold as
/// many bytes, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_depth_new(
    depth: *const f64,
    mask: *const u8,
    width: usize,
    height: usize,
    max_depth: f64,
    out: *mut *mut PdDepth,
) -> PdStatus {
    guard(|| {
        let mut d = DepthPanorama::from_depth(grid_f64(depth, width, height, "depth")?, max_depth)?;
        if !mask.is_null() {
            d = d.restricted(&grid_mask(mask, width, height)?)?;
        }
        write_out(out, boxed(PdDepth(d)), "out")
    })
}

/// Wraps raw network output: finite values are clamped into
/// `[0.001, max_depth]`, non-finite ones are invalid.
///
/// # Safety
/// `depth` must hold `width * height` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_depth_from_prediction(
    depth: *const f64,
    width: usize,
    height: usize,
    max_depth: f64,
    out: *mut *mut PdDepth,
) -> PdStatus {
    guard(|| {
        let d = DepthPanorama::from_prediction(grid_f64(depth, width, height, "depth")?, max_depth)?;
        write_out(out, boxed(PdDepth(d)), "out")
    })
}

/// Loads a PFM depth file; values outside `(0, max_depth]` are invalid.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_depth_load(path: *const c_char, max_depth: f64, out: *mut *mut PdDepth) -> PdStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let fmt = pano_depth::io::DepthFormat::from_path(path, None, None)?;
        let d = pano_depth::io::load_depth(path, fmt, max_depth)?;
        write_out(out, boxed(PdDepth(d)), "out")
    })
}

/// # Safety
/// `d` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pd_depth_free(d: *mut PdDepth) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle; `width` and `height` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_depth_dims(d: *const PdDepth, width: *mut usize, height: *mut usize) -> PdStatus {
    guard(|| {
        let (w, h) = deref(d, "depth")?.0.dims();
        write_out(width, w, "width")?;
        write_out(height, h, "height")
    })
}

/// Copies depth values and the mask (1 valid, 0 invalid). Either output may
/// be null; each must otherwise hold `width * height` elements.
///
/// # Safety
/// See above; `d` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pd_depth_copy(d: *const PdDepth, depth: *mut f64, mask: *mut u8) -> PdStatus {
    guard(|| {
        let d = &deref(d, "depth")?.0;
        if !depth.is_null() {
            ptr::copy_nonoverlapping(d.depth().as_slice().as_ptr(), depth, d.depth().len());
        }
        if !mask.is_null() {
            for (k, &m) in d.mask().as_slice().iter().enumerate() {
                *mask.add(k) = u8::from(m);
            }
        }
        Ok(())
    })
}

fn weights(spherical: i32, d: &DepthPanorama) -> Option<sphere::WeightGrid> {
    (spherical != 0).then(|| sphere::spherical_weights(d.width(), d.height()))
}

/// RMSE, RMSLE, AbsRel and SqRel over the joint mask, optionally weighted by
/// pixel solid angle.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_direct_errors(
    pred: *const PdDepth,
    gt: *const PdDepth,
    spherical: i32,
    out: *mut PdDirectErrors,
) -> PdStatus {
    guard(|| {
        let (p, g) = (&deref(pred, "pred")?.0, &deref(gt, "gt")?.0);
        let e = direct::direct_errors(p, g, weights(spherical, g).as_ref())?;
        write_out(out, e.into(), "out")
    })
}

/// Fraction of jointly valid pixels with `max(p/g, g/p) < threshold`.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_delta_accuracy(
    pred: *const PdDepth,
    gt: *const PdDepth,
    threshold: f64,
    spherical: i32,
    out: *mut f64,
) -> PdStatus {
    guard(|| {
        let (p, g) = (&deref(pred, "pred")?.0, &deref(gt, "gt")?.0);
        write_out(out, direct::delta_accuracy(p, g, threshold, weights(spherical, g).as_ref())?, "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_icosphere_new(order: u32, out: *mut *mut PdIcosphere) -> PdStatus {
    guard(|| write_out(out, boxed(PdIcosphere(build_icosphere(order)?)), "out"))
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pd_icosphere_free(s: *mut PdIcosphere) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of vertices, 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pd_icosphere_vertex_count(s: *const PdIcosphere) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Writes `x y z` triples of unit vertices; `xyz` must hold `3 * count`.
///
/// # Safety
/// `s` must be a live handle and `xyz` valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_icosphere_vertices(s: *const PdIcosphere, xyz: *mut f64, capacity: usize) -> PdStatus {
    guard(|| {
        let s = &deref(s, "icosphere")?.0;
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        if capacity < 3 * s.len() {
            return Err(invalid(format!("need {} doubles, got {capacity}", 3 * s.len())));
        }
        for (k, v) in s.vertices().iter().enumerate() {
            ptr::copy_nonoverlapping(v.as_ptr(), xyz.add(3 * k), 3);
        }
        Ok(())
    })
}

/// `δ` accuracy evaluated only at the pixels under the icosphere vertices.
///
/// # Safety
/// All handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_ico_delta_accuracy(
    pred: *const PdDepth,
    gt: *const PdDepth,
    sphere: *const PdIcosphere,
    threshold: f64,
    out: *mut f64,
) -> PdStatus {
    guard(|| {
        let (p, g) = (&deref(pred, "pred")?.0, &deref(gt, "gt")?.0);
        let s = &deref(sphere, "sphere")?.0;
        write_out(out, direct::ico_delta_accuracy(p, g, s, threshold)?, "out")
    })
}

/// Depth boundary errors and edge precision/recall with default detector
/// parameters and the given maximum depth.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_boundary_metrics(
    pred: *const PdDepth,
    gt: *const PdDepth,
    max_depth: f64,
    out: *mut PdBoundaryReport,
) -> PdStatus {
    guard(|| {
        let (p, g) = (&deref(pred, "pred")?.0, &deref(gt, "gt")?.0);
        let params = BoundaryParams { max_depth, ..BoundaryParams::default() };
        let mut acc = BoundaryAccumulator::default();
        acc.add_pair(p, g, &params)?;
        let r = acc.report(&params);
        let report = PdBoundaryReport {
            dbe_acc: r.dbe_acc,
            dbe_comp: r.dbe_comp,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        };
        write_out(out, report, "out")
    })
}

/// Loss value and, when `gradient` is non-null, its gradient with respect to
/// `pred` (`width * height` doubles). Pixels with a zero `mask` byte are
/// ignored. `seed` drives virtual-normal triplet sampling.
///
/// # Safety
/// Arrays must hold `width * height` elements; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_loss(
    kind: PdLossKind,
    pred: *const f64,
    gt: *const f64,
    mask: *const u8,
    width: usize,
    height: usize,
    seed: u64,
    value: *mut f64,
    gradient: *mut f64,
) -> PdStatus {
    guard(|| {
        let p = grid_f64(pred, width, height, "pred")?;
        let g = grid_f64(gt, width, height, "gt")?;
        let m = grid_mask(mask, width, height)?;
        let opts = LossOptions {
            vnl: VnlConfig { seed, ..VnlConfig::default() },
            ..LossOptions::default()
        };
        let l = losses::evaluate(kind.into(), &p, &g, &m, &opts)?;
        write_out(value, l.value, "value")?;
        if !gradient.is_null() {
            ptr::copy_nonoverlapping(l.gradient.as_slice().as_ptr(), gradient, l.gradient.len());
        }
        Ok(())
    })
}

/// Resamples `depth` at `(φ + dphi, θ + dtheta)` per pixel (radians), with
/// longitude wrapping and latitude clamping.
///
/// # Safety
/// `depth` must be a live handle, `dphi`/`dtheta` must hold one value per
/// pixel, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_warp(
    depth: *const PdDepth,
    dphi: *const f64,
    dtheta: *const f64,
    out: *mut *mut PdDepth,
) -> PdStatus {
    guard(|| {
        let d = &deref(depth, "depth")?.0;
        let (w, h) = d.dims();
        let field = DisplacementField::new(grid_f64(dphi, w, h, "dphi")?, grid_f64(dtheta, w, h, "dtheta")?)?;
        write_out(out, boxed(PdDepth(warp::apply_displacement(d, &field)?)), "out")
    })
}

#[no_mangle]
pub extern "C" fn pd_eval_options_default() -> PdEvalOptions {
    let g = GeomOptions::default();
    PdEvalOptions {
        max_depth: pano_depth::io::DEFAULT_MAX_DEPTH,
        spherical_weights: 0,
        ico_order: -1,
        geometric: 0,
        m2m_samples: g.hausdorff.samples as u64,
        seed: g.hausdorff.seed,
        per_sample_mean: 0,
        jobs: 0,
    }
}

/// Evaluates two JSON Lines manifests and returns the report as a JSON
/// string in `json_out`, to be released with [`pd_string_free`].
///
/// # Safety
/// Paths must be NUL-terminated; `opts` may be null for defaults;
/// `json_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_evaluate_manifests(
    pred_manifest: *const c_char,
    gt_manifest: *const c_char,
    opts: *const PdEvalOptions,
    json_out: *mut *mut c_char,
) -> PdStatus {
    guard(|| {
        let pred = SampleManifest::read(path_arg(pred_manifest, "pred_manifest")?)?;
        let gt = SampleManifest::read(path_arg(gt_manifest, "gt_manifest")?)?;
        let o = opts.as_ref().copied().unwrap_or_else(|| pd_eval_options_default());
        let eval = EvalOptions {
            max_depth: o.max_depth,
            spherical_weights: o.spherical_weights != 0,
            ico_order: u32::try_from(o.ico_order).ok(),
            geom: (o.geometric != 0).then(|| GeomOptions {
                hausdorff: pano_depth::geom::HausdorffOptions { samples: o.m2m_samples as usize, seed: o.seed },
                ..GeomOptions::default()
            }),
            aggregation: if o.per_sample_mean != 0 {
                report::Aggregation::PerSampleMean
            } else {
                report::Aggregation::Pooled
            },
            jobs: o.jobs as usize,
            boundary: BoundaryParams { max_depth: o.max_depth, ..BoundaryParams::default() },
            ..EvalOptions::default()
        };
        let json = report::evaluate(&pred, &gt, &eval)?.to_json()?;
        let c = CString::new(json).map_err(|_| invalid("report contains NUL"))?;
        write_out(json_out, c.into_raw(), "json_out")
    })
}

/// `1 / ((1 − accuracy) · error)`; `+inf` when the denominator is zero.
#[no_mangle]
pub extern "C" fn pd_indicator(accuracy: f64, error: f64) -> f64 {
    report::indicator(accuracy, error)
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
