//! C ABI over `quasitrig`.
//!
//! Every fallible function returns a [`QtStatus`]; on failure the message is
//! kept per thread and can be read with [`qt_last_error_message`]. Handles
//! are opaque and must be released with their `_free` function. Buffers are
//! caller-allocated, with lengths passed explicitly.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quasitrig::analysis::estimate_beta;
use quasitrig::basemap;
use quasitrig::dynamics::{self, OrbitStatus};
use quasitrig::render::{self, Palette, SliceSpec};
use quasitrig::{validate_params, Error, Itinerary, MapParams, Point, TrayIndex};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotExpanding = 3,
    Domain = 4,
    WrongHalfSpace = 5,
    Overflow = 6,
    NoConvergence = 7,
    Inadmissible = 8,
    Parse = 9,
    Io = 10,
    BufferTooSmall = 11,
    Numerical = 12,
    Panic = 13,
}

/// Validated map parameters.
pub struct QtParams {
    inner: MapParams,
}

/// Admissible itinerary.
pub struct QtItinerary {
    inner: Itinerary,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> QtStatus {
    match e {
        Error::InvalidDimension(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite { .. }
        | Error::InvalidParameter(_)
        | Error::TooCloseToFold { .. } => QtStatus::InvalidArgument,
        Error::NotExpanding { .. } => QtStatus::NotExpanding,
        Error::Domain { .. } => QtStatus::Domain,
        Error::WrongHalfSpace { .. } => QtStatus::WrongHalfSpace,
        Error::Overflow { .. } => QtStatus::Overflow,
        Error::NoConvergence { .. } => QtStatus::NoConvergence,
        Error::Inadmissible { .. } => QtStatus::Inadmissible,
        Error::Json(_) | Error::Parse(_) => QtStatus::Parse,
        Error::Io { .. } => QtStatus::Io,
        Error::DegenerateFit(_) | Error::NonPositiveJacobian { .. } => QtStatus::Numerical,
    }
}

struct Fail(QtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult = std::result::Result<(), Fail>;

fn guard(body: impl FnOnce() -> FfiResult) -> QtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            QtStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside quasitrig".into());
            QtStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(QtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn params<'a>(p: *const QtParams) -> Result<&'a MapParams, Fail> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("params"))
}

unsafe fn itinerary<'a>(p: *const QtItinerary) -> Result<&'a Itinerary, Fail> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("itinerary"))
}

unsafe fn point(x: *const f64, dim: usize) -> Result<Point, Fail> {
    Ok(Point::new(slice(x, dim, "point")?.to_vec())?)
}

fn check_capacity(capacity: usize, needed: usize, what: &str) -> FfiResult {
    if capacity < needed {
        return Err(Fail(
            QtStatus::BufferTooSmall,
            format!("{what} holds {capacity} values, {needed} needed"),
        ));
    }
    Ok(())
}

fn write_point(out: &mut [f64], p: &Point) {
    out.copy_from_slice(p.coords());
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn qt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `beta_hat` from `samples` finite-difference Jacobians.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qt_estimate_beta(dim: usize, samples: usize, seed: u64, out: *mut f64) -> QtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = estimate_beta(dim, samples, seed)?;
        Ok(())
    })
}

/// Creates parameters for `f = lambda F`; fails with `NotExpanding` when
/// `lambda * beta_hat <= 1`.
///
/// # Safety
/// `out` must be valid for one write. The handle is released with
/// [`qt_params_free`].
#[no_mangle]
pub unsafe extern "C" fn qt_params_new(dim: usize, lambda: f64, beta_hat: f64, out: *mut *mut QtParams) -> QtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let inner = validate_params(dim, lambda, beta_hat)?;
        *out = Box::into_raw(Box::new(QtParams { inner }));
        Ok(())
    })
}

/// Estimates `beta_hat` and sets `lambda = 1.1 / beta_hat`.
///
/// # Safety
/// As [`qt_params_new`].
#[no_mangle]
pub unsafe extern "C" fn qt_params_auto(dim: usize, samples: usize, seed: u64, out: *mut *mut QtParams) -> QtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let beta = estimate_beta(dim, samples, seed)?;
        let inner = validate_params(dim, 1.1 / beta, beta)?;
        *out = Box::into_raw(Box::new(QtParams { inner }));
        Ok(())
    })
}

/// Sets the ordering constant `M` (raised to `max{e, 4 lambda}` if lower).
///
/// # Safety
/// `p` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qt_params_set_m(p: *mut QtParams, m: f64) -> QtStatus {
    guard(|| {
        let h = p.as_mut().ok_or_else(|| null("params"))?;
        h.inner = h.inner.clone().with_m_hat(m)?;
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_params_free(p: *mut QtParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_params_dim(p: *const QtParams) -> usize {
    p.as_ref().map_or(0, |h| h.inner.dim())
}

/// `lambda`, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_params_lambda(p: *const QtParams) -> f64 {
    p.as_ref().map_or(f64::NAN, |h| h.inner.lambda())
}

/// `alpha_hat = lambda * beta_hat`, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_params_alpha(p: *const QtParams) -> f64 {
    p.as_ref().map_or(f64::NAN, |h| h.inner.alpha_hat())
}

/// `M`, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_params_m(p: *const QtParams) -> f64 {
    p.as_ref().map_or(f64::NAN, |h| h.inner.m_hat())
}

/// `out = f(x)`; `x` and `out` hold `dim` values.
///
/// # Safety
/// `x` and `out` must be valid for `dim` values.
#[no_mangle]
pub unsafe extern "C" fn qt_f(p: *const QtParams, x: *const f64, dim: usize, out: *mut f64) -> QtStatus {
    guard(|| {
        let prm = params(p)?;
        let y = basemap::f(&point(x, dim)?, prm)?;
        write_point(slice_mut(out, dim, "out")?, &y);
        Ok(())
    })
}

/// Tray of `x`: `lateral_out` receives `dim - 1` indices, `sign_out` the
/// height sign `+1` or `-1`.
///
/// # Safety
/// `x` valid for `dim` values, `lateral_out` for `dim - 1`, `sign_out` for one.
#[no_mangle]
pub unsafe extern "C" fn qt_tray_of(x: *const f64, dim: usize, lateral_out: *mut i64, sign_out: *mut i8) -> QtStatus {
    guard(|| {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim).into());
        }
        let t = basemap::tray_of(&point(x, dim)?);
        slice_mut(lateral_out, dim - 1, "lateral_out")?.copy_from_slice(t.lateral());
        *sign_out.as_mut().ok_or_else(|| null("sign_out"))? = t.sign();
        Ok(())
    })
}

/// `out = Lambda^r(y)`, the inverse of `f` on the tray `r = (lateral, sign)`.
///
/// # Safety
/// `lateral` valid for `dim - 1` values; `y` and `out` for `dim`.
#[no_mangle]
pub unsafe extern "C" fn qt_lambda_branch(
    p: *const QtParams,
    lateral: *const i64,
    sign: i8,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> QtStatus {
    guard(|| {
        let prm = params(p)?;
        if dim < 2 {
            return Err(Error::InvalidDimension(dim).into());
        }
        let tray = TrayIndex::new(slice(lateral, dim - 1, "lateral")?.to_vec(), sign)?;
        let x = basemap::lambda_branch(&tray, &point(y, dim)?, prm)?;
        write_point(slice_mut(out, dim, "out")?, &x);
        Ok(())
    })
}

/// Forward orbit of `x` for up to `steps` steps.
///
/// `points_out` holds `capacity` values, at least `(steps + 1) * dim`;
/// `len_out` receives the number of points written and `escape_out` the
/// escape step, or `-1`.
///
/// # Safety
/// `x` valid for `dim` values, `points_out` for `capacity`, the others for one.
#[no_mangle]
pub unsafe extern "C" fn qt_iterate(
    p: *const QtParams,
    x: *const f64,
    dim: usize,
    steps: usize,
    height_cap: f64,
    points_out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
    escape_out: *mut i64,
) -> QtStatus {
    guard(|| {
        let prm = params(p)?;
        let needed = steps.checked_add(1).and_then(|n| n.checked_mul(dim)).unwrap_or(usize::MAX);
        check_capacity(capacity, needed, "points_out")?;
        let orbit = dynamics::iterate(&point(x, dim)?, steps, prm, height_cap)?;
        let buf = slice_mut(points_out, capacity, "points_out")?;
        for (chunk, q) in buf.chunks_mut(dim).zip(&orbit.points) {
            write_point(chunk, q);
        }
        *len_out.as_mut().ok_or_else(|| null("len_out"))? = orbit.len();
        *escape_out.as_mut().ok_or_else(|| null("escape_out"))? = match orbit.status {
            OrbitStatus::Escaped(k) => k as i64,
            _ => -1,
        };
        Ok(())
    })
}

/// Parses an itinerary from JSON, e.g.
/// `{"dim":2,"prefix":[],"cycle":[[[0],1]]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one write. The
/// handle is released with [`qt_itinerary_free`].
#[no_mangle]
pub unsafe extern "C" fn qt_itinerary_from_json(json: *const c_char, out: *mut *mut QtItinerary) -> QtStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(QtStatus::Parse, e.to_string()))?;
        let inner = Itinerary::from_json(text)?;
        *out = Box::into_raw(Box::new(QtItinerary { inner }));
        Ok(())
    })
}

/// # Safety
/// `it` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_itinerary_free(it: *mut QtItinerary) {
    if !it.is_null() {
        drop(Box::from_raw(it));
    }
}

/// Dimension of an itinerary, or 0 for a null handle.
///
/// # Safety
/// `it` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_itinerary_dim(it: *const QtItinerary) -> usize {
    it.as_ref().map_or(0, |h| h.inner.dim())
}

/// Endpoint estimate of the hair with itinerary `it`.
///
/// # Safety
/// `point_out` valid for `dim` values, `residual_out` and `depth_out` for one.
#[no_mangle]
pub unsafe extern "C" fn qt_endpoint(
    p: *const QtParams,
    it: *const QtItinerary,
    tol: f64,
    max_depth: usize,
    point_out: *mut f64,
    residual_out: *mut f64,
    depth_out: *mut usize,
) -> QtStatus {
    guard(|| {
        let (prm, it) = (params(p)?, itinerary(it)?);
        if it.dim() != prm.dim() {
            return Err(Error::DimensionMismatch {
                expected: prm.dim(),
                got: it.dim(),
            }
            .into());
        }
        let e = dynamics::endpoint(it, tol, max_depth, prm)?;
        write_point(slice_mut(point_out, prm.dim(), "point_out")?, &e.point);
        *residual_out.as_mut().ok_or_else(|| null("residual_out"))? = e.residual;
        *depth_out.as_mut().ok_or_else(|| null("depth_out"))? = e.depth;
        Ok(())
    })
}

/// Samples the hair at `n_samples` anchor heights in `[0, t_max]`.
///
/// `t_out` receives `n_samples` values; `points_out` holds `capacity`
/// values, at least `n_samples * dim`.
///
/// # Safety
/// `t_out` valid for `n_samples` values, `points_out` for `capacity`.
#[no_mangle]
pub unsafe extern "C" fn qt_hair_trace(
    p: *const QtParams,
    it: *const QtItinerary,
    depth: usize,
    t_max: f64,
    n_samples: usize,
    t_out: *mut f64,
    points_out: *mut f64,
    capacity: usize,
) -> QtStatus {
    guard(|| {
        let (prm, it) = (params(p)?, itinerary(it)?);
        if it.dim() != prm.dim() {
            return Err(Error::DimensionMismatch {
                expected: prm.dim(),
                got: it.dim(),
            }
            .into());
        }
        check_capacity(capacity, n_samples.saturating_mul(prm.dim()), "points_out")?;
        let hair = dynamics::hair_trace(it, depth, t_max, n_samples, prm)?;
        let ts = slice_mut(t_out, n_samples, "t_out")?;
        let pts = slice_mut(points_out, capacity, "points_out")?;
        for ((t, chunk), s) in ts.iter_mut().zip(pts.chunks_mut(prm.dim())).zip(&hair.samples) {
            *t = s.t;
            write_point(chunk, &s.point);
        }
        Ok(())
    })
}

/// Renders the `(x_1, x_d)` slice (other coordinates 0) and writes a binary
/// PPM. `window` holds `u_min, u_max, v_min, v_max`.
///
/// # Safety
/// `window` valid for 4 values; `path` a NUL-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn qt_render_ppm(
    p: *const QtParams,
    window: *const f64,
    width: usize,
    height: usize,
    max_iter: usize,
    height_cap: f64,
    path: *const c_char,
) -> QtStatus {
    guard(|| {
        let prm = params(p)?;
        let w = slice(window, 4, "window")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Fail(QtStatus::Parse, e.to_string()))?;
        let spec = SliceSpec::height_slice(prm.dim(), (w[0], w[1], w[2], w[3]), (width, height))?;
        let grid = render::render_slice(&spec, prm, max_iter, height_cap)?;
        render::write_ppm(&grid, Palette::Hue, std::path::Path::new(path))?;
        Ok(())
    })
}
