//! C ABI over `sigmak-core`.
//!
//! Every fallible function returns a [`SigmakStatus`]; on failure the message is
//! available from [`sigmak_last_error`] on the same thread. Handles are opaque and
//! must be released with their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{self, AssertUnwindSafe};

use sigmak_core::flow::{self, Direction, IntegratorConfig, OrbitClass, OrbitTrace, Termination};
use sigmak_core::geometry::pansu_profile;
use sigmak_core::model::{critical_k, l_of_k, vector_field};
use sigmak_core::{Error, PhasePoint, SigmaParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmakStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Singularity = 3,
    UndefinedCurvature = 4,
    Integration = 5,
    Pole = 6,
    Region = 7,
    Classification = 8,
    Degenerate = 9,
    Inapplicable = 10,
    IndexOutOfRange = 11,
    Panic = 12,
}

impl From<&Error> for SigmakStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => SigmakStatus::Domain,
            Error::Singularity { .. } => SigmakStatus::Singularity,
            Error::UndefinedCurvature { .. } => SigmakStatus::UndefinedCurvature,
            Error::Integration { .. } => SigmakStatus::Integration,
            Error::Pole { .. } => SigmakStatus::Pole,
            Error::Region { .. } => SigmakStatus::Region,
            Error::Classification(_) => SigmakStatus::Classification,
            Error::Degenerate(_) => SigmakStatus::Degenerate,
            Error::Inapplicable(_) => SigmakStatus::Inapplicable,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmakDirection {
    Forward = 0,
    Backward = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmakTermination {
    SMax = 0,
    BoxEscape = 1,
    BlowUp = 2,
    AlphaAxis = 3,
    SectionLimit = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmakClassKind {
    Stationary = 0,
    ConstantKLine = 1,
    Periodic = 2,
    ArcToAlphaAxis = 3,
    ArcBiInfinite = 4,
    HomoclinicToOrigin = 5,
    Truncated = 6,
}

/// Integrator settings; see [`sigmak_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SigmakConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub s_max: f64,
    pub box_bound: f64,
    pub blowup_threshold: f64,
    pub section_tol: f64,
}

impl From<SigmakConfig> for IntegratorConfig {
    fn from(c: SigmakConfig) -> Self {
        IntegratorConfig {
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            max_step: c.max_step,
            s_max: c.s_max,
            box_bound: c.box_bound,
            blowup_threshold: c.blowup_threshold,
            section_tol: c.section_tol,
        }
    }
}

/// Critical values; absent roots are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SigmakCriticalValues {
    pub k_c1_pos: f64,
    pub k_c1_neg: f64,
    pub k_c2_pos: f64,
    pub k_c2_neg: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SigmakSample {
    pub s: f64,
    pub alpha: f64,
    pub k: f64,
    /// Height of the leaf center, zero at the start.
    pub t: f64,
}

/// Orbit class with its payload. Fields that do not apply to `kind` are NaN.
///
/// `Stationary` fills `alpha_end` and `k_min = k_max`; `ConstantKLine` fills `k_min = k_max`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SigmakClass {
    pub kind: SigmakClassKind,
    pub period: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub alpha_end: f64,
}

/// Opaque parameter handle.
pub struct SigmakParams(SigmaParams);

/// Opaque trace handle.
pub struct SigmakTrace(OrbitTrace);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `body`, translating errors and panics into a status.
fn guard<F>(body: F) -> SigmakStatus
where
    F: FnOnce() -> Result<(), SigmakStatus>,
{
    set_last_error("");
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SigmakStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            SigmakStatus::Panic
        }
    }
}

fn fail(e: Error) -> SigmakStatus {
    set_last_error(&e.to_string());
    SigmakStatus::from(&e)
}

fn null(what: &str) -> SigmakStatus {
    set_last_error(&format!("{what} is null"));
    SigmakStatus::NullPointer
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, SigmakStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), SigmakStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn config(cfg: *const SigmakConfig) -> IntegratorConfig {
    cfg.as_ref().map_or_else(IntegratorConfig::default, |c| (*c).into())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sigmak_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn sigmak_config_default() -> SigmakConfig {
    let c = IntegratorConfig::default();
    SigmakConfig {
        rel_tol: c.rel_tol,
        abs_tol: c.abs_tol,
        max_step: c.max_step,
        s_max: c.s_max,
        box_bound: c.box_bound,
        blowup_threshold: c.blowup_threshold,
        section_tol: c.section_tol,
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_params_new(n: u32, i: u32, c: f64, out: *mut *mut SigmakParams) -> SigmakStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = SigmaParams::new(n, i, c).map_err(fail)?;
        out.write(Box::into_raw(Box::new(SigmakParams(p))));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`sigmak_params_new`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sigmak_params_free(params: *mut SigmakParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_l_of_k(params: *const SigmakParams, k: f64, out: *mut f64) -> SigmakStatus {
    guard(|| {
        let p = get(params, "params")?;
        let l = l_of_k(&p.0, k).map_err(fail)?;
        put(out, l, "out")
    })
}

/// # Safety
/// `params` must be a live handle; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_vector_field(
    params: *const SigmakParams,
    alpha: f64,
    k: f64,
    out_dk: *mut f64,
    out_dalpha: *mut f64,
) -> SigmakStatus {
    guard(|| {
        let p = get(params, "params")?;
        let pt = PhasePoint::new(alpha, k).map_err(fail)?;
        let (dk, da) = vector_field(&p.0, pt).map_err(fail)?;
        put(out_dk, dk, "out_dk")?;
        put(out_dalpha, da, "out_dalpha")
    })
}

/// # Safety
/// `params` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_critical_k(params: *const SigmakParams, out: *mut SigmakCriticalValues) -> SigmakStatus {
    guard(|| {
        let p = get(params, "params")?;
        let cv = critical_k(&p.0);
        let v = SigmakCriticalValues {
            k_c1_pos: cv.k_c1_pos.unwrap_or(f64::NAN),
            k_c1_neg: cv.k_c1_neg.unwrap_or(f64::NAN),
            k_c2_pos: cv.k_c2_pos.unwrap_or(f64::NAN),
            k_c2_neg: cv.k_c2_neg.unwrap_or(f64::NAN),
        };
        put(out, v, "out")
    })
}

/// Integrates from `(alpha0, k0)`. A null `cfg` selects the defaults.
///
/// # Safety
/// `params` must be a live handle, `cfg` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_integrate(
    params: *const SigmakParams,
    alpha0: f64,
    k0: f64,
    cfg: *const SigmakConfig,
    direction: SigmakDirection,
    out: *mut *mut SigmakTrace,
) -> SigmakStatus {
    guard(|| {
        let p = get(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let start = PhasePoint::new(alpha0, k0).map_err(fail)?;
        let dir = match direction {
            SigmakDirection::Forward => Direction::Forward,
            SigmakDirection::Backward => Direction::Backward,
        };
        let trace = flow::integrate(&p.0, start, &config(cfg), dir).map_err(fail)?;
        out.write(Box::into_raw(Box::new(SigmakTrace(trace))));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sigmak_trace_len(trace: *const SigmakTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.samples.len())
}

/// # Safety
/// `trace` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_trace_sample(trace: *const SigmakTrace, index: usize, out: *mut SigmakSample) -> SigmakStatus {
    guard(|| {
        let t = get(trace, "trace")?;
        let Some(s) = t.0.samples.get(index) else {
            set_last_error(&format!("index {index} out of range (len {})", t.0.samples.len()));
            return Err(SigmakStatus::IndexOutOfRange);
        };
        put(out, SigmakSample { s: s.s, alpha: s.alpha, k: s.k, t: s.t }, "out")
    })
}

/// # Safety
/// `trace` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_trace_termination(trace: *const SigmakTrace, out: *mut SigmakTermination) -> SigmakStatus {
    guard(|| {
        let t = get(trace, "trace")?;
        let term = match t.0.termination {
            Termination::SMax => SigmakTermination::SMax,
            Termination::BoxEscape => SigmakTermination::BoxEscape,
            Termination::BlowUp => SigmakTermination::BlowUp,
            Termination::AlphaAxis => SigmakTermination::AlphaAxis,
            Termination::SectionLimit => SigmakTermination::SectionLimit,
        };
        put(out, term, "out")
    })
}

/// # Safety
/// `trace` must come from [`sigmak_integrate`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sigmak_trace_free(trace: *mut SigmakTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

fn class_to_c(class: &OrbitClass) -> SigmakClass {
    let mut c = SigmakClass {
        kind: SigmakClassKind::Truncated,
        period: f64::NAN,
        k_min: f64::NAN,
        k_max: f64::NAN,
        s_minus: f64::NAN,
        s_plus: f64::NAN,
        alpha_minus: f64::NAN,
        alpha_plus: f64::NAN,
        alpha_end: f64::NAN,
    };
    match *class {
        OrbitClass::Stationary { alpha, k } => {
            c.kind = SigmakClassKind::Stationary;
            c.alpha_end = alpha;
            (c.k_min, c.k_max) = (k, k);
        }
        OrbitClass::ConstantKLine { k } => {
            c.kind = SigmakClassKind::ConstantKLine;
            (c.k_min, c.k_max) = (k, k);
        }
        OrbitClass::Periodic { period, k_min, k_max } => {
            c.kind = SigmakClassKind::Periodic;
            (c.period, c.k_min, c.k_max) = (period, k_min, k_max);
        }
        OrbitClass::ArcToAlphaAxis { s_minus, s_plus, alpha_minus, alpha_plus, alpha_end } => {
            c.kind = SigmakClassKind::ArcToAlphaAxis;
            (c.s_minus, c.s_plus, c.alpha_minus, c.alpha_plus, c.alpha_end) =
                (s_minus, s_plus, alpha_minus, alpha_plus, alpha_end);
        }
        OrbitClass::ArcBiInfinite { alpha_limit, alpha_minus, alpha_plus, s_minus, s_plus } => {
            c.kind = SigmakClassKind::ArcBiInfinite;
            (c.s_minus, c.s_plus, c.alpha_minus, c.alpha_plus, c.alpha_end) =
                (s_minus, s_plus, alpha_minus, alpha_plus, alpha_limit);
        }
        OrbitClass::HomoclinicToOrigin => c.kind = SigmakClassKind::HomoclinicToOrigin,
        OrbitClass::Truncated { ref reason } => set_last_error(reason),
    }
    c
}

/// Classifies the orbit through `(alpha0, k0)`. A null `cfg` selects the defaults.
/// For a `Truncated` result the reason is left in [`sigmak_last_error`].
///
/// # Safety
/// `params` must be a live handle, `cfg` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_classify(
    params: *const SigmakParams,
    alpha0: f64,
    k0: f64,
    cfg: *const SigmakConfig,
    out: *mut SigmakClass,
) -> SigmakStatus {
    let mut class = None;
    let status = guard(|| {
        let p = get(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let start = PhasePoint::new(alpha0, k0).map_err(fail)?;
        class = Some(flow::classify_orbit(&p.0, start, &config(cfg)).map_err(fail)?);
        Ok(())
    });
    if let Some(class) = class {
        out.write(class_to_c(&class));
    }
    status
}

/// Pansu sphere profile `f(|z|)` for `0 <= |z| <= 1/lambda`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigmak_pansu_profile(lambda: f64, z_abs: f64, out: *mut f64) -> SigmakStatus {
    guard(|| {
        let f = pansu_profile(lambda, z_abs).map_err(fail)?;
        put(out, f, "out")
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sigmak_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
