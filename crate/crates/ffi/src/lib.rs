//! C ABI over the skewdyn laboratory.
//!
//! Maps and skew-products are opaque heap handles created by `sd_*_new`
//! and released by the matching `sd_*_free`. Every fallible function
//! returns an [`SdStatus`]; on failure a description is stored per thread
//! and can be copied out with [`sd_last_error_message`]. Panics never cross
//! the boundary: they are caught and reported as `SD_STATUS_PANIC`.
//!
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skewdyn::acim::{empirical_measure, System};
use skewdyn::branch::track_branch;
use skewdyn::config::parse_config;
use skewdyn::expansion::{ftle_fiber, ftle_full};
use skewdyn::hyptimes::{pliss_times, PlissQuery};
use skewdyn::maps::{Family, IntervalDomain, IntervalMap, MapSequence, SkewPoint, SkewProduct};
use skewdyn::runner::{run_experiment, RunError, Status};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The computation itself failed (critical orbit, terminated branch, ...).
    Computation = 3,
    /// A configuration document was rejected.
    Config = 4,
    Io = 5,
    /// A caller-provided buffer is too small; the required size is reported.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque handle to an interval map.
pub struct SdMap {
    map: IntervalMap,
}

/// Opaque handle to a skew-product.
pub struct SdSkew {
    skew: SkewProduct,
}

/// Summary of a monotone branch T_n(x).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdBranch {
    pub t_lo: f64,
    pub t_hi: f64,
    pub img_lo: f64,
    pub img_hi: f64,
    /// fⁿ(x).
    pub image: f64,
    /// r_n(x).
    pub r_n: f64,
    pub depth: usize,
    /// +1 when fⁿ is increasing on the branch, -1 otherwise.
    pub orientation: i8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("NUL bytes were replaced")));
}

fn fail(status: SdStatus, msg: impl Into<String>) -> SdStatus {
    set_error(msg);
    status
}

fn lib_error(e: skewdyn::Error) -> SdStatus {
    let status = match e {
        skewdyn::Error::Precondition(_) | skewdyn::Error::InvalidDomain { .. } | skewdyn::Error::InvalidConstants { .. } => {
            SdStatus::InvalidArgument
        }
        skewdyn::Error::Io(_) => SdStatus::Io,
        _ => SdStatus::Computation,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into `SD_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> Result<(), SdStatus>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SdStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), SdStatus> {
    if p.is_null() {
        Err(fail(SdStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SdStatus> {
    non_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(SdStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

/// Version string of the library, statically allocated.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated
/// and always NUL-terminated when `len > 0`). Returns the full message
/// length including the terminator, or 0 when no error was recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Creates a map from the built-in catalogue: "logistic", "tent",
/// "doubling", "two_well", "identity" or "quadratic" (a − x² on its
/// standard symmetric domain; `a` is ignored by the other families).
///
/// # Safety
/// `family` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_map_new(family: *const c_char, a: f64, out: *mut *mut SdMap) -> SdStatus {
    guard(|| {
        let name = str_arg(family, "family")?;
        non_null(out, "out")?;
        let fam = match name {
            "logistic" => Family::Logistic,
            "tent" => Family::Tent,
            "doubling" => Family::Doubling,
            "two_well" => Family::TwoWell,
            "identity" => Family::Identity,
            "quadratic" => Family::Quadratic { a },
            other => return Err(fail(SdStatus::InvalidArgument, format!("unknown family {other:?}"))),
        };
        let map = match fam {
            Family::Identity => IntervalMap::new(fam, IntervalDomain::unit()),
            Family::Quadratic { a } => IntervalDomain::quadratic_symmetric(a).and_then(|d| IntervalMap::new(fam, d)),
            _ => IntervalMap::standard(fam),
        }
        .map_err(lib_error)?;
        *out = Box::into_raw(Box::new(SdMap { map }));
        Ok(())
    })
}

/// Releases a map. Null is ignored.
///
/// # Safety
/// `map` must be null or a handle from `sd_map_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_map_free(map: *mut SdMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_map_eval(map: *const SdMap, x: f64, out: *mut f64) -> SdStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(out, "out")?;
        *out = (*map).map.eval(x);
        Ok(())
    })
}

/// First derivative f'(x).
///
/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_map_derivative(map: *const SdMap, x: f64, out: *mut f64) -> SdStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(out, "out")?;
        *out = (*map).map.d1(x);
        Ok(())
    })
}

/// # Safety
/// `map` must be a live handle; `lo` and `hi` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sd_map_domain(map: *const SdMap, lo: *mut f64, hi: *mut f64) -> SdStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(lo, "lo")?;
        non_null(hi, "hi")?;
        let d = (*map).map.domain();
        *lo = d.lo;
        *hi = d.hi;
        Ok(())
    })
}

/// Writes the critical points into `buf` and their number into `count`.
/// When `cap` is too small nothing is copied, `count` still receives the
/// required size and `SD_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `map` must be a live handle, `buf` must hold `cap` doubles (or be null
/// when `cap` is 0) and `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sd_map_critical_points(
    map: *const SdMap,
    buf: *mut f64,
    cap: usize,
    count: *mut usize,
) -> SdStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(count, "count")?;
        let crit = (*map).map.critical_points();
        *count = crit.len();
        if crit.len() > cap {
            return Err(fail(SdStatus::BufferTooSmall, format!("{} critical points, capacity {cap}", crit.len())));
        }
        if !crit.is_empty() {
            non_null(buf, "buf")?;
            ptr::copy_nonoverlapping(crit.as_ptr(), buf, crit.len());
        }
        Ok(())
    })
}

/// Finite-time Lyapunov exponent (1/n) Σ log|f'(fʲx)| over n steps.
///
/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_ftle(map: *const SdMap, x: f64, n: usize, out: *mut f64) -> SdStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(out, "out")?;
        let seq = MapSequence::constant((*map).map.clone());
        *out = ftle_fiber(&seq, x, n).map_err(lib_error)?;
        Ok(())
    })
}

/// Maximal monotone branch of fⁿ around x.
///
/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_track_branch(map: *const SdMap, x: f64, n: usize, out: *mut SdBranch) -> SdStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(out, "out")?;
        let seq = MapSequence::constant((*map).map.clone());
        let b = track_branch(&seq, x, n).map_err(lib_error)?;
        *out = SdBranch {
            t_lo: b.t_lo,
            t_hi: b.t_hi,
            img_lo: b.img_lo,
            img_hi: b.img_hi,
            image: b.image,
            r_n: b.r(b.n).unwrap_or(0.0),
            depth: b.n,
            orientation: b.orientation,
        };
        Ok(())
    })
}

/// Histogram weights of the averaged push-forward measure on `bins`
/// equal bins of the map's domain, written to `weights[0..bins]`.
///
/// # Safety
/// `map` must be a live handle and `weights` must hold `bins` doubles.
#[no_mangle]
pub unsafe extern "C" fn sd_empirical_measure(
    map: *const SdMap,
    samples: usize,
    n: usize,
    bins: usize,
    seed: u64,
    weights: *mut f64,
) -> SdStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(weights, "weights")?;
        if bins == 0 {
            return Err(fail(SdStatus::InvalidArgument, "bins must be positive"));
        }
        let system = System::Interval((*map).map.clone());
        let m = empirical_measure(&system, samples, n, system.grid(bins), seed).map_err(lib_error)?;
        ptr::copy_nonoverlapping(m.weights.as_ptr(), weights, bins);
        Ok(())
    })
}

/// Viana skew-product with base θ ↦ dθ mod 1 and fibers
/// a0 + α sin 2πθ − x², on the default fiber domain.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_skew_viana_new(d: u32, a0: f64, alpha: f64, out: *mut *mut SdSkew) -> SdStatus {
    guard(|| {
        non_null(out, "out")?;
        let domain = SkewProduct::viana_default().fiber_domain();
        let skew = SkewProduct::viana(d, a0, alpha, domain).map_err(lib_error)?;
        *out = Box::into_raw(Box::new(SdSkew { skew }));
        Ok(())
    })
}

/// The default Viana skew-product (d = 16, a0 = 1.7, α = 0.05).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_skew_viana_default(out: *mut *mut SdSkew) -> SdStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(SdSkew { skew: SkewProduct::viana_default() }));
        Ok(())
    })
}

/// Releases a skew-product. Null is ignored.
///
/// # Safety
/// `skew` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_skew_free(skew: *mut SdSkew) {
    if !skew.is_null() {
        drop(Box::from_raw(skew));
    }
}

/// One forward step (θ, x) ↦ (g(θ), f(θ, x)).
///
/// # Safety
/// `skew` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sd_skew_step(
    skew: *const SdSkew,
    theta: f64,
    x: f64,
    theta_out: *mut f64,
    x_out: *mut f64,
) -> SdStatus {
    guard(|| {
        non_null(skew, "skew")?;
        non_null(theta_out, "theta_out")?;
        non_null(x_out, "x_out")?;
        let z = (*skew).skew.step(SkewPoint::new(theta, x));
        *theta_out = z.theta;
        *x_out = z.x;
        Ok(())
    })
}

/// Full-derivative exponent (1/n) log of the co-norm of Dφⁿ(θ, x).
///
/// # Safety
/// `skew` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_ftle_full(skew: *const SdSkew, theta: f64, x: f64, n: usize, out: *mut f64) -> SdStatus {
    guard(|| {
        non_null(skew, "skew")?;
        non_null(out, "out")?;
        *out = ftle_full(&(*skew).skew, SkewPoint::new(theta, x), n).map_err(lib_error)?;
        Ok(())
    })
}

/// Pliss times of `values[0..len]` for constants c1 < c2 ≤ a. The 1-based
/// indices go to `indices` (capacity `cap`), their number to `count` and
/// their density to `density`. With too small a buffer `count` receives
/// the required size and `SD_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `values` must hold `len` doubles, `indices` `cap` entries, and `count`
/// and `density` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sd_pliss_times(
    values: *const f64,
    len: usize,
    c1: f64,
    c2: f64,
    a: f64,
    indices: *mut usize,
    cap: usize,
    count: *mut usize,
    density: *mut f64,
) -> SdStatus {
    guard(|| {
        non_null(count, "count")?;
        non_null(density, "density")?;
        let values = if len == 0 {
            Vec::new()
        } else {
            non_null(values, "values")?;
            std::slice::from_raw_parts(values, len).to_vec()
        };
        let t = pliss_times(&PlissQuery { values, c1, c2, a }).map_err(lib_error)?;
        *count = t.indices.len();
        if t.indices.len() > cap {
            return Err(fail(SdStatus::BufferTooSmall, format!("{} Pliss times, capacity {cap}", t.indices.len())));
        }
        if !t.indices.is_empty() {
            non_null(indices, "indices")?;
            ptr::copy_nonoverlapping(t.indices.as_ptr(), indices, t.indices.len());
        }
        *density = t.density;
        Ok(())
    })
}

/// Parses a TOML experiment configuration, runs it and returns the
/// manifest as a JSON string through `manifest_json` (release it with
/// [`sd_string_free`]). A failed experiment still yields its manifest
/// together with `SD_STATUS_COMPUTATION`.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `manifest_json` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_run_config(config_toml: *const c_char, manifest_json: *mut *mut c_char) -> SdStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        non_null(manifest_json, "manifest_json")?;
        let cfg = parse_config(text).map_err(|e| fail(SdStatus::Config, e.to_string()))?;
        let manifest = run_experiment(&cfg).map_err(|e| match e {
            RunError::Config(c) => fail(SdStatus::Config, c.to_string()),
            io @ RunError::Io { .. } => fail(SdStatus::Io, io.to_string()),
        })?;
        let json = serde_json::to_string(&manifest).expect("manifest serializes");
        *manifest_json = CString::new(json).expect("JSON has no NUL bytes").into_raw();
        match manifest.status {
            Status::Succeeded => Ok(()),
            Status::Failed => Err(fail(SdStatus::Computation, manifest.error.unwrap_or_default())),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
