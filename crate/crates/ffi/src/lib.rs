//! C ABI for the curved-tube solver.
//!
//! Every entry point returns a `CtStatus`. On failure the message is kept per
//! thread and can be copied out with `ct_last_error_message`. Tubes are opaque
//! handles owned by the caller and released with `ct_tube_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use curved_tube::certificate::{certify, Verdict, DEFAULT_SCHEDULE};
use curved_tube::config::RunConfig;
use curved_tube::families::{profile_from_specs, CurvatureSpec};
use curved_tube::frame::{solve_frame_ode, InitialRotation};
use curved_tube::operator::{TruncatedGrid, Variant};
use curved_tube::run::{build_geometry, exit_code, run, RunOptions};
use curved_tube::section::CrossSection;
use curved_tube::spectra::{assemble, lowest_eigenpairs};
use curved_tube::tube::{build_tube, TubeGeometry};
use curved_tube::TubeError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Config = 3,
    AssumptionViolation = 4,
    Geometry = 5,
    Numeric = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtCurvatureKind {
    Zero = 0,
    /// p0 = value
    Constant = 1,
    /// p0 = height, p1 = width
    Bump = 2,
    /// p0 = amplitude, p1 = sigma
    Gaussian = 3,
    /// p0 = height, p1 = half width
    Hat = 4,
    /// p0 = amplitude
    SignChanging = 5,
    /// p0 = value, p1 = arc length
    Arc = 6,
}

/// One curvature function κᵢ.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CtCurvature {
    pub kind: CtCurvatureKind,
    pub p0: f64,
    pub p1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtSectionKind {
    /// p0 = half width (d = 2)
    Interval = 0,
    /// p0 × p1 (d = 3)
    Rectangle = 1,
    /// p0 = radius (d = 3)
    Disk = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CtSection {
    pub kind: CtSectionKind,
    pub p0: f64,
    pub p1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtVariant {
    Form = 0,
    Schroedinger = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtVerdict {
    Certified = 0,
    NotCertified = 1,
    Indeterminate = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtTubeInfo {
    pub dimension: usize,
    pub radius: f64,
    pub kappa1_sup: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    /// Lowest Dirichlet eigenvalue of the cross-section.
    pub mu1: f64,
    /// The frame is tabulated on [frame_lo, frame_hi].
    pub frame_lo: f64,
    pub frame_hi: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CtCertificate {
    pub verdict: CtVerdict,
    /// First n with Q₁ < 0, or 0.
    pub certified_at: u64,
    /// Last n evaluated.
    pub n: u64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub epsilon: f64,
    pub min_value: f64,
}

/// Opaque tube handle.
pub struct CtTube {
    inner: TubeGeometry,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(CtStatus, String);

impl From<TubeError> for Failure {
    fn from(e: TubeError) -> Self {
        use TubeError::*;
        let status = match &e {
            Config { .. } => CtStatus::Config,
            AssumptionViolation { .. } => CtStatus::AssumptionViolation,
            Precondition(_) | Arity { .. } | OutOfRange { .. } => CtStatus::InvalidArgument,
            DegenerateCurve { .. }
            | FrameDegeneracy { .. }
            | FrameContinuity { .. }
            | NotEmbeddable
            | Smoothness(_)
            | Topology(_)
            | StraightTube
            | ScanResolution(_)
            | NonDecaying { .. } => CtStatus::Geometry,
            ToleranceNotMet(_) | Evaluation(_) | IntegratorFailure { .. } | Numeric(_) | Solver(_) => CtStatus::Numeric,
            Io(_) => CtStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: CtStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CtStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let what = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(fail(CtStatus::Panic, format!("panic: {what}")))
    });
    match outcome {
        Ok(()) => {
            set_error(String::new());
            CtStatus::Ok
        }
        Err(Failure(status, msg)) => {
            set_error(msg);
            status
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(CtStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CtStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn tube_arg<'a>(t: *const CtTube) -> Result<&'a TubeGeometry, Failure> {
    t.as_ref().map(|t| &t.inner).ok_or_else(|| fail(CtStatus::NullArgument, "tube handle is null"))
}

fn spec(c: &CtCurvature) -> CurvatureSpec {
    match c.kind {
        CtCurvatureKind::Zero => CurvatureSpec::Zero,
        CtCurvatureKind::Constant => CurvatureSpec::Constant { value: c.p0 },
        CtCurvatureKind::Bump => CurvatureSpec::Bump { height: c.p0, width: c.p1 },
        CtCurvatureKind::Gaussian => CurvatureSpec::Gaussian { amplitude: c.p0, sigma: c.p1 },
        CtCurvatureKind::Hat => CurvatureSpec::Hat { height: c.p0, half_width: c.p1 },
        CtCurvatureKind::SignChanging => CurvatureSpec::SignChanging { amplitude: c.p0 },
        CtCurvatureKind::Arc => CurvatureSpec::Arc { value: c.p0, length: c.p1 },
    }
}

fn cross_section(s: &CtSection) -> Result<CrossSection, Failure> {
    Ok(match s.kind {
        CtSectionKind::Interval => CrossSection::interval(s.p0)?,
        CtSectionKind::Rectangle => CrossSection::rectangle(s.p0, s.p1)?,
        CtSectionKind::Disk => CrossSection::disk(s.p0)?,
    })
}

fn emit(out: *mut *mut CtTube, tube: TubeGeometry) -> Result<(), Failure> {
    unsafe { *out = Box::into_raw(Box::new(CtTube { inner: tube })) };
    Ok(())
}

/// Tube in dimension `count + 1` with curvatures κ₁..κ_count, the frame
/// tabulated on [−reach, reach] from the identity at s = 0.
///
/// # Safety
/// `curvatures` must point to `count` elements; `section` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_tube_new(
    curvatures: *const CtCurvature,
    count: usize,
    section: *const CtSection,
    reach: f64,
    out: *mut *mut CtTube,
) -> CtStatus {
    guard(|| {
        if curvatures.is_null() || section.is_null() || out.is_null() {
            return Err(fail(CtStatus::NullArgument, "curvatures, section and out must be non-null"));
        }
        *out = std::ptr::null_mut();
        if count == 0 {
            return Err(fail(CtStatus::InvalidArgument, "at least one curvature is required"));
        }
        if !(reach > 0.0 && reach.is_finite()) {
            return Err(fail(CtStatus::InvalidArgument, format!("reach must be positive, got {reach}")));
        }
        let specs: Vec<CurvatureSpec> = std::slice::from_raw_parts(curvatures, count).iter().map(spec).collect();
        let profile = profile_from_specs(&specs)?;
        let sec = cross_section(&*section)?;
        if sec.dim() != count {
            return Err(fail(
                CtStatus::InvalidArgument,
                format!("a {}-dimensional section does not fit {count} curvatures", sec.dim()),
            ));
        }
        let frame = solve_frame_ode(&profile, (-reach, reach), 0.01, &InitialRotation::identity(count + 1))?;
        emit(out, build_tube(profile, frame, sec)?)
    })
}

/// Planar strip of half-width `half_width` about a curve of curvature `kappa`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ct_tube_new_strip(kappa: CtCurvature, half_width: f64, out: *mut *mut CtTube) -> CtStatus {
    let sec = CtSection { kind: CtSectionKind::Interval, p0: half_width, p1: 0.0 };
    ct_tube_new(&kappa, 1, &sec, 1.0, out)
}

/// Tube described by a run config in TOML. Relative paths resolve against
/// `base_dir`, or the working directory when it is null.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ct_tube_from_config(
    config_toml: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut CtTube,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(CtStatus::NullArgument, "out is null"));
        }
        *out = std::ptr::null_mut();
        let text = str_arg(config_toml, "config")?;
        let base = if base_dir.is_null() { PathBuf::from(".") } else { PathBuf::from(str_arg(base_dir, "base_dir")?) };
        let cfg = RunConfig::parse(text)?;
        emit(out, build_geometry(&cfg, &base)?)
    })
}

/// # Safety
/// `tube` must come from a constructor of this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ct_tube_free(tube: *mut CtTube) {
    if !tube.is_null() {
        drop(Box::from_raw(tube));
    }
}

/// # Safety
/// `tube` and `info` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ct_tube_info(tube: *const CtTube, info: *mut CtTubeInfo) -> CtStatus {
    guard(|| {
        let t = tube_arg(tube)?;
        let info = info.as_mut().ok_or_else(|| fail(CtStatus::NullArgument, "info is null"))?;
        let (lo, hi) = t.frame().range();
        *info = CtTubeInfo {
            dimension: t.dim(),
            radius: t.section().radius(),
            kappa1_sup: t.profile().kappa1_sup(),
            c_minus: t.c_minus(),
            c_plus: t.c_plus(),
            mu1: t.section().mu1(),
            frame_lo: lo,
            frame_hi: hi,
        };
        Ok(())
    })
}

/// The `k` lowest eigenvalues on (−L, L) × ω at spacings `ds`, `du`, written to
/// `values` (capacity `capacity`). `written` receives the count.
///
/// # Safety
/// `values` must hold `capacity` doubles; `tube` and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_lowest_eigenvalues(
    tube: *const CtTube,
    half_length: f64,
    ds: f64,
    du: f64,
    variant: CtVariant,
    k: usize,
    seed: u64,
    values: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CtStatus {
    guard(|| {
        let t = tube_arg(tube)?;
        if values.is_null() || written.is_null() {
            return Err(fail(CtStatus::NullArgument, "values and written must be non-null"));
        }
        *written = 0;
        if k == 0 {
            return Err(fail(CtStatus::InvalidArgument, "k must be positive"));
        }
        if capacity < k {
            return Err(fail(CtStatus::BufferTooSmall, format!("room for {capacity} values, {k} requested")));
        }
        let grid = TruncatedGrid::new(half_length, ds, t.section(), du)?;
        let v = match variant {
            CtVariant::Form => Variant::Form,
            CtVariant::Schroedinger => Variant::Schroedinger,
        };
        let op = assemble(t, &grid, v)?;
        let frag = lowest_eigenpairs(&op, k, 1e-10, seed)?;
        let out = std::slice::from_raw_parts_mut(values, capacity);
        out[..frag.values.len()].copy_from_slice(&frag.values);
        *written = frag.values.len();
        Ok(())
    })
}

/// Walk the certificate schedule (the default one when `schedule` is null)
/// and report the last evaluated n.
///
/// # Safety
/// `schedule` must hold `len` values when non-null; `tube` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_certify(tube: *const CtTube, schedule: *const u64, len: usize, out: *mut CtCertificate) -> CtStatus {
    guard(|| {
        let t = tube_arg(tube)?;
        let out = out.as_mut().ok_or_else(|| fail(CtStatus::NullArgument, "out is null"))?;
        let sched: &[u64] = if schedule.is_null() { &DEFAULT_SCHEDULE } else { std::slice::from_raw_parts(schedule, len) };
        let c = certify(t, sched)?;
        let last = c.trace.last().expect("certify evaluates at least one n");
        *out = CtCertificate {
            verdict: match c.verdict {
                Verdict::Certified => CtVerdict::Certified,
                Verdict::NotCertified => CtVerdict::NotCertified,
                Verdict::Indeterminate => CtVerdict::Indeterminate,
            },
            certified_at: c.certified_at.unwrap_or(0),
            n: last.n,
            q0: last.q0,
            q1: last.q1,
            q2: last.q2,
            epsilon: last.epsilon,
            min_value: last.min_value,
        };
        Ok(())
    })
}

/// Run a config file like `curved-tube run`. `out_dir` may be null for the
/// config's own output directory. `exit_status`, when non-null, receives the
/// CLI exit status (0, 2, 3 or 4).
///
/// # Safety
/// String arguments must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ct_run_config_file(path: *const c_char, out_dir: *const c_char, exit_status: *mut i32) -> CtStatus {
    let mut code = 4;
    let status = guard(|| {
        let path = Path::new(str_arg(path, "path")?);
        let out = if out_dir.is_null() { None } else { Some(PathBuf::from(str_arg(out_dir, "out_dir")?)) };
        let result = RunConfig::load(path).and_then(|cfg| {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            run(&cfg, &base, &RunOptions { out, ..Default::default() })
        });
        match result {
            Ok(_) => {
                code = 0;
                Ok(())
            }
            Err(e) => {
                code = exit_code(&e);
                Err(e.into())
            }
        }
    });
    if let Some(s) = exit_status.as_mut() {
        *s = code;
    }
    status
}

/// Copy the calling thread's last error message, NUL-terminated and truncated
/// to `capacity`. Returns the full length including the NUL; 1 means no error.
///
/// # Safety
/// `buf` must hold `capacity` bytes, or be null with `capacity` 0.
#[no_mangle]
pub unsafe extern "C" fn ct_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn ct_status_name(status: CtStatus) -> *const c_char {
    let s: &'static CStr = match status {
        CtStatus::Ok => c"ok",
        CtStatus::NullArgument => c"null argument",
        CtStatus::InvalidArgument => c"invalid argument",
        CtStatus::Config => c"config error",
        CtStatus::AssumptionViolation => c"assumption violation",
        CtStatus::Geometry => c"geometry error",
        CtStatus::Numeric => c"numeric failure",
        CtStatus::Io => c"i/o error",
        CtStatus::BufferTooSmall => c"buffer too small",
        CtStatus::Panic => c"panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
