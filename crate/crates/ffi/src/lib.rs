//! C ABI over the guidewave solver.
//!
//! Every function returns a [`GwStatus`]; on failure the message is kept in
//! thread-local storage and read back with [`gw_last_error_message`].
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use guidewave::config::Config;
use guidewave::fem::SolutionField;
use guidewave::floquet::ModeBasis;
use guidewave::layout::Layout;
use guidewave::pipeline::{guide_modes, prepare, run_convergence, run_solve, solve_prepared, Reference};
use guidewave::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Config = 4,
    Eigensolver = 5,
    Cutoff = 6,
    Truncation = 7,
    Mesh = 8,
    Singular = 9,
    Io = 10,
    OutOfRange = 11,
    Panic = 12,
}

/// Parsed problem configuration.
pub struct GwProblem {
    config: Config,
}

/// Solution of a closed junction problem.
pub struct GwField {
    field: SolutionField,
}

/// Outgoing mode family of one guide.
pub struct GwModes {
    basis: ModeBasis,
}

/// Outgoing side: plus is the right guide, minus the left guide.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwSide {
    Plus = 0,
    Minus = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> GwStatus {
    match err {
        Error::Stage { source, .. } => status_of(source),
        Error::InvalidInput(_) | Error::Bandwidth { .. } | Error::DomainMismatch(_) => GwStatus::InvalidInput,
        Error::Config(_) => GwStatus::Config,
        Error::EigenSolver { .. } | Error::IndefiniteEnergy { .. } | Error::GramIndefinite { .. } => {
            GwStatus::Eigensolver
        }
        Error::StandingWave { .. } => GwStatus::Cutoff,
        Error::StripCount { .. } | Error::InsufficientDecay { .. } => GwStatus::Truncation,
        Error::Mesh(_) => GwStatus::Mesh,
        Error::SingularSystem(_) => GwStatus::Singular,
        Error::Io(_) | Error::Json(_) => GwStatus::Io,
    }
}

struct Failure(GwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GwStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GwStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(GwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(GwStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gw_problem_load(path: *const c_char, out: *mut *mut GwProblem) -> GwStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let config = Config::load(Path::new(path))?;
        write_out(out, Box::into_raw(Box::new(GwProblem { config })), "out")
    })
}

/// Parse a configuration from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gw_problem_from_toml(text: *const c_char, out: *mut *mut GwProblem) -> GwStatus {
    guard(|| {
        let config = Config::from_toml(read_str(text, "text")?)?;
        write_out(out, Box::into_raw(Box::new(GwProblem { config })), "out")
    })
}

/// # Safety
/// `problem` must come from a `gw_problem_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn gw_problem_free(problem: *mut GwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Override the Fourier truncation `n` and the strip count `m`.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_problem_set_truncation(problem: *mut GwProblem, n: usize, m: usize) -> GwStatus {
    guard(|| {
        let p = borrow_mut(problem, "problem")?;
        let mut config = p.config.clone();
        config.truncation.n = n;
        config.truncation.m = m;
        config.validate()?;
        p.config = config;
        Ok(())
    })
}

/// Override the target mesh size.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_problem_set_mesh_size(problem: *mut GwProblem, h: f64) -> GwStatus {
    guard(|| {
        let p = borrow_mut(problem, "problem")?;
        let mut config = p.config.clone();
        config.mesh.h = h;
        config.validate()?;
        p.config = config;
        Ok(())
    })
}

/// Solve with the configured strip count and return the field.
///
/// # Safety
/// `problem` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gw_solve(problem: *const GwProblem, out: *mut *mut GwField) -> GwStatus {
    guard(|| {
        let cfg = &borrow(problem, "problem")?.config;
        let m = cfg.truncation.m;
        let prep = prepare(cfg, m, None)?;
        let field = solve_prepared(cfg, &prep, m)?.field;
        write_out(out, Box::into_raw(Box::new(GwField { field })), "out")
    })
}

/// Full solve writing the field, plot data and manifest under `dir`.
///
/// # Safety
/// `problem` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gw_solve_to_dir(problem: *const GwProblem, dir: *const c_char) -> GwStatus {
    guard(|| {
        let cfg = &borrow(problem, "problem")?.config;
        run_solve(cfg, Path::new(read_str(dir, "dir")?))?;
        Ok(())
    })
}

/// Relative closure errors for `len` ascending strip counts against the
/// closure with `reference_m` strips; `errors` receives `len` values.
///
/// # Safety
/// `ms` must point to `len` readable values and `errors` to `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn gw_convergence(
    problem: *const GwProblem,
    ms: *const usize,
    len: usize,
    reference_m: usize,
    errors: *mut f64,
) -> GwStatus {
    guard(|| {
        let cfg = &borrow(problem, "problem")?.config;
        if ms.is_null() || errors.is_null() {
            return Err(null("ms or errors"));
        }
        let ms = std::slice::from_raw_parts(ms, len);
        let table = run_convergence(cfg, ms, Reference::SelfRichest(reference_m), None)?;
        let out = std::slice::from_raw_parts_mut(errors, len);
        for (o, row) in out.iter_mut().zip(&table.rows) {
            *o = row.1;
        }
        Ok(())
    })
}

/// # Safety
/// `field` must come from [`gw_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn gw_field_free(field: *mut GwField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of degrees of freedom of the field.
///
/// # Safety
/// `field` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gw_field_dofs(field: *const GwField, out: *mut usize) -> GwStatus {
    guard(|| write_out(out, borrow(field, "field")?.field.n_dofs(), "out"))
}

/// Value of the field at `(x1, x2)`; `OutOfRange` outside the mesh.
///
/// # Safety
/// `field` must be a live handle, `re` and `im` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn gw_field_eval(
    field: *const GwField,
    x1: f64,
    x2: f64,
    re: *mut f64,
    im: *mut f64,
) -> GwStatus {
    guard(|| {
        let f = &borrow(field, "field")?.field;
        let v = f.eval([x1, x2]).ok_or_else(|| {
            Failure(
                GwStatus::OutOfRange,
                format!("point ({x1}, {x2}) lies outside the mesh"),
            )
        })?;
        write_out(re, v.re, "re")?;
        write_out(im, v.im, "im")
    })
}

/// Relative L² distance between two fields.
///
/// # Safety
/// Both fields must be live handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gw_field_error(a: *const GwField, b: *const GwField, out: *mut f64) -> GwStatus {
    guard(|| {
        let e = guidewave::fem::field_error(&borrow(a, "a")?.field, &borrow(b, "b")?.field)?;
        write_out(out, e, "out")
    })
}

/// Outgoing mode family of the guide on `side`.
///
/// # Safety
/// `problem` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gw_modes_compute(problem: *const GwProblem, side: GwSide, out: *mut *mut GwModes) -> GwStatus {
    guard(|| {
        let cfg = &borrow(problem, "problem")?.config;
        let layout = Layout::new(cfg)?;
        let guide = match side {
            GwSide::Plus => &layout.right,
            GwSide::Minus => &layout.left,
        };
        let (k, t) = (cfg.wavenumber, cfg.truncation);
        let modes = guide_modes(guide, k, t.n, t.m, &cfg.tolerances, cfg.eigensolver.backend, None)?;
        let basis = match side {
            GwSide::Plus => modes.plus,
            GwSide::Minus => modes.minus,
        };
        write_out(out, Box::into_raw(Box::new(GwModes { basis })), "out")
    })
}

/// # Safety
/// `modes` must come from [`gw_modes_compute`] or be null.
#[no_mangle]
pub unsafe extern "C" fn gw_modes_free(modes: *mut GwModes) {
    if !modes.is_null() {
        drop(Box::from_raw(modes));
    }
}

/// Total and propagating mode counts.
///
/// # Safety
/// `modes` must be a live handle; `total` and `propagating` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn gw_modes_count(modes: *const GwModes, total: *mut usize, propagating: *mut usize) -> GwStatus {
    guard(|| {
        let b = &borrow(modes, "modes")?.basis;
        write_out(total, b.len(), "total")?;
        write_out(propagating, b.propagating, "propagating")
    })
}

/// Quasimomentum per period of mode `index`.
///
/// # Safety
/// `modes` must be a live handle; `re` and `im` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn gw_modes_alpha(modes: *const GwModes, index: usize, re: *mut f64, im: *mut f64) -> GwStatus {
    guard(|| {
        let b = &borrow(modes, "modes")?.basis;
        let m = b.modes.get(index).ok_or_else(|| {
            Failure(
                GwStatus::OutOfRange,
                format!("mode index {index} out of range 0..{}", b.len()),
            )
        })?;
        write_out(re, m.alpha.re, "re")?;
        write_out(im, m.alpha.im, "im")
    })
}
