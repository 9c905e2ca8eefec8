//! C interface to the vesicle simulator.
//!
//! Simulations live behind an opaque [`VesicleSim`] handle. Every fallible
//! call returns a [`VesicleStatus`]; on failure a description is kept per
//! thread and can be fetched with [`vesicle_last_error_message`]. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vesicle_core::config::{self, RunConfig};
use vesicle_core::scheme::{MU, NU, OMEGA, PHI, PSI};
use vesicle_core::sim::{self, Simulation};
use vesicle_core::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VesicleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    NotConverged = 4,
    Singular = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Selects one of the five solution components.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VesicleField {
    Phi = 0,
    Mu = 1,
    Omega = 2,
    Psi = 3,
    Nu = 4,
}

impl VesicleField {
    fn index(self) -> usize {
        match self {
            VesicleField::Phi => PHI,
            VesicleField::Mu => MU,
            VesicleField::Omega => OMEGA,
            VesicleField::Psi => PSI,
            VesicleField::Nu => NU,
        }
    }
}

/// Energies, surface quadrature, masses and region concentrations of the
/// current state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VesicleDiagnostics {
    pub time: f64,
    pub f_surf: f64,
    pub f_bend: f64,
    pub f_area: f64,
    pub f_osm: f64,
    pub f_total: f64,
    pub b_h: f64,
    pub total_mass: f64,
    pub inner_mass: f64,
    pub outer_mass: f64,
    pub inner_conc: f64,
    pub outer_conc: f64,
    pub vcycle_count: usize,
}

/// Opaque simulation handle.
pub struct VesicleSim {
    sim: Simulation,
    total_steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> VesicleStatus {
    match e {
        Error::NotConverged { .. } => VesicleStatus::NotConverged,
        Error::SingularLocalSystem { .. } => VesicleStatus::Singular,
        Error::Io(_) | Error::Snapshot(_) => VesicleStatus::Io,
        Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidGrid(_) => {
            VesicleStatus::Config
        }
        _ => VesicleStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (VesicleStatus, String)>) -> VesicleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VesicleStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VesicleStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (VesicleStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (VesicleStatus, String) {
    (VesicleStatus::NullPointer, format!("`{what}` is null"))
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, (VesicleStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        (
            VesicleStatus::InvalidArgument,
            format!("`{what}` is not valid UTF-8"),
        )
    })
}

fn create(cfg: RunConfig, out: *mut *mut VesicleSim) -> Result<(), (VesicleStatus, String)> {
    let sim = Simulation::new(&cfg).map_err(core_err)?;
    let handle = Box::new(VesicleSim {
        total_steps: cfg.step_count(),
        sim,
    });
    // SAFETY: `out` was checked non-null by the caller.
    unsafe { *out = Box::into_raw(handle) };
    Ok(())
}

/// Creates a simulation from config text (`section.key = value` lines on
/// top of the defaults).
///
/// # Safety
/// `config_text` must be a valid NUL-terminated string and `out` a valid
/// pointer. On success `*out` owns a handle to be released with
/// [`vesicle_sim_free`].
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_new(
    config_text: *const c_char,
    out: *mut *mut VesicleSim,
) -> VesicleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(config_text, "config_text")?;
        let cfg = RunConfig::parse(text).map_err(core_err)?;
        create(cfg, out)
    })
}

/// Creates a simulation from a named preset, optionally overridden by
/// config text (`overrides` may be null).
///
/// # Safety
/// `name` must be a valid NUL-terminated string, `overrides` null or one,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_new_preset(
    name: *const c_char,
    overrides: *const c_char,
    out: *mut *mut VesicleSim,
) -> VesicleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let mut cfg = config::preset(name).map_err(core_err)?;
        if !overrides.is_null() {
            cfg.apply_text(str_arg(overrides, "overrides")?)
                .map_err(core_err)?;
        }
        create(cfg, out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from this library that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_free(sim: *mut VesicleSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `steps` time steps. `iterations` (may be null) receives the
/// V-cycle count of the last step taken.
///
/// # Safety
/// `sim` must be a live handle; `iterations` null or valid.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_step(
    sim: *mut VesicleSim,
    steps: usize,
    iterations: *mut usize,
) -> VesicleStatus {
    guard(|| {
        let h = sim.as_mut().ok_or_else(|| null("sim"))?;
        for _ in 0..steps {
            let r = h.sim.step().map_err(core_err)?;
            if !iterations.is_null() {
                *iterations = r.iterations;
            }
        }
        Ok(())
    })
}

/// Advances until the configured number of steps has been taken.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_run(sim: *mut VesicleSim) -> VesicleStatus {
    guard(|| {
        let h = sim.as_mut().ok_or_else(|| null("sim"))?;
        while h.sim.steps_taken() < h.total_steps {
            h.sim.step().map_err(core_err)?;
        }
        Ok(())
    })
}

/// Simulated time and steps taken so far; either pointer may be null.
///
/// # Safety
/// `sim` must be a live handle; the out pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_time(
    sim: *const VesicleSim,
    time: *mut f64,
    steps: *mut usize,
) -> VesicleStatus {
    guard(|| {
        let h = sim.as_ref().ok_or_else(|| null("sim"))?;
        if !time.is_null() {
            *time = h.sim.time();
        }
        if !steps.is_null() {
            *steps = h.sim.steps_taken();
        }
        Ok(())
    })
}

/// Grid cell counts in x and y.
///
/// # Safety
/// `sim` must be a live handle; `m` and `n` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_grid_size(
    sim: *const VesicleSim,
    m: *mut usize,
    n: *mut usize,
) -> VesicleStatus {
    guard(|| {
        let h = sim.as_ref().ok_or_else(|| null("sim"))?;
        if m.is_null() || n.is_null() {
            return Err(null("m/n"));
        }
        *m = h.sim.spec().m();
        *n = h.sim.spec().n();
        Ok(())
    })
}

/// Copies the interior values of one component into `buf`, laid out with
/// the y index fastest (`buf[i * n + j]`, zero based). `len` must be at
/// least `m * n`.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_copy_field(
    sim: *const VesicleSim,
    field: VesicleField,
    buf: *mut f64,
    len: usize,
) -> VesicleStatus {
    guard(|| {
        let h = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = h.sim.state().fields[field.index()].interior();
        if len < values.len() {
            return Err((
                VesicleStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Diagnostics of the current state.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vesicle_sim_diagnostics(
    sim: *const VesicleSim,
    out: *mut VesicleDiagnostics,
) -> VesicleStatus {
    guard(|| {
        let h = sim.as_ref().ok_or_else(|| null("sim"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = h.sim.diagnostics().map_err(core_err)?;
        *out = VesicleDiagnostics {
            time: d.time,
            f_surf: d.f_surf,
            f_bend: d.f_bend,
            f_area: d.f_area,
            f_osm: d.f_osm,
            f_total: d.f_total,
            b_h: d.b_h,
            total_mass: d.total_mass,
            inner_mass: d.inner_mass,
            outer_mass: d.outer_mass,
            inner_conc: d.inner_conc,
            outer_conc: d.outer_conc,
            vcycle_count: d.vcycle_count,
        };
        Ok(())
    })
}

/// Runs a whole simulation from config text and writes its diagnostics,
/// residuals and snapshots into `out_dir`.
///
/// # Safety
/// Both arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn vesicle_run_to_dir(
    config_text: *const c_char,
    out_dir: *const c_char,
) -> VesicleStatus {
    guard(|| {
        let text = str_arg(config_text, "config_text")?;
        let dir = str_arg(out_dir, "out_dir")?;
        let cfg = RunConfig::parse(text).map_err(core_err)?;
        cfg.validate().map_err(core_err)?;
        let dir = Path::new(dir);
        std::fs::create_dir_all(dir).map_err(|e| core_err(e.into()))?;
        std::fs::write(dir.join("config.cfg"), cfg.to_text()).map_err(|e| core_err(e.into()))?;
        sim::run(&cfg, Some(dir), |_| {}).map_err(core_err)?;
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// without the terminator; pass a null `buf` to query it.
///
/// # Safety
/// `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn vesicle_last_error_message(buf: *mut c_char, len: usize) -> usize {
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
pub extern "C" fn vesicle_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
