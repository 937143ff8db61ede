//! C ABI for the kinetic-bte solver.
//!
//! Objects are opaque handles created by `kbte_*_new`/`kbte_*_load` style
//! functions and released with the matching `kbte_*_free`. Every fallible
//! function returns a [`KbteStatus`]; the message of the last failure on the
//! calling thread is available through [`kbte_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use kinetic_bte::characteristics::{backward_exit, ExitOptions, PhasePoint};
use kinetic_bte::cli::{self, Command, Scenario};
use kinetic_bte::collision::{beta_c, constant_a, gaussian_moment};
use kinetic_bte::diagnostics::DiagnosticsSeries;
use kinetic_bte::error::{Error, ErrorClass};
use kinetic_bte::fields::PotentialField;
use kinetic_bte::geometry::LevelSetDomain;
use kinetic_bte::Vec3;

/// Status codes. Nonzero values mirror the CLI exit codes, negated for
/// argument errors detected at the boundary.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KbteStatus {
    Ok = 0,
    Io = 1,
    Validation = 2,
    Numerical = 3,
    NullPointer = -1,
    InvalidUtf8 = -2,
    BufferTooSmall = -3,
    OutOfRange = -4,
    Panic = -5,
}

/// Bounded domain `Ω`.
pub struct KbteDomain(LevelSetDomain);

/// External potential `Φ` bound to a domain.
pub struct KbtePotential(PotentialField);

/// Parsed and validated scenario.
pub struct KbteScenario(Scenario);

/// Time series of diagnostics.
pub struct KbteSeries(DiagnosticsSeries);

/// Subcommands runnable through [`kbte_scenario_run`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KbteCommand {
    Simulate = 0,
    Semigroup = 1,
    Cycles = 2,
    KernelCheck = 3,
    Entropy = 4,
    Picard = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: KbteStatus, msg: impl Into<String>) -> KbteStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> KbteStatus {
    let status = match e.class() {
        ErrorClass::Io => KbteStatus::Io,
        ErrorClass::Validation => KbteStatus::Validation,
        ErrorClass::Numerical => KbteStatus::Numerical,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into [`KbteStatus::Panic`].
fn guard<F: FnOnce() -> KbteStatus>(f: F) -> KbteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(KbteStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, KbteStatus> {
    if s.is_null() {
        return Err(fail(KbteStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(KbteStatus::InvalidUtf8, "string is not UTF-8"))
}

unsafe fn read_vec3(p: *const f64) -> Result<Vec3, KbteStatus> {
    if p.is_null() {
        return Err(fail(KbteStatus::NullPointer, "null vector"));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> KbteStatus {
    *out = Box::into_raw(Box::new(value));
    KbteStatus::Ok
}

/// Copies `s` with a terminating NUL into `buf` of `len` bytes. `*needed`,
/// when not null, receives the required size including the NUL.
unsafe fn copy_string(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> KbteStatus {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || len < n {
        return fail(KbteStatus::BufferTooSmall, format!("need {n} bytes"));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    KbteStatus::Ok
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn kbte_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kbte_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Ball of the given radius.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_domain_ball(radius: f64, out: *mut *mut KbteDomain) -> KbteStatus {
    guard(|| {
        if out.is_null() {
            return fail(KbteStatus::NullPointer, "null output handle");
        }
        match LevelSetDomain::ball(radius) {
            Ok(d) => write_out(out, KbteDomain(d)),
            Err(e) => from_error(e.into()),
        }
    })
}

/// Axis-aligned ellipsoid with semi-axes `radii[0..3]`.
///
/// # Safety
/// `radii` must point to three doubles; `out` to storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_domain_ellipsoid(
    radii: *const f64,
    out: *mut *mut KbteDomain,
) -> KbteStatus {
    guard(|| {
        let r = try_status!(read_vec3(radii));
        if out.is_null() {
            return fail(KbteStatus::NullPointer, "null output handle");
        }
        match LevelSetDomain::ellipsoid([r.x, r.y, r.z]) {
            Ok(d) => write_out(out, KbteDomain(d)),
            Err(e) => from_error(e.into()),
        }
    })
}

/// # Safety
/// `d` must be null or a handle from a `kbte_domain_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn kbte_domain_free(d: *mut KbteDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Level-set value `ξ(x)`; negative inside.
///
/// # Safety
/// `d` must be a live domain handle, `x` three doubles, `out` one double.
#[no_mangle]
pub unsafe extern "C" fn kbte_domain_level(
    d: *const KbteDomain,
    x: *const f64,
    out: *mut f64,
) -> KbteStatus {
    guard(|| {
        if d.is_null() || out.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        let x = try_status!(read_vec3(x));
        *out = (*d).0.level(&x);
        KbteStatus::Ok
    })
}

/// `Φ ≡ 0`.
///
/// # Safety
/// `out` must point to storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_potential_zero(out: *mut *mut KbtePotential) -> KbteStatus {
    guard(|| {
        if out.is_null() {
            return fail(KbteStatus::NullPointer, "null output handle");
        }
        write_out(out, KbtePotential(PotentialField::zero()))
    })
}

/// `Φ = κ|x|²/2` on the domain.
///
/// # Safety
/// `d` must be a live domain handle; `out` storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_potential_harmonic(
    kappa: f64,
    d: *const KbteDomain,
    out: *mut *mut KbtePotential,
) -> KbteStatus {
    guard(|| {
        if d.is_null() || out.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        match PotentialField::harmonic(kappa, &(*d).0) {
            Ok(p) => write_out(out, KbtePotential(p)),
            Err(e) => from_error(e.into()),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from a `kbte_potential_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn kbte_potential_free(p: *mut KbtePotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `Φ(x)`.
///
/// # Safety
/// `p` must be a live potential handle, `x` three doubles, `out` one double.
#[no_mangle]
pub unsafe extern "C" fn kbte_potential_phi(
    p: *const KbtePotential,
    x: *const f64,
    out: *mut f64,
) -> KbteStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        let x = try_status!(read_vec3(x));
        *out = (*p).0.phi(&x);
        KbteStatus::Ok
    })
}

/// Backward exit `(t_b, x_b, v_b)` of the characteristic through `(x, v)`.
///
/// # Safety
/// Handles must be live; `x`, `v`, `x_b`, `v_b` three doubles each; `t_b` one.
#[no_mangle]
pub unsafe extern "C" fn kbte_backward_exit(
    d: *const KbteDomain,
    p: *const KbtePotential,
    x: *const f64,
    v: *const f64,
    t_b: *mut f64,
    x_b: *mut f64,
    v_b: *mut f64,
) -> KbteStatus {
    guard(|| {
        if d.is_null() || p.is_null() || t_b.is_null() || x_b.is_null() || v_b.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        let x = try_status!(read_vec3(x));
        let v = try_status!(read_vec3(v));
        match backward_exit(
            &(*d).0,
            &(*p).0,
            PhasePoint::new(x, v),
            &ExitOptions::default(),
        ) {
            Ok(e) => {
                *t_b = e.t_b;
                ptr::copy_nonoverlapping(e.x_b.as_ptr(), x_b, 3);
                ptr::copy_nonoverlapping(e.v_b.as_ptr(), v_b, 3);
                KbteStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// `∫ v₁^{e₀} v₂^{e₁} v₃^{e₂} |v|^{2k} e^{−|v|²/2} dv`.
///
/// # Safety
/// `exponents` must point to three unsigned integers.
#[no_mangle]
pub unsafe extern "C" fn kbte_gaussian_moment(
    exponents: *const u32,
    k: u32,
    out: *mut f64,
) -> KbteStatus {
    guard(|| {
        if exponents.is_null() || out.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        let e = std::slice::from_raw_parts(exponents, 3);
        *out = gaussian_moment([e[0], e[1], e[2]], k);
        KbteStatus::Ok
    })
}

/// `β_c`.
#[no_mangle]
pub extern "C" fn kbte_beta_c() -> f64 {
    beta_c()
}

/// The hydrodynamic constant `A`.
#[no_mangle]
pub extern "C" fn kbte_constant_a() -> f64 {
    constant_a()
}

fn store_scenario(s: Scenario, out: *mut *mut KbteScenario) -> KbteStatus {
    if let Err(e) = s.validate() {
        return from_error(e);
    }
    unsafe { write_out(out, KbteScenario(s)) }
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_scenario_parse(
    text: *const c_char,
    out: *mut *mut KbteScenario,
) -> KbteStatus {
    guard(|| {
        let text = try_status!(read_str(text));
        if out.is_null() {
            return fail(KbteStatus::NullPointer, "null output handle");
        }
        match cli::parse_scenario(text) {
            Ok(s) => store_scenario(s, out),
            Err(e) => from_error(e),
        }
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_scenario_load(
    path: *const c_char,
    out: *mut *mut KbteScenario,
) -> KbteStatus {
    guard(|| {
        let path = try_status!(read_str(path));
        if out.is_null() {
            return fail(KbteStatus::NullPointer, "null output handle");
        }
        match cli::load_scenario(std::path::Path::new(path)) {
            Ok(s) => store_scenario(s, out),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `s` must be null or a scenario handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn kbte_scenario_free(s: *mut KbteScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Overrides the seed.
///
/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_scenario_set_seed(s: *mut KbteScenario, seed: u64) -> KbteStatus {
    guard(|| {
        if s.is_null() {
            return fail(KbteStatus::NullPointer, "null scenario");
        }
        (*s).0.seed = seed;
        KbteStatus::Ok
    })
}

/// Configuration hash written into every output file.
///
/// # Safety
/// `s` must be a live scenario handle; `buf` `len` writable bytes or null;
/// `needed` null or one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn kbte_scenario_hash(
    s: *const KbteScenario,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> KbteStatus {
    guard(|| {
        if s.is_null() {
            return fail(KbteStatus::NullPointer, "null scenario");
        }
        copy_string(&(*s).0.hash(), buf, len, needed)
    })
}

/// Runs a subcommand, writing its files into `out_dir`.
///
/// # Safety
/// `s` must be a live scenario handle; `out_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kbte_scenario_run(
    s: *const KbteScenario,
    command: KbteCommand,
    out_dir: *const c_char,
) -> KbteStatus {
    guard(|| {
        if s.is_null() {
            return fail(KbteStatus::NullPointer, "null scenario");
        }
        let dir = try_status!(read_str(out_dir));
        let mut sc = (*s).0.clone();
        sc.output.dir = PathBuf::from(dir).display().to_string();
        let cmd = match command {
            KbteCommand::Simulate => Command::Simulate,
            KbteCommand::Semigroup => Command::Semigroup,
            KbteCommand::Cycles => Command::Cycles,
            KbteCommand::KernelCheck => Command::KernelCheck,
            KbteCommand::Entropy => Command::Entropy,
            KbteCommand::Picard => Command::Picard,
        };
        match cli::run_scenario(&cmd, sc) {
            Ok(()) => KbteStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Runs the positivity-preserving scheme and returns its diagnostics.
///
/// # Safety
/// `s` must be a live scenario handle; `out` storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_simulate(
    s: *const KbteScenario,
    out: *mut *mut KbteSeries,
) -> KbteStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        let sc = &(*s).0;
        let run = || -> Result<DiagnosticsSeries, Error> {
            let sys = sc.build_system()?;
            let f0 = cli::initial_full(&sys, sc)?;
            Ok(sys
                .run_simulation(&f0, &sc.scheme_config(), &sc.hash(), |_| {})?
                .series)
        };
        match run() {
            Ok(series) => write_out(out, KbteSeries(series)),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `s` must be null or a series handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn kbte_series_free(s: *mut KbteSeries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of recorded times.
///
/// # Safety
/// `s` must be a live series handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_series_len(s: *const KbteSeries) -> usize {
    if s.is_null() {
        return 0;
    }
    (*s).0.len()
}

/// Number of channels, excluding time.
///
/// # Safety
/// `s` must be a live series handle.
#[no_mangle]
pub unsafe extern "C" fn kbte_series_channel_count(s: *const KbteSeries) -> usize {
    if s.is_null() {
        return 0;
    }
    (*s).0.columns().len()
}

/// Name of channel `index`.
///
/// # Safety
/// `s` must be a live series handle; `buf` `len` writable bytes or null;
/// `needed` null or one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn kbte_series_channel_name(
    s: *const KbteSeries,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> KbteStatus {
    guard(|| {
        if s.is_null() {
            return fail(KbteStatus::NullPointer, "null series");
        }
        match (*s).0.columns().get(index) {
            Some(name) => copy_string(name, buf, len, needed),
            None => fail(KbteStatus::OutOfRange, format!("no channel {index}")),
        }
    })
}

/// Copies the recorded times into `out[0..len]`.
///
/// # Safety
/// `s` must be a live series handle; `out` `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kbte_series_times(
    s: *const KbteSeries,
    out: *mut f64,
    len: usize,
) -> KbteStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        let t = (*s).0.times();
        if len < t.len() {
            return fail(
                KbteStatus::BufferTooSmall,
                format!("need {} values", t.len()),
            );
        }
        ptr::copy_nonoverlapping(t.as_ptr(), out, t.len());
        KbteStatus::Ok
    })
}

/// Copies channel `name` into `out[0..len]`.
///
/// # Safety
/// `s` must be a live series handle; `name` a NUL-terminated string; `out`
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kbte_series_channel(
    s: *const KbteSeries,
    name: *const c_char,
    out: *mut f64,
    len: usize,
) -> KbteStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return fail(KbteStatus::NullPointer, "null argument");
        }
        let name = try_status!(read_str(name));
        let Some(c) = (*s).0.channel(name) else {
            return fail(KbteStatus::OutOfRange, format!("no channel {name:?}"));
        };
        if len < c.len() {
            return fail(
                KbteStatus::BufferTooSmall,
                format!("need {} values", c.len()),
            );
        }
        ptr::copy_nonoverlapping(c.as_ptr(), out, c.len());
        KbteStatus::Ok
    })
}
