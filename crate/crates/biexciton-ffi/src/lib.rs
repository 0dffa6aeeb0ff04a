//! C ABI over the `biexciton` library.
//!
//! Every fallible call returns a [`BxStatus`]; results go through out
//! pointers. On failure a message is kept per thread and can be copied out
//! with [`bx_last_error_message`]. Handles are opaque and must be released
//! with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use biexciton::dynamics::{self, Wavepacket, WavepacketConfig};
use biexciton::exact_diag;
use biexciton::exciton;
use biexciton::projected::{self, ProjectedHamiltonian};
use biexciton::{scattering, Error, Method, ModelParams};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BxStatus {
    Ok = 0,
    NullPointer = 1,
    Parameter = 2,
    Existence = 3,
    Numerical = 4,
    Domain = 5,
    Regime = 6,
    Pole = 7,
    Range = 8,
    Timing = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

impl From<&Error> for BxStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parameter(_) => BxStatus::Parameter,
            Error::Existence(_) => BxStatus::Existence,
            Error::Numerical { .. } => BxStatus::Numerical,
            Error::Domain(_) => BxStatus::Domain,
            Error::Regime(_) => BxStatus::Regime,
            Error::Pole(_) => BxStatus::Pole,
            Error::Range(_) => BxStatus::Range,
            Error::Timing(_) => BxStatus::Timing,
        }
    }
}

/// Model parameters. `n` must be even and at least 4.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BxModelParams {
    pub n: usize,
    pub j: f64,
    pub d: f64,
    pub e0: f64,
    pub v0: f64,
}

/// Gaussian packet settings. A NaN `r_offset` places the packet so that it
/// reaches the impurity at t = 0.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BxWavepacketConfig {
    pub k0: f64,
    pub dk0: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub r_offset: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BxPole {
    /// 0 or π/2.
    pub k_prime: f64,
    pub k_doubleprime: f64,
    pub energy: f64,
    pub residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BxBic {
    pub index: usize,
    pub energy: f64,
    pub closed_form: f64,
    pub discrepancy: f64,
    pub schmidt_number: f64,
}

/// Projected biexciton Hamiltonian with its eigendecomposition.
pub struct BxProjected {
    h: ProjectedHamiltonian,
    spec: projected::ProjectedSpectrum,
}

/// A wavepacket run ready to be sampled at any time.
pub struct BxWavepacket {
    w: Wavepacket,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), BxStatus>>(f: F) -> BxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BxStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            BxStatus::Panic
        }
    }
}

fn lib<T>(r: biexciton::Result<T>) -> Result<T, BxStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        BxStatus::from(&e)
    })
}

fn null() -> BxStatus {
    set_error("null pointer argument".into());
    BxStatus::NullPointer
}

fn params(p: &BxModelParams) -> Result<ModelParams, BxStatus> {
    lib(ModelParams::new(p.n, p.j, p.d, p.e0, p.v0))
}

fn packet_config(c: &BxWavepacketConfig) -> WavepacketConfig {
    WavepacketConfig {
        k0: c.k0,
        dk0: c.dk0,
        t_start: c.t_start,
        t_end: c.t_end,
        sample_dt: c.sample_dt,
        r_offset: (!c.r_offset.is_nan()).then_some(c.r_offset),
    }
}

/// # Safety
/// `out` must be valid for one write.
unsafe fn write<T>(out: *mut T, v: T) -> Result<(), BxStatus> {
    if out.is_null() {
        return Err(null());
    }
    unsafe { out.write(v) };
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL terminated)
/// and returns the full message length without the terminator. Passing a
/// null `buf` or `len` 0 only queries the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bx_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bx_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    V.as_ptr()
}

/// The canonical packet: K0 = 3π/8, ΔK0 = π/24, t from −30 to 70.
#[no_mangle]
pub extern "C" fn bx_wavepacket_config_canonical() -> BxWavepacketConfig {
    let c = WavepacketConfig::canonical();
    BxWavepacketConfig {
        k0: c.k0,
        dk0: c.dk0,
        t_start: c.t_start,
        t_end: c.t_end,
        sample_dt: c.sample_dt,
        r_offset: f64::NAN,
    }
}

/// Energy of the single-exciton bound state on the N-site ring.
///
/// # Safety
/// `p` and `energy` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bx_exciton_bound_energy(p: *const BxModelParams, energy: *mut f64) -> BxStatus {
    guard(|| {
        let p = params(unsafe { p.as_ref() }.ok_or_else(null)?)?;
        let s = lib(exciton::solve_exciton_spectrum(&p))?;
        let b = s.bound.ok_or_else(|| {
            set_error("no bound state at V0 = 0".into());
            BxStatus::Existence
        })?;
        unsafe { write(energy, b.energy) }
    })
}

/// Builds and diagonalizes the projected Hamiltonian.
///
/// # Safety
/// `p` must be valid; `out` receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn bx_projected_new(p: *const BxModelParams, out: *mut *mut BxProjected) -> BxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let p = params(unsafe { p.as_ref() }.ok_or_else(null)?)?;
        let h = lib(ProjectedHamiltonian::new(&p, Method::Auto))?;
        let spec = lib(projected::diagonalize_projected(&h))?;
        unsafe { write(out, Box::into_raw(Box::new(BxProjected { h, spec }))) }
    })
}

/// # Safety
/// `h` must come from [`bx_projected_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bx_projected_free(h: *mut BxProjected) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Number of eigenvalues (N).
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bx_projected_len(h: *const BxProjected) -> usize {
    unsafe { h.as_ref() }.map_or(0, |h| h.spec.values.len())
}

/// Copies the ascending eigenvalues into `out`, which holds `len` doubles.
///
/// # Safety
/// `h` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn bx_projected_eigenvalues(h: *const BxProjected, out: *mut f64, len: usize) -> BxStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let v = &h.spec.values;
        if len < v.len() {
            set_error(format!("buffer holds {len}, need {}", v.len()));
            return Err(BxStatus::BufferTooSmall);
        }
        unsafe { ptr::copy_nonoverlapping(v.as_ptr(), out, v.len()) };
        Ok(())
    })
}

/// Number of impurity bound states among the eigenstates.
///
/// # Safety
/// `h` must be a live handle; `count` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bx_projected_bound_count(h: *const BxProjected, count: *mut usize) -> BxStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(null)?;
        let n = projected::classify_bound_states(&h.spec, &h.h).len();
        unsafe { write(count, n) }
    })
}

/// Pole of the biexciton reflection amplitude on the branch fixed by sgn(D V0).
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bx_find_pole(p: *const BxModelParams, out: *mut BxPole) -> BxStatus {
    guard(|| {
        let p = params(unsafe { p.as_ref() }.ok_or_else(null)?)?;
        let r = lib(scattering::find_pole(&p))?;
        let pole = BxPole {
            k_prime: r.k_prime,
            k_doubleprime: r.k_doubleprime,
            energy: r.energy,
            residual: r.residual,
        };
        unsafe { write(out, pole) }
    })
}

/// Full diagonalization and the bound state in the continuum nearest the
/// closed-form energy.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bx_find_bic(p: *const BxModelParams, out: *mut BxBic) -> BxStatus {
    guard(|| {
        let p = params(unsafe { p.as_ref() }.ok_or_else(null)?)?;
        lib(p.require_biexciton())?;
        let full = lib(exact_diag::diagonalize_full(&p))?;
        let classes = exact_diag::classify_all(&full);
        let b = lib(exact_diag::find_bic(&full, &classes))?;
        let bic = BxBic {
            index: b.index,
            energy: b.energy,
            closed_form: b.closed_form,
            discrepancy: b.discrepancy,
            schmidt_number: b.classification.schmidt_number,
        };
        unsafe { write(out, bic) }
    })
}

/// Impurity strength that reflects `target` of the packet at `t_measure`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bx_calibrate_v0(
    p: *const BxModelParams,
    c: *const BxWavepacketConfig,
    target: f64,
    t_measure: f64,
    v0: *mut f64,
) -> BxStatus {
    guard(|| {
        let p = params(unsafe { p.as_ref() }.ok_or_else(null)?)?;
        let c = packet_config(unsafe { c.as_ref() }.ok_or_else(null)?);
        let cal = lib(dynamics::calibrate_v0(&p, &c, target, t_measure))?;
        unsafe { write(v0, cal.v0) }
    })
}

/// Prepares a wavepacket run.
///
/// # Safety
/// `p` and `c` must be valid; `out` receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn bx_wavepacket_new(
    p: *const BxModelParams,
    c: *const BxWavepacketConfig,
    out: *mut *mut BxWavepacket,
) -> BxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let p = params(unsafe { p.as_ref() }.ok_or_else(null)?)?;
        let c = packet_config(unsafe { c.as_ref() }.ok_or_else(null)?);
        let w = lib(Wavepacket::new(&p, &c))?;
        unsafe { write(out, Box::into_raw(Box::new(BxWavepacket { w }))) }
    })
}

/// # Safety
/// `h` must come from [`bx_wavepacket_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bx_wavepacket_free(h: *mut BxWavepacket) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Entanglement entropy (bits) between CM and relative coordinates at `t`.
///
/// # Safety
/// `h` must be a live handle; `s` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bx_wavepacket_entropy(h: *const BxWavepacket, t: f64, s: *mut f64) -> BxStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(null)?;
        let v = lib(h.w.entropy_at(t))?;
        unsafe { write(s, v) }
    })
}

/// ⟨E⟩ − 2E0 of the packet at `t`.
///
/// # Safety
/// `h` must be a live handle; `e` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bx_wavepacket_energy(h: *const BxWavepacket, t: f64, e: *mut f64) -> BxStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(null)?;
        let v = h.w.propagator.energy(&h.w.state_at(t));
        unsafe { write(e, v) }
    })
}

/// Reflected and transmitted probabilities at `t`.
///
/// # Safety
/// `h` must be a live handle; `reflected` and `transmitted` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bx_wavepacket_split(
    h: *const BxWavepacket,
    t: f64,
    reflected: *mut f64,
    transmitted: *mut f64,
) -> BxStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(null)?;
        if transmitted.is_null() {
            return Err(null());
        }
        let (r, tr) = lib(h.w.split_at(t))?;
        unsafe {
            write(reflected, r)?;
            write(transmitted, tr)
        }
    })
}
