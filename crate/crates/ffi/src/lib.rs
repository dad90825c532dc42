//! C interface to `spinrestrict`.
//!
//! Every function returns an [`SrStatus`]. Results go through out-pointers.
//! Objects are opaque handles created by `*_new` and released with `*_free`.
//! After a failure, `sr_last_error` copies the message into a caller buffer.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spinrestrict::cli::config::{MAX_GROUND_SITES, MAX_THERMAL_SITES};
use spinrestrict::fcs_entanglement::{best_conditioned_correlation, gell_mann, Conditioning, FcsModel};
use spinrestrict::gibbs_engine::{classical_restriction, gibbs_state, ground_state, GroundMethod, QuantumState};
use spinrestrict::ising_exact::{rate_function, szego_f, toeplitz_log_generating, IsingParams, QuadratureRule};
use spinrestrict::mobius_potential::beta_max;
use spinrestrict::spin_algebra::{build_hamiltonian, pauli, Interaction, Lattice, ObservableSpectrum};
use spinrestrict::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Numerical = 3,
    Capability = 4,
    Singular = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Single-site observable measured on every site.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrObservable {
    SigmaX = 0,
    SigmaY = 1,
    SigmaZ = 2,
}

/// Gibbs or ground state of a transverse-field Ising chain.
pub struct SrIsingState {
    state: QuantumState,
}

/// Finitely correlated state.
pub struct SrFcsModel {
    model: FcsModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SrStatus {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Io(_) => SrStatus::Domain,
        Error::Numerical(_) => SrStatus::Numerical,
        Error::Capability(_) => SrStatus::Capability,
        Error::SingularConditioning(_) | Error::SingularEvent(_) | Error::SingularParameter(_) => SrStatus::Singular,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Buffer(usize),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SrStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            SrStatus::NullPointer
        }
        Ok(Err(Fail::Buffer(need))) => {
            set_error(format!("buffer too small: {need} entries required"));
            SrStatus::BufferTooSmall
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SrStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn get<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

/// Copies `src` into `(buf, len)`, reporting the required length through `written`.
unsafe fn fill<T: Copy>(src: &[T], buf: *mut T, len: usize, written: *mut usize) -> Result<(), Fail> {
    if let Some(w) = written.as_mut() {
        *w = src.len();
    }
    if len < src.len() {
        return Err(Fail::Buffer(src.len()));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(Fail::Null("buffer"));
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

fn quadrature(count: usize) -> Result<QuadratureRule, Fail> {
    Ok(QuadratureRule::trapezoid(count)?)
}

/// Copies the last error message of this thread, NUL-terminated and truncated to fit.
///
/// Returns the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds the state of `H = −J Σ σx σx − h Σ σz` on `n` open-chain sites.
///
/// A positive finite `beta` gives the Gibbs state; `beta = +INFINITY` gives the ground state.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sr_ising_state_new(j: f64, h: f64, n: usize, beta: f64, seed: u64, out: *mut *mut SrIsingState) -> SrStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let ground = beta == f64::INFINITY;
        let cap = if ground { MAX_GROUND_SITES } else { MAX_THERMAL_SITES };
        if n > cap {
            return Err(Error::Capability(format!("N = {n} exceeds the limit {cap}")).into());
        }
        let lat = Lattice::chain(n, 2)?;
        let ham = build_hamiltonian(&Interaction::transverse_ising(j, h), &lat)?;
        let state = if ground { ground_state(&ham, &lat, GroundMethod::Auto, seed)? } else { gibbs_state(&ham, &lat, beta)? };
        *slot = Box::into_raw(Box::new(SrIsingState { state }));
        Ok(())
    })
}

/// # Safety
/// `state` must come from `sr_ising_state_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sr_ising_state_free(state: *mut SrIsingState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Writes the number of sites.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sr_ising_state_sites(state: *const SrIsingState, n: *mut usize) -> SrStatus {
    guard(|| {
        *out(n, "n")? = get(state, "state")?.state.lattice().len();
        Ok(())
    })
}

/// Writes energy, log-partition function and spectral gap; unavailable values are NaN.
///
/// # Safety
/// `state` must be valid; null out-pointers are skipped.
#[no_mangle]
pub unsafe extern "C" fn sr_ising_state_summary(
    state: *const SrIsingState,
    energy: *mut f64,
    log_partition: *mut f64,
    gap: *mut f64,
) -> SrStatus {
    guard(|| {
        let st = &get(state, "state")?.state;
        for (p, v) in [(energy, st.energy()), (log_partition, st.log_partition()), (gap, st.gap())] {
            if let Some(p) = p.as_mut() {
                *p = v.unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

/// Classical restriction of the state to the whole chain.
///
/// Probabilities are indexed with the first site most significant and each
/// site's outcome ordered `−1, +1`. `written` receives `2^N`.
///
/// # Safety
/// `probs` must be valid for `len` writes; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn sr_ising_state_restriction(
    state: *const SrIsingState,
    observable: SrObservable,
    probs: *mut f64,
    len: usize,
    written: *mut usize,
) -> SrStatus {
    guard(|| {
        let st = &get(state, "state")?.state;
        let x = match observable {
            SrObservable::SigmaX => pauli::x(),
            SrObservable::SigmaY => pauli::y(),
            SrObservable::SigmaZ => pauli::z(),
        };
        let spec = ObservableSpectrum::new(&x)?;
        let mu = classical_restriction(st, &spec, st.lattice().sites())?;
        fill(mu.probs(), probs, len, written)
    })
}

/// Largest `β` for which the convergence condition with parameter `a` holds.
///
/// # Safety
/// Out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sr_beta_max(j: f64, h: f64, a: f64, beta: *mut f64, unbounded: *mut bool) -> SrStatus {
    guard(|| {
        let (beta, unbounded) = (out(beta, "beta")?, out(unbounded, "unbounded")?);
        let b = beta_max(&Interaction::transverse_ising(j, h), a)?;
        *beta = b.beta;
        *unbounded = b.unbounded;
        Ok(())
    })
}

/// Limiting cumulant generating function `F(t)` of the ground-state σz restriction at `g = h/J`.
///
/// # Safety
/// `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sr_szego_f(g: f64, t: f64, nodes: usize, value: *mut f64) -> SrStatus {
    guard(|| {
        let v = out(value, "value")?;
        *v = szego_f(t, &IsingParams::new(g, 1.0)?, &quadrature(nodes)?)?;
        Ok(())
    })
}

/// `log G_n(t)` from the Toeplitz determinant on `n` sites.
///
/// # Safety
/// `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sr_toeplitz_log_generating(g: f64, n: usize, t: f64, nodes: usize, value: *mut f64) -> SrStatus {
    guard(|| {
        let v = out(value, "value")?;
        *v = toeplitz_log_generating(n, t, &IsingParams::new(g, 1.0)?, &quadrature(nodes)?)?;
        Ok(())
    })
}

/// Rate function `I(m)` and the maximizing tilt.
///
/// # Safety
/// `value` must be valid; `tilt` may be null.
#[no_mangle]
pub unsafe extern "C" fn sr_rate_function(g: f64, m: f64, nodes: usize, value: *mut f64, tilt: *mut f64) -> SrStatus {
    guard(|| {
        let v = out(value, "value")?;
        let r = rate_function(m, &IsingParams::new(g, 1.0)?, &quadrature(nodes)?)?;
        *v = r.value;
        if let Some(t) = tilt.as_mut() {
            *t = r.t;
        }
        Ok(())
    })
}

/// The spin-1 AKLT state.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sr_fcs_model_aklt(out: *mut *mut SrFcsModel) -> SrStatus {
    guard(|| {
        *self::out(out, "out")? = Box::into_raw(Box::new(SrFcsModel { model: FcsModel::aklt() }));
        Ok(())
    })
}

/// Parses a model from JSON `{"m": .., "A": [..]}`: `m` row-major 2x2 matrices of `[re, im]` pairs.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sr_fcs_model_from_json(json: *const c_char, out: *mut *mut SrFcsModel) -> SrStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Error::Domain(format!("model text is not UTF-8: {e}")))?;
        *slot = Box::into_raw(Box::new(SrFcsModel { model: FcsModel::from_json(text)? }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from an `sr_fcs_model_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sr_fcs_model_free(model: *mut SrFcsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sr_fcs_model_local_dim(model: *const SrFcsModel, m: *mut usize) -> SrStatus {
    guard(|| {
        *out(m, "m")? = get(model, "model")?.model.local_dim();
        Ok(())
    })
}

/// Eigenvalues of the transfer map as split real and imaginary parts.
///
/// # Safety
/// `re` and `im` must be valid for `len` writes; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn sr_fcs_model_transfer_spectrum(
    model: *const SrFcsModel,
    re: *mut f64,
    im: *mut f64,
    len: usize,
    written: *mut usize,
) -> SrStatus {
    guard(|| {
        let spec = get(model, "model")?.model.transfer_spectrum();
        let (r, i): (Vec<f64>, Vec<f64>) = spec.iter().map(|z| (z.re, z.im)).unzip();
        fill(&r, re, len, written)?;
        fill(&i, im, len, std::ptr::null_mut())
    })
}

/// Largest conditioned correlation over Gell-Mann pairs after measuring the
/// basis outcomes `x_v` (0-based, `2(n − 1)` entries) on the conditioning sites.
///
/// # Safety
/// `x_v` must be valid for `x_v_len` reads; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sr_fcs_conditioned_correlation(
    model: *const SrFcsModel,
    n: usize,
    x_v: *const usize,
    x_v_len: usize,
    value: *mut f64,
) -> SrStatus {
    guard(|| {
        let model = &get(model, "model")?.model;
        let v = out(value, "value")?;
        let outcomes = if x_v_len == 0 {
            Vec::new()
        } else if x_v.is_null() {
            return Err(Fail::Null("x_v"));
        } else {
            std::slice::from_raw_parts(x_v, x_v_len).to_vec()
        };
        let cond = Conditioning::new(n, outcomes)?;
        *v = best_conditioned_correlation(model, &cond, &gell_mann(model.local_dim()), n as i64)?.value;
        Ok(())
    })
}
