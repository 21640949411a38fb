//! C ABI over the `ringgraph` core.
//!
//! Every entry point returns an [`RgStatus`]. On failure a human-readable
//! message is kept per thread and can be read with [`rg_last_error`].
//! Objects are opaque handles created by `rg_*_new`/`rg_*_load`-style calls
//! and released with the matching `*_free`. Panics never cross the boundary;
//! they surface as `RG_STATUS_PANIC`.
//!
//! Complex arrays are interleaved `re, im` doubles, so a buffer for `n`
//! complex values holds `2n` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ringgraph::delays::transmission_delay;
use ringgraph::io::netlist_doc;
use ringgraph::metrics::asymmetry_spectrum;
use ringgraph::sweep::sweep_nudged;
use ringgraph::{build_ab_ring, Error, FrequencyGrid, FrequencySpectrum, GyratorMode, Netlist, RingParams, RingVariant};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument at the boundary: invalid UTF-8, wrong buffer length or
    /// an unknown enum value.
    InvalidArgument = 2,
    Domain = 3,
    Validation = 4,
    Resonance = 5,
    OutOfBand = 6,
    DegenerateJacobian = 7,
    Unsupported = 8,
    Parse = 9,
    Config = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgRingVariant {
    Balanced = 0,
    Unbalanced = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgGyrator {
    Composed = 0,
    Ideal = 1,
}

/// Two-port ring description. Lengths in m, attenuation in Np, phase in rad.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RgRingParams {
    pub circumference: f64,
    /// Per-bond attenuation; placed according to `variant`.
    pub gamma_half: f64,
    /// An `RgRingVariant` value.
    pub variant: u32,
    /// An `RgGyrator` value.
    pub gyrator: u32,
    pub gyrator_phase: f64,
    /// Non-zero enables distributed cable loss.
    pub uniform_loss: i32,
}

/// Opaque circuit handle.
pub struct RgNetlist(Netlist);

/// Opaque swept S-matrix handle.
pub struct RgSpectrum(FrequencySpectrum);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RgStatus {
    match e {
        Error::Domain(_) => RgStatus::Domain,
        Error::Validation(_) => RgStatus::Validation,
        Error::Resonance { .. } => RgStatus::Resonance,
        Error::OutOfBand { .. } => RgStatus::OutOfBand,
        Error::DegenerateJacobian(_) => RgStatus::DegenerateJacobian,
        Error::Unsupported(_) => RgStatus::Unsupported,
        Error::Parse { .. } => RgStatus::Parse,
        Error::Config(_) => RgStatus::Config,
        Error::Io { .. } => RgStatus::Io,
    }
}

struct Fail(RgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let msg = match &e {
            Error::Validation(d) => {
                let lines: Vec<String> = d.iter().map(|x| x.to_string()).collect();
                format!("{e}: {}", lines.join("; "))
            }
            _ => e.to_string(),
        };
        Fail(status_of(&e), msg)
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(RgStatus::InvalidArgument, msg.into())
}

/// Run `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> RgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RgStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RgStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail(RgStatus::NullPointer, "null handle".into()))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(RgStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("string is not valid UTF-8"))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail(RgStatus::NullPointer, "null output buffer".into()));
    }
    if len != need {
        return Err(invalid(format!("output buffer holds {len} doubles, {need} required")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(RgStatus::NullPointer, "null output handle".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Balanced ring with a composed π gyrator and no cable loss.
#[no_mangle]
pub extern "C" fn rg_ring_params_default(circumference: f64) -> RgRingParams {
    RgRingParams {
        circumference,
        gamma_half: 0.0,
        variant: RgRingVariant::Balanced as u32,
        gyrator: RgGyrator::Composed as u32,
        gyrator_phase: std::f64::consts::PI,
        uniform_loss: 0,
    }
}

/// Build the two-port ring.
///
/// # Safety
/// `params` must point to a valid struct and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rg_ring_new(params: *const RgRingParams, out: *mut *mut RgNetlist) -> RgStatus {
    guard(|| {
        let p = *borrow(params)?;
        let variant = match p.variant {
            0 => RingVariant::Balanced,
            1 => RingVariant::Unbalanced,
            v => return Err(invalid(format!("unknown ring variant {v}"))),
        };
        let mode = match p.gyrator {
            0 => GyratorMode::Composed,
            1 => GyratorMode::Ideal,
            v => return Err(invalid(format!("unknown gyrator mode {v}"))),
        };
        let rp = RingParams::lossless(p.circumference)
            .with_gamma_half(variant, p.gamma_half)
            .with_gyrator(mode, p.gyrator_phase)
            .with_uniform_loss(p.uniform_loss != 0);
        put(out, RgNetlist(build_ab_ring(&rp)?))
    })
}

/// Parse a netlist document from TOML text and validate it.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_netlist_parse(toml: *const c_char, out: *mut *mut RgNetlist) -> RgStatus {
    guard(|| {
        let n = netlist_doc::parse(text(toml)?)?;
        n.validate()?;
        put(out, RgNetlist(n))
    })
}

/// Load and validate a netlist document from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_netlist_load(path: *const c_char, out: *mut *mut RgNetlist) -> RgStatus {
    guard(|| {
        let n = netlist_doc::load(Path::new(text(path)?))?;
        put(out, RgNetlist(n))
    })
}

/// Number of external ports.
///
/// # Safety
/// `net` must be a live handle and `ports` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_netlist_ports(net: *const RgNetlist, ports: *mut usize) -> RgStatus {
    guard(|| {
        let n = &borrow(net)?.0;
        let count = n.prepare()?.external_port_count();
        *ports.as_mut().ok_or(Fail(RgStatus::NullPointer, "null output".into()))? = count;
        Ok(())
    })
}

/// # Safety
/// `net` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_netlist_free(net: *mut RgNetlist) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Sweep `net` over `n_points` uniformly spaced frequencies in Hz.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sweep(
    net: *const RgNetlist,
    f_start: f64,
    f_stop: f64,
    n_points: usize,
    out: *mut *mut RgSpectrum,
) -> RgStatus {
    guard(|| {
        let n = &borrow(net)?.0;
        let grid = FrequencyGrid::new(f_start, f_stop, n_points)?;
        put(out, RgSpectrum(sweep_nudged(n, &grid)?))
    })
}

/// # Safety
/// `spec` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_spectrum_free(spec: *mut RgSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Number of frequency points, or 0 for a NULL handle.
///
/// # Safety
/// `spec` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_spectrum_len(spec: *const RgSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.0.grid.len())
}

/// Number of ports, or 0 for a NULL handle.
///
/// # Safety
/// `spec` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_spectrum_ports(spec: *const RgSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.0.ports())
}

/// Copy the grid frequencies (Hz) into `out`, which holds `len` doubles.
///
/// # Safety
/// `spec` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rg_spectrum_frequencies(spec: *const RgSpectrum, out: *mut f64, len: usize) -> RgStatus {
    guard(|| {
        let s = &borrow(spec)?.0;
        let buf = out_slice(out, len, s.grid.len())?;
        for (k, v) in buf.iter_mut().enumerate() {
            *v = s.grid.freq(k);
        }
        Ok(())
    })
}

/// Copy `S[to][from]` (0-based ports) as interleaved complex values.
/// `len` must be twice the number of frequency points.
///
/// # Safety
/// `spec` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rg_spectrum_element(
    spec: *const RgSpectrum,
    to: usize,
    from: usize,
    out: *mut f64,
    len: usize,
) -> RgStatus {
    guard(|| {
        let s = &borrow(spec)?.0;
        let buf = out_slice(out, len, 2 * s.grid.len())?;
        let values = s.element(to, from)?;
        for (pair, z) in buf.chunks_exact_mut(2).zip(values) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// Complex transmission delay (s) of `S[to][from]` as interleaved values.
/// Points where the delay is undefined, including both grid ends, are NaN.
///
/// # Safety
/// `spec` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rg_transmission_delay(
    spec: *const RgSpectrum,
    from: usize,
    to: usize,
    out: *mut f64,
    len: usize,
) -> RgStatus {
    guard(|| {
        let s = &borrow(spec)?.0;
        let buf = out_slice(out, len, 2 * s.grid.len())?;
        let d = transmission_delay(s, from, to)?;
        for (k, pair) in buf.chunks_exact_mut(2).enumerate() {
            let (re, im) = if d.valid[k] { (d.values[k].re, d.values[k].im) } else { (f64::NAN, f64::NAN) };
            pair[0] = re;
            pair[1] = im;
        }
        Ok(())
    })
}

/// `|S21|² − |S12|²` per frequency point of a two-port spectrum.
///
/// # Safety
/// `spec` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rg_asymmetry(spec: *const RgSpectrum, out: *mut f64, len: usize) -> RgStatus {
    guard(|| {
        let s = &borrow(spec)?.0;
        let buf = out_slice(out, len, s.grid.len())?;
        buf.copy_from_slice(&asymmetry_spectrum(s)?);
        Ok(())
    })
}
