//! C ABI for the beamspace channel denoiser.
//!
//! A `BsdDenoiser` handle owns the denoiser parameters and the ADC model.
//! Complex vectors cross the boundary as interleaved `re, im` doubles.
//! Every function returns a [`BsdStatus`]; on failure a message for the
//! calling thread is available from [`bsd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use beamspace_denoiser::denoiser::denoise_pipeline;
use beamspace_denoiser::fixedpoint::{fx_pipeline, FxFormats};
use beamspace_denoiser::{ChannelVector, DenoiserParams, Error, QuantizerModel, Resolution};
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    NoConvergence = 4,
    Internal = 5,
    Panic = 6,
}

/// Fixed-point storage format set.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsdFxFormats {
    /// Power 16/8, SDNR 24/8.
    Declared = 0,
    /// Power 24/16, SDNR 32/16.
    Extended = 1,
}

/// Denoiser tuning. `min_retained = 0` selects `max(8, M/8)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BsdParams {
    pub cost_ratio: f64,
    pub confidence: f64,
    pub confidence_enlarged: f64,
    pub min_retained: usize,
    pub iterations: usize,
    pub strict_kappa: bool,
}

impl From<&DenoiserParams> for BsdParams {
    fn from(p: &DenoiserParams) -> Self {
        Self {
            cost_ratio: p.cost_ratio,
            confidence: p.confidence,
            confidence_enlarged: p.confidence_enlarged,
            min_retained: p.min_retained.unwrap_or(0),
            iterations: p.iterations,
            strict_kappa: p.strict_kappa,
        }
    }
}

impl From<&BsdParams> for DenoiserParams {
    fn from(p: &BsdParams) -> Self {
        Self {
            cost_ratio: p.cost_ratio,
            confidence: p.confidence,
            confidence_enlarged: p.confidence_enlarged,
            min_retained: (p.min_retained > 0).then_some(p.min_retained),
            iterations: p.iterations,
            strict_kappa: p.strict_kappa,
        }
    }
}

/// Estimates from one denoiser run. Thresholds may be `+inf` (everything
/// removed) or `-inf` (everything kept).
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BsdReport {
    pub d0: f64,
    pub channel_power: f64,
    pub sdnr: f64,
    pub activity_rate: f64,
    pub eta: f64,
    pub active_beams: usize,
    pub support: usize,
    pub activity_degenerate: bool,
    pub known_noise: bool,
    /// Saturation events (fixed point only).
    pub saturations: u64,
}

/// Opaque denoiser handle.
pub struct BsdDenoiser {
    params: DenoiserParams,
    alpha: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BsdStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => BsdStatus::InvalidArgument,
        Error::NonFinite { .. } => BsdStatus::NonFinite,
        Error::NoConvergence { .. } => BsdStatus::NoConvergence,
        _ => BsdStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BsdStatus>) -> BsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BsdStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            BsdStatus::Panic
        }
    }
}

fn fail(e: Error) -> BsdStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> BsdStatus {
    set_error(&format!("{what} is null"));
    BsdStatus::NullPointer
}

fn resolution(bits: u32) -> Resolution {
    if bits == 0 {
        Resolution::Infinite
    } else {
        Resolution::Bits(bits)
    }
}

/// Writes the default parameters to `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bsd_params_default(out: *mut BsdParams) -> BsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = BsdParams::from(&DenoiserParams::default());
        Ok(())
    })
}

/// Creates a denoiser for an ADC with `bits` resolution (0 for none).
/// `params` may be null for defaults. The handle is written to `out` and
/// must be released with [`bsd_denoiser_free`].
///
/// # Safety
/// `params` must be null or point to a valid `BsdParams`; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bsd_denoiser_new(
    bits: u32,
    params: *const BsdParams,
    out: *mut *mut BsdDenoiser,
) -> BsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let params = if params.is_null() { DenoiserParams::default() } else { DenoiserParams::from(&*params) };
        params.validate().map_err(fail)?;
        let alpha = QuantizerModel::cached(resolution(bits)).map_err(fail)?.alpha();
        *out = Box::into_raw(Box::new(BsdDenoiser { params, alpha }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must be null or come from [`bsd_denoiser_new`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn bsd_denoiser_free(handle: *mut BsdDenoiser) {
    if !handle.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(handle))));
    }
}

/// Replaces the parameters of a handle. On error the handle is unchanged.
///
/// # Safety
/// `handle` and `params` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsd_denoiser_set_params(handle: *mut BsdDenoiser, params: *const BsdParams) -> BsdStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let params = DenoiserParams::from(p);
        params.validate().map_err(fail)?;
        h.params = params;
        Ok(())
    })
}

/// Reads the current parameters.
///
/// # Safety
/// `handle` must be valid and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bsd_denoiser_params(handle: *const BsdDenoiser, out: *mut BsdParams) -> BsdStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = BsdParams::from(&h.params);
        Ok(())
    })
}

/// Bussgang gain of the handle's ADC model.
///
/// # Safety
/// `handle` must be valid and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bsd_denoiser_alpha(handle: *const BsdDenoiser, out: *mut f64) -> BsdStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = h.alpha;
        Ok(())
    })
}

unsafe fn read_input(input: *const f64, m: usize) -> Result<ChannelVector, BsdStatus> {
    if input.is_null() {
        return Err(null("input"));
    }
    if m < 2 {
        return Err(fail(Error::InvalidArgument(format!("need at least 2 antennas, got {m}"))));
    }
    let raw = std::slice::from_raw_parts(input, 2 * m);
    let v = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    ChannelVector::new(v).map_err(fail)
}

unsafe fn write_output(h: &ChannelVector, output: *mut f64) {
    let out = std::slice::from_raw_parts_mut(output, 2 * h.len());
    for (pair, z) in out.chunks_exact_mut(2).zip(h.entries()) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
}

fn known(d0: f64) -> Option<f64> {
    (!d0.is_nan()).then_some(d0)
}

/// Denoises `m` antenna samples (`2m` interleaved doubles) into `output`
/// (`2m` doubles, may alias `input`). `known_d0` is the composite noise
/// power, or NaN to estimate it. `report` may be null.
///
/// # Safety
/// `input` must be readable and `output` writable for `2m` doubles;
/// `report` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bsd_denoise(
    handle: *const BsdDenoiser,
    input: *const f64,
    m: usize,
    known_d0: f64,
    output: *mut f64,
    report: *mut BsdReport,
) -> BsdStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if output.is_null() {
            return Err(null("output"));
        }
        let y = read_input(input, m)?;
        let (out, r) = denoise_pipeline(&y, &h.params, h.alpha, known(known_d0)).map_err(fail)?;
        write_output(&out, output);
        if let Some(rep) = report.as_mut() {
            *rep = BsdReport {
                d0: r.d0,
                channel_power: r.channel_power,
                sdnr: r.sdnr,
                activity_rate: r.activity_rate,
                eta: r.eta,
                active_beams: r.active_beams,
                support: r.decisions.iter().filter(|&&d| d).count(),
                activity_degenerate: r.activity_degenerate,
                known_noise: r.known_noise,
                saturations: 0,
            };
        }
        Ok(())
    })
}

/// Bit-accurate fixed-point counterpart of [`bsd_denoise`]. `m` must be a
/// power of two and the confidence scalars powers of two. Reported
/// quantities are rescaled to the input's units.
///
/// # Safety
/// Same as [`bsd_denoise`].
#[no_mangle]
pub unsafe extern "C" fn bsd_denoise_fixed(
    handle: *const BsdDenoiser,
    input: *const f64,
    m: usize,
    known_d0: f64,
    formats: BsdFxFormats,
    output: *mut f64,
    report: *mut BsdReport,
) -> BsdStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if output.is_null() {
            return Err(null("output"));
        }
        let y = read_input(input, m)?;
        let f = match formats {
            BsdFxFormats::Declared => FxFormats::declared(),
            BsdFxFormats::Extended => FxFormats::extended(),
        };
        let (out, r) = fx_pipeline(&y, &h.params, h.alpha, known(known_d0), &f).map_err(fail)?;
        write_output(&out, output);
        if let Some(rep) = report.as_mut() {
            *rep = BsdReport {
                d0: r.d0_unscaled(),
                channel_power: r.channel_power.to_f64() / r.power_scale(),
                sdnr: r.sdnr.to_f64(),
                activity_rate: r.active_beams as f64 / m as f64,
                eta: r.eta_unscaled(),
                active_beams: r.active_beams,
                support: r.decisions.iter().filter(|&&d| d).count(),
                activity_degenerate: r.activity_degenerate,
                known_noise: r.known_noise,
                saturations: r.saturations,
            };
        }
        Ok(())
    })
}

/// Message for the last failed call on this thread, empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bsd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn bsd_status_name(status: BsdStatus) -> *const c_char {
    let s: &'static CStr = match status {
        BsdStatus::Ok => c"ok",
        BsdStatus::NullPointer => c"null pointer",
        BsdStatus::InvalidArgument => c"invalid argument",
        BsdStatus::NonFinite => c"non-finite input",
        BsdStatus::NoConvergence => c"no convergence",
        BsdStatus::Internal => c"internal error",
        BsdStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Library version string.
#[no_mangle]
pub extern "C" fn bsd_version() -> *const c_char {
    const V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    V.as_ptr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_roundtrip() {
        let d = DenoiserParams { min_retained: Some(5), ..Default::default() };
        assert_eq!(DenoiserParams::from(&BsdParams::from(&d)), d);
        assert_eq!(DenoiserParams::from(&BsdParams::from(&DenoiserParams::default())), DenoiserParams::default());
    }

    #[test]
    fn status_names_are_static() {
        let s = unsafe { CStr::from_ptr(bsd_status_name(BsdStatus::NullPointer)) };
        assert_eq!(s.to_str().unwrap(), "null pointer");
    }
}
