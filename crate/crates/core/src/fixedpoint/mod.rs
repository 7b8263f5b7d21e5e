//! Bit-accurate model of the denoiser datapath.
//!
//! Antenna samples, beamspace samples and squared magnitudes are stored in
//! two's-complement Q formats with per-vector power-of-two block exponents.
//! The noise estimator works on a sorted array and its prefix sums, the
//! threshold uses integer tables and a piecewise-linear logarithm, and every
//! narrowing step rounds to nearest even and saturates. The DFT itself is
//! evaluated in floating point on the quantized samples.

mod format;
mod log;
mod noise;
mod pipeline;
mod threshold;

pub use format::{
    block_exponent, fx_quantize, fx_quantize_counted, rescale_rne, shr_rne, FxValue, QFormat, SatCounter,
};
pub use log::{ln_const, ln_int_table, pwl_ln, PwlLogTable, LOG_FMT, LOG_FRAC};
pub use noise::{
    fx_noise_estimator, fx_sorted_prefix, FxNoiseConfig, FxNoiseEstimate, DIVIDER_GUARD_BITS, LUT_FMT, LUT_FRAC,
};
pub use pipeline::{fx_denoise, fx_pipeline, write_dump, FxReport, INV_ALPHA_FMT};
pub use threshold::{fx_activity_and_threshold, FxActivityThreshold, FxThreshold, ThresholdTables, RATIO_FMT};

/// Storage formats of the datapath quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FxFormats {
    pub antenna: QFormat,
    pub beamspace: QFormat,
    /// Squared magnitudes, noise power and channel power.
    pub power: QFormat,
    pub sdnr: QFormat,
    pub output: QFormat,
}

impl FxFormats {
    /// Antenna 16/8, beamspace 10/8, power 16/8, SDNR 24/8, output 12/8.
    pub const fn declared() -> Self {
        Self {
            antenna: QFormat::q(16, 8),
            beamspace: QFormat::q(10, 8),
            power: QFormat::q(16, 8),
            sdnr: QFormat::q(24, 8),
            output: QFormat::q(12, 8),
        }
    }

    /// Declared formats with 16 fractional bits on power (24/16) and SDNR
    /// (32/16), keeping the same integer range.
    pub const fn extended() -> Self {
        Self { power: QFormat::q(24, 16), sdnr: QFormat::q(32, 16), ..Self::declared() }
    }
}

impl Default for FxFormats {
    fn default() -> Self {
        Self::declared()
    }
}

impl std::str::FromStr for FxFormats {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "declared" => Ok(Self::declared()),
            "extended" => Ok(Self::extended()),
            other => Err(crate::error::invalid(format!("unknown format set {other:?}"))),
        }
    }
}
