//! End-to-end fixed-point denoiser and its stimulus/response dump.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::format::{block_exponent, fx_quantize_counted, rescale_rne, FxValue, QFormat, SatCounter};
use super::noise::{noise_estimate_sorted, sorted_prefix_raw, FxNoiseConfig, FxNoiseEstimate};
use super::threshold::{fx_activity_and_threshold, FxThreshold, ThresholdTables};
use super::FxFormats;
use crate::beamspace::{dft, ChannelVector};
use crate::error::{invalid, Result};
use crate::estimators::DenoiserParams;

/// Format of the `1/alpha` constant.
pub const INV_ALPHA_FMT: QFormat = QFormat::q(16, 14);

/// Keeps entries whose squared magnitude `p` reaches `eta`, scaled by
/// `inv_alpha`; returns output real parts, imaginary parts and decisions.
#[allow(clippy::too_many_arguments)]
pub fn fx_denoise(
    re: &[i64],
    im: &[i64],
    p: &[i64],
    eta: FxThreshold,
    inv_alpha: FxValue,
    input_fmt: QFormat,
    output_fmt: QFormat,
    sat: &mut SatCounter,
) -> (Vec<i64>, Vec<i64>, Vec<bool>) {
    let from = (input_fmt.frac_bits + inv_alpha.fmt.frac_bits) as i32;
    let to = output_fmt.frac_bits as i32;
    let mut scale = |x: i64| sat.clamp(rescale_rne(x as i128 * inv_alpha.raw as i128, from, to), output_fmt);
    let mut out_re = Vec::with_capacity(re.len());
    let mut out_im = Vec::with_capacity(re.len());
    let mut decisions = Vec::with_capacity(re.len());
    for i in 0..re.len() {
        let keep = eta.passes(p[i]);
        decisions.push(keep);
        if keep {
            out_re.push(scale(re[i]));
            out_im.push(scale(im[i]));
        } else {
            out_re.push(0);
            out_im.push(0);
        }
    }
    (out_re, out_im, decisions)
}

/// Every intermediate of one fixed-point run. Power-domain quantities are
/// scaled by [`FxReport::power_scale`] relative to the input.
#[derive(Clone, Debug, PartialEq)]
pub struct FxReport {
    pub formats: FxFormats,
    pub antenna_exponent: i32,
    pub beamspace_exponent: i32,
    pub power_shift: i32,
    pub noise: FxNoiseEstimate,
    pub known_noise: bool,
    pub d0: FxValue,
    pub channel_power: FxValue,
    pub sdnr: FxValue,
    /// Set when the noise estimate is zero while signal is present.
    pub noise_free: bool,
    pub active_beams: usize,
    pub activity_degenerate: bool,
    pub eta: FxThreshold,
    pub inv_alpha: FxValue,
    pub decisions: Vec<bool>,
    pub saturations: u64,
    pub beamspace_re: Vec<i64>,
    pub beamspace_im: Vec<i64>,
    pub power: Vec<i64>,
    pub output_re: Vec<i64>,
    pub output_im: Vec<i64>,
}

impl FxReport {
    /// Factor between power-domain values here and at the input.
    pub fn power_scale(&self) -> f64 {
        ((2 * (self.antenna_exponent + self.beamspace_exponent) + self.power_shift) as f64).exp2()
    }

    pub fn eta_unscaled(&self) -> f64 {
        self.eta.to_f64() / self.power_scale()
    }

    pub fn d0_unscaled(&self) -> f64 {
        self.d0.to_f64() / self.power_scale()
    }
}

/// Fixed-point counterpart of [`crate::denoiser::denoise_pipeline`].
pub fn fx_pipeline(
    h: &ChannelVector,
    params: &DenoiserParams,
    alpha: f64,
    known_d0: Option<f64>,
    formats: &FxFormats,
) -> Result<(ChannelVector, FxReport)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha {alpha} outside (0, 1]")));
    }
    let m = h.len();
    let tables = ThresholdTables::new(m, params.cost_ratio)?;
    let noise_cfg = FxNoiseConfig::new(params, m)?;
    let mut sat = SatCounter::default();

    // antenna samples with a shared exponent
    let max_in = h.entries().iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
    let ea = block_exponent(max_in, formats.antenna);
    let ga = (ea as f64).exp2();
    let af = formats.antenna;
    let antenna: Vec<Complex64> = h
        .entries()
        .iter()
        .map(|z| {
            let re = fx_quantize_counted(z.re * ga, af, &mut sat).to_f64();
            let im = fx_quantize_counted(z.im * ga, af, &mut sat).to_f64();
            Complex64::new(re, im)
        })
        .collect();

    // beamspace samples with their own exponent
    let spec = dft(&antenna, false);
    let max_b = spec.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
    let bf = formats.beamspace;
    let eb = block_exponent(max_b, bf);
    let gb = (eb as f64).exp2();
    let (bre, bim): (Vec<i64>, Vec<i64>) = spec
        .iter()
        .map(|z| (fx_quantize_counted(z.re * gb, bf, &mut sat).raw, fx_quantize_counted(z.im * gb, bf, &mut sat).raw))
        .unzip();

    // squared magnitudes, renormalized into the power format
    let pf = formats.power;
    let sq: Vec<i64> = bre.iter().zip(&bim).map(|(&a, &b)| a * a + b * b).collect();
    let sq_frac = 2 * bf.frac_bits as i32;
    let max_sq = sq.iter().copied().max().unwrap_or(0);
    let shift = block_exponent(max_sq as f64 * (-sq_frac as f64).exp2(), pf);
    let p: Vec<i64> =
        sq.iter().map(|&x| sat.clamp(rescale_rne(x as i128, sq_frac - shift, pf.frac_bits as i32), pf)).collect();
    let power_scale = ((2 * (ea + eb) + shift) as f64).exp2();

    let (sorted, prefix) = sorted_prefix_raw(&p);
    let (noise, known_noise) = match known_d0 {
        Some(d) => {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid("known noise power must be finite and nonnegative"));
            }
            let v = fx_quantize_counted(d * power_scale, pf, &mut sat);
            (FxNoiseEstimate { trajectory: vec![v], retained: vec![], enlarged: vec![] }, true)
        }
        None => (noise_estimate_sorted(&sorted, &prefix, pf, &noise_cfg, &mut sat), false),
    };
    let d0 = noise.d0();

    // channel power and SDNR
    let total = *prefix.last().expect("M >= 2");
    let mean = total >> tables.log2_m;
    let channel_power = FxValue { raw: (mean - d0.raw).max(0), fmt: pf };
    let sf = formats.sdnr;
    let noise_free = d0.raw == 0 && channel_power.raw > 0;
    let sdnr = if d0.raw == 0 {
        FxValue { raw: if noise_free { sf.max_raw() } else { 0 }, fmt: sf }
    } else {
        let q = ((channel_power.raw as i128) << sf.frac_bits) / d0.raw as i128;
        sat.value(q, sf)
    };

    let act = fx_activity_and_threshold(&p, d0, channel_power, sdnr, &tables, &mut sat)?;
    let inv_alpha = fx_quantize_counted(1.0 / alpha, INV_ALPHA_FMT, &mut sat);
    let of = formats.output;
    let (ore, oim, decisions) = fx_denoise(&bre, &bim, &p, act.eta, inv_alpha, bf, of, &mut sat);

    let back = (-(ea + eb) as f64).exp2();
    let out_spec: Vec<Complex64> =
        ore.iter().zip(&oim).map(|(&a, &b)| Complex64::new(of.to_f64(a) * back, of.to_f64(b) * back)).collect();
    let out = ChannelVector::new(dft(&out_spec, true))?;

    let report = FxReport {
        formats: *formats,
        antenna_exponent: ea,
        beamspace_exponent: eb,
        power_shift: shift,
        noise,
        known_noise,
        d0,
        channel_power,
        sdnr,
        noise_free,
        active_beams: act.active_beams,
        activity_degenerate: act.degenerate,
        eta: act.eta,
        inv_alpha,
        decisions,
        saturations: sat.events,
        beamspace_re: bre,
        beamspace_im: bim,
        power: p,
        output_re: ore,
        output_im: oim,
    };
    Ok((out, report))
}

fn hex_lines(values: impl IntoIterator<Item = i64>, fmt: QFormat) -> String {
    let digits = fmt.word_bits.div_ceil(4) as usize;
    let mut s = String::new();
    for v in values {
        let _ = writeln!(s, "{:0digits$x}", fmt.bits(v));
    }
    s
}

fn interleave(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).flat_map(|(&x, &y)| [x, y]).collect()
}

/// Writes `<stem>_stimulus.hex` (beamspace I/Q interleaved),
/// `<stem>_power.hex`, `<stem>_scalars.hex` (final D0, channel power, SDNR,
/// active beams, threshold) and `<stem>_response.hex` (output I/Q
/// interleaved), one two's-complement word per line.
pub fn write_dump(dir: &Path, stem: &str, r: &FxReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let f = &r.formats;
    let eta_fmt = QFormat::q(32, f.power.frac_bits);
    let eta_raw = match r.eta {
        FxThreshold::Value(v) => v.raw,
        FxThreshold::AllNoise => eta_fmt.max_raw(),
        FxThreshold::AllSignal => eta_fmt.min_raw(),
    };
    let mut scalars = hex_lines([r.d0.raw, r.channel_power.raw], f.power);
    scalars += &hex_lines([r.sdnr.raw], f.sdnr);
    scalars += &hex_lines([r.active_beams as i64, eta_raw], QFormat::q(32, 0));
    let files = [
        ("stimulus", hex_lines(interleave(&r.beamspace_re, &r.beamspace_im), f.beamspace)),
        ("power", hex_lines(r.power.iter().copied(), f.power)),
        ("scalars", scalars),
        ("response", hex_lines(interleave(&r.output_re, &r.output_im), f.output)),
    ];
    for (name, body) in files {
        std::fs::write(dir.join(format!("{stem}_{name}.hex")), body)?;
    }
    Ok(())
}
