//! Bayesian hard-threshold denoising in the beamspace domain.
//!
//! Each beamspace entry is either noise only or signal plus noise. The
//! threshold `eta` on `|h'_m|^2` follows from the estimated noise power,
//! SDNR, activity rate and cost ratio; entries at or above it are kept and
//! rescaled by `1/alpha`, the rest are zeroed.

use std::fmt::Write as _;

use crate::beamspace::{from_beamspace, magnitudes_squared, to_beamspace, BeamspaceVector, ChannelVector};
use crate::error::{invalid, Result};
use crate::estimators::{
    estimate_activity, estimate_channel_power, estimate_noise_power, estimate_sdnr, DenoiserParams, NoiseEstimate,
};

/// Threshold assigned when the noise estimate is zero: every nonzero entry passes.
pub const NOISE_FREE_THRESHOLD: f64 = f64::MIN_POSITIVE;

/// Estimated quantities that determine the threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdInputs {
    pub d0: f64,
    pub sdnr: f64,
    /// Activity rate in `(0, 1]`.
    pub q: f64,
    pub cost_ratio: f64,
}

fn validate_common(d0: f64, sdnr: f64, cost_ratio: f64) -> Result<()> {
    if !(d0 >= 0.0 && d0.is_finite()) {
        return Err(invalid(format!("noise power {d0} must be finite and nonnegative")));
    }
    if !(sdnr >= 0.0) {
        return Err(invalid(format!("SDNR {sdnr} must be nonnegative")));
    }
    if !(cost_ratio > 0.0 && cost_ratio.is_finite()) {
        return Err(invalid(format!("cost ratio {cost_ratio} must be positive")));
    }
    Ok(())
}

/// Degenerate cases shared by both threshold forms, checked in priority order.
fn sentinel(d0: f64, sdnr: f64, all_active: bool) -> Option<f64> {
    if sdnr == 0.0 {
        Some(f64::INFINITY)
    } else if d0 == 0.0 || sdnr.is_infinite() {
        Some(NOISE_FREE_THRESHOLD)
    } else if all_active {
        Some(f64::NEG_INFINITY)
    } else {
        None
    }
}

/// `eta = D0 (1 + q/S) ln((1 + S/q) (1 - q)/q C)`.
///
/// `S = 0` gives `+inf` (all noise), `q = 1` gives `-inf` (all signal) and
/// `D0 = 0` gives [`NOISE_FREE_THRESHOLD`].
pub fn compute_threshold(t: &ThresholdInputs) -> Result<f64> {
    validate_common(t.d0, t.sdnr, t.cost_ratio)?;
    if !(t.q > 0.0 && t.q <= 1.0) {
        return Err(invalid(format!("activity rate {} outside (0, 1]", t.q)));
    }
    if let Some(s) = sentinel(t.d0, t.sdnr, t.q == 1.0) {
        return Ok(s);
    }
    let (q, s) = (t.q, t.sdnr);
    Ok(t.d0 * (1.0 + q / s) * ((1.0 + s / q) * (1.0 - q) / q * t.cost_ratio).ln())
}

/// Same threshold with the logarithm split into per-term pieces indexed by
/// the integer active-beam count:
/// `ln(1 + M S / qM) + ln(M - qM) - ln qM + ln C`.
pub fn compute_threshold_hw_form(d0: f64, sdnr: f64, active_beams: usize, m: usize, cost_ratio: f64) -> Result<f64> {
    validate_common(d0, sdnr, cost_ratio)?;
    if active_beams == 0 || active_beams > m {
        return Err(invalid(format!("active beams {active_beams} outside [1, {m}]")));
    }
    if let Some(s) = sentinel(d0, sdnr, active_beams == m) {
        return Ok(s);
    }
    let (qm, mf) = (active_beams as f64, m as f64);
    let log_sum = (mf * sdnr / qm).ln_1p() + (mf - qm).ln() - qm.ln() + cost_ratio.ln();
    Ok(d0 * (1.0 + qm / (mf * sdnr)) * log_sum)
}

/// Signal-to-noise density ratio `f1(x)/f0(x)` of the two hypotheses at
/// `|h'|^2 = x`, for `CN(0, D0 (1 + S/q))` against `CN(0, D0)`.
pub fn likelihood_ratio(x: f64, d0: f64, sdnr: f64, q: f64) -> f64 {
    let g = sdnr / q;
    (x / d0 * g / (1.0 + g)).exp() / (1.0 + g)
}

/// Thresholded beamspace vector with its per-entry decisions.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoiseResult {
    pub beamspace: BeamspaceVector,
    /// `true` where the entry was kept.
    pub decisions: Vec<bool>,
    pub eta: f64,
}

impl DenoiseResult {
    pub fn support_size(&self) -> usize {
        self.decisions.iter().filter(|&&d| d).count()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha {alpha} outside (0, 1]")));
    }
    Ok(())
}

/// Keeps `h'_m / alpha` where `|h'_m|^2 >= eta`, zero elsewhere.
pub fn denoise(hb: &BeamspaceVector, eta: f64, alpha: f64) -> Result<DenoiseResult> {
    check_alpha(alpha)?;
    if eta.is_nan() {
        return Err(invalid("threshold is NaN"));
    }
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let (entries, decisions): (Vec<_>, Vec<_>) =
        hb.entries().iter().map(|&z| if z.norm_sqr() >= eta { (z / alpha, true) } else { (zero, false) }).unzip();
    Ok(DenoiseResult { beamspace: BeamspaceVector::from_vec(entries), decisions, eta })
}

/// Every intermediate of one denoiser run.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationReport {
    pub noise: NoiseEstimate,
    /// Whether the noise power was supplied rather than estimated.
    pub known_noise: bool,
    pub d0: f64,
    pub channel_power: f64,
    pub sdnr: f64,
    pub active_beams: usize,
    pub activity_rate: f64,
    /// Set when the activity estimate fell back to `M`.
    pub activity_degenerate: bool,
    pub eta: f64,
    pub decisions: Vec<bool>,
}

impl EstimationReport {
    pub const CSV_HEADER: &'static str =
        "trial,snr_db,bits,d0_trajectory,channel_power,sdnr,activity_rate,active_beams,eta,support";

    /// One CSV line; the noise trajectory is `;`-separated.
    pub fn csv_row(&self, trial: u64, snr_db: f64, bits: &str) -> String {
        let mut traj = String::new();
        for (i, d) in self.noise.trajectory.iter().enumerate() {
            if i > 0 {
                traj.push(';');
            }
            let _ = write!(traj, "{d:.9e}");
        }
        format!(
            "{trial},{snr_db},{bits},{traj},{:.9e},{:.9e},{},{},{:.9e},{}",
            self.channel_power,
            self.sdnr,
            self.activity_rate,
            self.active_beams,
            self.eta,
            self.decisions.iter().filter(|&&d| d).count()
        )
    }
}

/// Scalar estimates from squared magnitudes, before thresholding.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimates {
    pub noise: NoiseEstimate,
    pub known_noise: bool,
    pub channel_power: f64,
    pub sdnr: f64,
    pub active_beams: usize,
    pub activity_degenerate: bool,
    pub eta: f64,
}

/// Noise power (estimated or supplied), channel power, SDNR, activity and threshold.
pub fn estimate_threshold(p: &[f64], params: &DenoiserParams, known_d0: Option<f64>) -> Result<Estimates> {
    let (noise, known_noise) = match known_d0 {
        Some(d0) => {
            if !(d0 >= 0.0 && d0.is_finite()) {
                return Err(invalid(format!("known noise power {d0} must be finite and nonnegative")));
            }
            params.validate()?;
            (NoiseEstimate { trajectory: vec![d0], retained: vec![], enlarged: vec![] }, true)
        }
        None => (estimate_noise_power(p, params)?, false),
    };
    let d0 = noise.d0();
    let channel_power = estimate_channel_power(p, d0);
    let sdnr = estimate_sdnr(p, d0);
    let m = p.len();
    let act = if d0 > 0.0 && sdnr > 0.0 {
        estimate_activity(p, d0, sdnr)
    } else {
        crate::estimators::ActivityEstimate { active_beams: m, degenerate: true }
    };
    let eta = compute_threshold_hw_form(d0, sdnr, act.active_beams, m, params.cost_ratio)?;
    Ok(Estimates {
        noise,
        known_noise,
        channel_power,
        sdnr,
        active_beams: act.active_beams,
        activity_degenerate: act.degenerate,
        eta,
    })
}

/// Estimation and thresholding on a beamspace observation.
pub fn denoise_beamspace(
    hb: &BeamspaceVector,
    params: &DenoiserParams,
    alpha: f64,
    known_d0: Option<f64>,
) -> Result<(DenoiseResult, EstimationReport)> {
    check_alpha(alpha)?;
    let p = magnitudes_squared(hb);
    let est = estimate_threshold(&p, params, known_d0)?;
    let result = denoise(hb, est.eta, alpha)?;
    let m = hb.len();
    let report = EstimationReport {
        d0: est.noise.d0(),
        noise: est.noise,
        known_noise: est.known_noise,
        channel_power: est.channel_power,
        sdnr: est.sdnr,
        active_beams: est.active_beams,
        activity_rate: est.active_beams as f64 / m as f64,
        activity_degenerate: est.activity_degenerate,
        eta: est.eta,
        decisions: result.decisions.clone(),
    };
    Ok((result, report))
}

/// Antenna-domain observation in, antenna-domain denoised channel out.
pub fn denoise_pipeline(
    h: &ChannelVector,
    params: &DenoiserParams,
    alpha: f64,
    known_d0: Option<f64>,
) -> Result<(ChannelVector, EstimationReport)> {
    let (result, report) = denoise_beamspace(&to_beamspace(h), params, alpha, known_d0)?;
    Ok((from_beamspace(&result.beamspace), report))
}
