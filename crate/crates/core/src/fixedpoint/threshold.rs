//! Integer activity estimate and split-logarithm threshold.

use super::format::{shr_rne, FxValue, QFormat, SatCounter};
use super::log::{ln_const, ln_int_table, PwlLogTable, LOG_FRAC};
use crate::error::{invalid, Result};

/// Format of `qM / (M S)`.
pub const RATIO_FMT: QFormat = QFormat::q(32, LOG_FRAC);

/// Fixed-point threshold or a degenerate decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FxThreshold {
    Value(FxValue),
    /// SDNR estimate is zero: every entry is noise.
    AllNoise,
    /// Every beam is estimated active.
    AllSignal,
}

impl FxThreshold {
    /// Whether a squared magnitude with the threshold's raw scale passes.
    pub fn passes(&self, p_raw: i64) -> bool {
        match self {
            FxThreshold::Value(v) => p_raw >= v.raw,
            FxThreshold::AllNoise => false,
            FxThreshold::AllSignal => true,
        }
    }

    /// Real value, `+inf` / `-inf` for the degenerate cases.
    pub fn to_f64(&self) -> f64 {
        match self {
            FxThreshold::Value(v) => v.to_f64(),
            FxThreshold::AllNoise => f64::INFINITY,
            FxThreshold::AllSignal => f64::NEG_INFINITY,
        }
    }
}

/// Per-`M` constant tables for the threshold unit.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTables {
    pub m: usize,
    pub log2_m: u32,
    pub ln_int: Vec<i64>,
    pub ln_cost: FxValue,
    pub pwl: PwlLogTable,
}

impl ThresholdTables {
    pub fn new(m: usize, cost_ratio: f64) -> Result<Self> {
        if !m.is_power_of_two() || m < 2 {
            return Err(invalid(format!("fixed-point datapath needs M a power of two >= 2, got {m}")));
        }
        if !(cost_ratio > 0.0 && cost_ratio.is_finite()) {
            return Err(invalid("cost ratio must be positive"));
        }
        Ok(Self {
            m,
            log2_m: m.trailing_zeros(),
            ln_int: ln_int_table(m),
            ln_cost: ln_const(cost_ratio),
            pwl: PwlLogTable::default(),
        })
    }
}

/// Result of the activity/threshold unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FxActivityThreshold {
    pub active_beams: usize,
    /// Set when the fourth-moment denominator was not positive.
    pub degenerate: bool,
    pub eta: FxThreshold,
}

/// Computes `qM` and `eta` from squared magnitudes `p`, noise `d0`, channel
/// power `power` (all in one power format) and SDNR `sdnr`.
///
/// `d0 = 0` with positive SDNR yields the smallest positive threshold.
pub fn fx_activity_and_threshold(
    p: &[i64],
    d0: FxValue,
    power: FxValue,
    sdnr: FxValue,
    tables: &ThresholdTables,
    sat: &mut SatCounter,
) -> Result<FxActivityThreshold> {
    let m = tables.m;
    if p.len() != m {
        return Err(invalid(format!("expected {m} magnitudes, got {}", p.len())));
    }
    if d0.fmt != power.fmt {
        return Err(invalid("noise and channel power must share a format"));
    }
    let pf = d0.fmt;
    let eta_fmt = QFormat::q(32, pf.frac_bits);
    let lm = tables.log2_m;
    let (d, pw, s) = (d0.raw as i128, power.raw as i128, sdnr.raw as i128);

    let all_active = |eta| FxActivityThreshold { active_beams: m, degenerate: true, eta };
    if s <= 0 {
        return Ok(all_active(FxThreshold::AllNoise));
    }
    if d == 0 {
        let eta = FxThreshold::Value(FxValue { raw: 1, fmt: eta_fmt });
        return Ok(all_active(eta));
    }

    // sum p^2 - 2 M d^2 - 4 M d P, all at 2F fractional bits
    let s4: i128 = p.iter().map(|&x| (x as i128) * (x as i128)).sum();
    let den = s4 - ((d * d) << (lm + 1)) - ((d * pw) << (lm + 2));
    let (active_beams, degenerate) = if den <= 0 {
        (m, true)
    } else {
        let num = (pw * pw) << (2 * lm + 1);
        // one extra quotient bit, then round half up
        let q2 = (num << 1) / den;
        (((q2 + 1) >> 1).clamp(1, m as i128) as usize, false)
    };
    if active_beams == m {
        return Ok(FxActivityThreshold { active_beams, degenerate, eta: FxThreshold::AllSignal });
    }

    let sf = sdnr.fmt.frac_bits;
    let qm = active_beams as i128;
    let ms = s << lm;
    let ln_sum = (qm << sf) + ms;
    let logs = tables.pwl.ln_raw(ln_sum, sf) as i128 - 2 * tables.ln_int[active_beams] as i128
        + tables.ln_int[m - active_beams] as i128
        + tables.ln_cost.raw as i128;
    let ratio = sat.clamp((qm << (LOG_FRAC + sf)) / ms, RATIO_FMT) as i128;
    let factor = (1i128 << LOG_FRAC) + ratio;
    let eta = shr_rne(d * factor * logs, 2 * LOG_FRAC);
    Ok(FxActivityThreshold { active_beams, degenerate, eta: FxThreshold::Value(sat.value(eta, eta_fmt)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::compute_threshold_hw_form;
    use crate::estimators::estimate_activity;
    use crate::fixedpoint::format::fx_quantize;

    const PF: QFormat = QFormat::q(24, 16);
    const SF: QFormat = QFormat::q(32, 16);

    #[test]
    fn sentinels() {
        let t = ThresholdTables::new(8, 4.0).unwrap();
        let p = vec![100i64; 8];
        let mut sat = SatCounter::default();
        let z = fx_quantize(0.0, PF);
        let one = fx_quantize(1.0, PF);
        let r = fx_activity_and_threshold(&p, one, z, fx_quantize(0.0, SF), &t, &mut sat).unwrap();
        assert_eq!(r.eta, FxThreshold::AllNoise);
        let r = fx_activity_and_threshold(&p, z, one, fx_quantize(5.0, SF), &t, &mut sat).unwrap();
        assert!(r.eta.passes(1) && !r.eta.passes(0));
        // flat magnitudes: denominator is negative
        let r = fx_activity_and_threshold(&p, one, one, fx_quantize(1.0, SF), &t, &mut sat).unwrap();
        assert_eq!(r.eta, FxThreshold::AllSignal);
        assert!(r.degenerate);
        assert!(ThresholdTables::new(12, 4.0).is_err());
    }

    #[test]
    fn matches_float_on_a_sparse_vector() {
        let m = 64;
        let t = ThresholdTables::new(m, 4.0).unwrap();
        let mut pv = vec![0.8f64; m];
        for (i, v) in pv.iter_mut().enumerate() {
            *v += 0.4 * ((i * 7 % 11) as f64 / 11.0);
        }
        pv[3] = 40.0;
        pv[17] = 25.0;
        pv[50] = 12.0;
        let p: Vec<i64> = pv.iter().map(|&x| fx_quantize(x, PF).raw).collect();
        let pq: Vec<f64> = p.iter().map(|&r| PF.to_f64(r)).collect();
        let d0 = 1.0;
        let mean = pq.iter().sum::<f64>() / m as f64;
        let power = mean - d0;
        let s = power / d0;
        let mut sat = SatCounter::default();
        let r = fx_activity_and_threshold(
            &p,
            fx_quantize(d0, PF),
            fx_quantize(power, PF),
            fx_quantize(s, SF),
            &t,
            &mut sat,
        )
        .unwrap();
        let act = estimate_activity(&pq, d0, s);
        assert_eq!(r.active_beams, act.active_beams);
        let eta = compute_threshold_hw_form(d0, s, act.active_beams, m, 4.0).unwrap();
        assert!((r.eta.to_f64() / eta - 1.0).abs() < 0.01, "{} vs {eta}", r.eta.to_f64());
        assert_eq!(sat.events, 0);
    }
}
