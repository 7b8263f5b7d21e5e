//! Sorted prefix-sum realization of the iterative noise-power estimator.

use std::f64::consts::LN_2;

use super::format::{shr_rne, FxValue, QFormat, SatCounter};
use crate::error::{invalid, Result};
use crate::estimators::{kappa, DenoiserParams};

/// Fractional bits of the multiplicative LUT constants (`1/ln 2`, `1/kappa`).
pub const LUT_FRAC: u32 = 20;
/// Format of the multiplicative LUT constants.
pub const LUT_FMT: QFormat = QFormat::q(24, LUT_FRAC);
/// Extra quotient bits produced by the truncating mean divider.
pub const DIVIDER_GUARD_BITS: u32 = 14;

/// Ascending sort plus inclusive prefix sums in an accumulator widened by
/// `ceil(log2 M)` bits.
pub fn fx_sorted_prefix(p: &[FxValue]) -> Result<(Vec<FxValue>, Vec<FxValue>)> {
    let fmt = match p.first() {
        Some(v) => v.fmt,
        None => return Err(invalid("empty input")),
    };
    if p.iter().any(|v| v.fmt != fmt) {
        return Err(invalid("mixed formats"));
    }
    let raws: Vec<i64> = p.iter().map(|v| v.raw).collect();
    let (sorted, prefix) = sorted_prefix_raw(&raws);
    let acc = QFormat::wide(fmt.word_bits + (p.len() as u64).next_power_of_two().trailing_zeros(), fmt.frac_bits);
    Ok((
        sorted.into_iter().map(|raw| FxValue { raw, fmt }).collect(),
        prefix.into_iter().map(|raw| FxValue { raw, fmt: acc }).collect(),
    ))
}

pub(crate) fn sorted_prefix_raw(p: &[i64]) -> (Vec<i64>, Vec<i64>) {
    let mut sorted = p.to_vec();
    sorted.sort_unstable();
    let prefix = sorted
        .iter()
        .scan(0i64, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    (sorted, prefix)
}

fn lut(x: f64) -> i64 {
    (x * (LUT_FRAC as f64).exp2()).round_ties_even() as i64
}

fn shift_for(c: f64) -> Result<u32> {
    let k = c.log2();
    if !(c >= 1.0 && k.fract() == 0.0 && k <= 16.0) {
        return Err(invalid(format!("confidence scalar {c} must be a power of two >= 1")));
    }
    Ok(k as u32)
}

/// Shift amounts and LUT constants for the estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct FxNoiseConfig {
    pub c_shift: u32,
    pub c_enlarged_shift: u32,
    pub min_retained: usize,
    pub iterations: usize,
    pub inv_ln2: FxValue,
    pub inv_kappa: FxValue,
    pub inv_kappa_enlarged: FxValue,
}

impl FxNoiseConfig {
    pub fn new(params: &DenoiserParams, m: usize) -> Result<Self> {
        params.validate()?;
        let kc = kappa(params.confidence)?;
        let kcp = if params.strict_kappa { kc } else { kappa(params.confidence_enlarged)? };
        let c = |x: f64| FxValue { raw: lut(x), fmt: LUT_FMT };
        Ok(Self {
            c_shift: shift_for(params.confidence)?,
            c_enlarged_shift: shift_for(params.confidence_enlarged)?,
            min_retained: params.min_retained_for(m),
            iterations: params.iterations,
            inv_ln2: c(1.0 / LN_2),
            inv_kappa: c(1.0 / kc),
            inv_kappa_enlarged: c(1.0 / kcp),
        })
    }
}

/// Fixed-point noise estimate with its per-iteration state.
#[derive(Clone, Debug, PartialEq)]
pub struct FxNoiseEstimate {
    pub trajectory: Vec<FxValue>,
    pub retained: Vec<usize>,
    pub enlarged: Vec<bool>,
}

impl FxNoiseEstimate {
    pub fn d0(&self) -> FxValue {
        *self.trajectory.last().expect("trajectory is never empty")
    }
}

/// Runs the estimator on sorted values and their prefix sums, all in `fmt`.
pub(crate) fn noise_estimate_sorted(
    sorted: &[i64],
    prefix: &[i64],
    fmt: QFormat,
    cfg: &FxNoiseConfig,
    sat: &mut SatCounter,
) -> FxNoiseEstimate {
    let m = sorted.len();
    let half = m / 2;
    let d_init = if m.is_multiple_of(2) {
        let two_med = sorted[half - 1] as i128 + sorted[half] as i128;
        shr_rne(two_med * cfg.inv_ln2.raw as i128, LUT_FRAC + 1)
    } else {
        shr_rne(sorted[half] as i128 * cfg.inv_ln2.raw as i128, LUT_FRAC)
    };
    let mut d = sat.clamp(d_init, fmt);
    let mut est = FxNoiseEstimate {
        trajectory: vec![FxValue { raw: d, fmt }],
        retained: Vec::with_capacity(cfg.iterations),
        enlarged: Vec::with_capacity(cfg.iterations),
    };

    let mut pos = half;
    let walk = |tau: i128, pos: &mut usize| {
        while *pos < m && sorted[*pos] as i128 <= tau {
            *pos += 1;
        }
        while *pos > 0 && sorted[*pos - 1] as i128 > tau {
            *pos -= 1;
        }
    };
    for _ in 0..cfg.iterations {
        walk((d as i128) << cfg.c_shift, &mut pos);
        let mut inv_k = cfg.inv_kappa.raw;
        let enlarged = pos < cfg.min_retained;
        if enlarged {
            walk((d as i128) << cfg.c_enlarged_shift, &mut pos);
            inv_k = cfg.inv_kappa_enlarged.raw;
        }
        d = if pos == 0 {
            0
        } else {
            let mean = ((prefix[pos - 1] as i128) << DIVIDER_GUARD_BITS) / pos as i128;
            sat.clamp(shr_rne(mean * inv_k as i128, DIVIDER_GUARD_BITS + LUT_FRAC), fmt)
        };
        est.trajectory.push(FxValue { raw: d, fmt });
        est.retained.push(pos);
        est.enlarged.push(enlarged);
    }
    est
}

/// Fixed-point noise-power estimate of `p` (all in one format). The
/// confidence scalars must be powers of two so thresholds are shifts.
pub fn fx_noise_estimator(p: &[FxValue], params: &DenoiserParams) -> Result<FxNoiseEstimate> {
    let (sorted, prefix) = fx_sorted_prefix(p)?;
    if sorted[0].raw < 0 {
        return Err(invalid("squared magnitudes must be nonnegative"));
    }
    let cfg = FxNoiseConfig::new(params, p.len())?;
    let s: Vec<i64> = sorted.iter().map(|v| v.raw).collect();
    let pr: Vec<i64> = prefix.iter().map(|v| v.raw).collect();
    Ok(noise_estimate_sorted(&s, &pr, sorted[0].fmt, &cfg, &mut SatCounter::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::format::fx_quantize;

    const F: QFormat = QFormat::q(16, 8);

    fn fx(v: &[f64]) -> Vec<FxValue> {
        v.iter().map(|&x| fx_quantize(x, F)).collect()
    }

    #[test]
    fn sorted_prefix_examples() {
        let (s, p) = fx_sorted_prefix(&fx(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(s.iter().map(|v| v.raw).collect::<Vec<_>>(), vec![256, 512, 768]);
        assert_eq!(p.last().unwrap().raw, 1536);
        assert_eq!(p[0].fmt.word_bits, 18);
        let (s, _) = fx_sorted_prefix(&fx(&[3.0, 2.0, 1.0])).unwrap();
        assert!(s.windows(2).all(|w| w[0].raw <= w[1].raw));
        assert!(fx_sorted_prefix(&[]).is_err());
    }

    #[test]
    fn zeros_give_zero() {
        let est = fx_noise_estimator(&fx(&[0.0; 64]), &DenoiserParams::default()).unwrap();
        assert!(est.trajectory.iter().all(|v| v.raw == 0));
    }

    #[test]
    fn constant_input_within_one_lsb() {
        let params = DenoiserParams::default();
        for &v in &[0.5, 1.0, 3.25, 20.0] {
            let est = fx_noise_estimator(&fx(&[v; 64]), &params).unwrap();
            let init = v / LN_2;
            assert!((est.trajectory[0].to_f64() - init).abs() <= F.lsb());
            let fin = v / kappa(2.0).unwrap();
            assert!((est.d0().to_f64() - fin).abs() <= F.lsb());
        }
    }

    #[test]
    fn rejects_non_power_of_two_confidence() {
        let params = DenoiserParams { confidence: 3.0, confidence_enlarged: 4.0, ..Default::default() };
        assert!(fx_noise_estimator(&fx(&[1.0; 8]), &params).is_err());
    }
}
