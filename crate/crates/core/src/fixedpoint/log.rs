//! Natural logarithm by leading-one detection and a piecewise-linear
//! mantissa table, plus the constant tables used by the threshold unit.

use std::f64::consts::LN_2;

use super::format::{FxValue, QFormat};
use crate::error::{invalid, Result};

/// Fractional bits of every logarithm value.
pub const LOG_FRAC: u32 = 16;
/// Format of logarithm results.
pub const LOG_FMT: QFormat = QFormat::q(32, LOG_FRAC);

fn log_raw(x: f64) -> i64 {
    (x * (LOG_FRAC as f64).exp2()).round_ties_even() as i64
}

/// Piecewise-linear `ln` over the mantissa range `[1, 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PwlLogTable {
    segment_bits: u32,
    /// `ln` at the `2^segment_bits + 1` uniform breakpoints, last one `ln 2`.
    knots: Vec<i64>,
    ln2: i64,
}

impl Default for PwlLogTable {
    fn default() -> Self {
        Self::new(3)
    }
}

impl PwlLogTable {
    /// Table with `2^segment_bits` uniform segments.
    pub fn new(segment_bits: u32) -> Self {
        let n = 1usize << segment_bits;
        let knots = (0..=n).map(|i| log_raw((1.0 + i as f64 / n as f64).ln())).collect();
        Self { segment_bits, knots, ln2: log_raw(LN_2) }
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    /// Breakpoints in `[1, 2]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.segments() as f64;
        (0..=self.segments()).map(|i| 1.0 + i as f64 / n).collect()
    }

    pub fn slopes(&self) -> Vec<FxValue> {
        self.knots.windows(2).map(|w| FxValue { raw: (w[1] - w[0]) << self.segment_bits, fmt: LOG_FMT }).collect()
    }

    pub fn intercepts(&self) -> Vec<FxValue> {
        self.knots[..self.segments()].iter().map(|&raw| FxValue { raw, fmt: LOG_FMT }).collect()
    }

    /// `ln` of the positive raw value `raw * 2^-frac`, in [`LOG_FMT`] raw units.
    pub fn ln_raw(&self, raw: i128, frac: u32) -> i64 {
        debug_assert!(raw > 0);
        let lead = 127 - raw.leading_zeros() as i32;
        let exponent = lead - frac as i32;
        // bits below the leading one, as a fraction of 2^lead
        let rest = raw - (1i128 << lead);
        let sb = self.segment_bits;
        let seg = ((rest << sb) >> lead) as usize;
        let within = (rest << sb) - ((seg as i128) << lead);
        let dy = (self.knots[seg + 1] - self.knots[seg]) as i128;
        let interp = (dy * within) >> lead;
        exponent as i64 * self.ln2 + self.knots[seg] + interp as i64
    }
}

/// `ln x` for a positive fixed-point `x`.
pub fn pwl_ln(x: FxValue, table: &PwlLogTable) -> Result<FxValue> {
    if x.raw <= 0 {
        return Err(invalid("logarithm of a nonpositive value"));
    }
    Ok(FxValue { raw: table.ln_raw(x.raw as i128, x.fmt.frac_bits), fmt: LOG_FMT })
}

/// `ln i` for `i = 1..=n`, index 0 unused.
pub fn ln_int_table(n: usize) -> Vec<i64> {
    (0..=n).map(|i| if i == 0 { 0 } else { log_raw((i as f64).ln()) }).collect()
}

/// `ln c` as a [`LOG_FMT`] constant.
pub fn ln_const(c: f64) -> FxValue {
    FxValue { raw: log_raw(c.ln()), fmt: LOG_FMT }
}
