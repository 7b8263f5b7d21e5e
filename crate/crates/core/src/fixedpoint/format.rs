//! Two's-complement Q formats, rounding and saturation.

use crate::error::{invalid, Result};

/// Word length, fractional bits and signedness of a fixed-point quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QFormat {
    pub word_bits: u32,
    pub frac_bits: u32,
    pub signed: bool,
}

impl std::fmt::Display for QFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}.{}", if self.signed { "Q" } else { "UQ" }, self.word_bits, self.frac_bits)
    }
}

impl QFormat {
    pub const MAX_WORD_BITS: u32 = 32;

    pub fn new(word_bits: u32, frac_bits: u32, signed: bool) -> Result<Self> {
        if !(frac_bits < word_bits && word_bits <= Self::MAX_WORD_BITS) {
            return Err(invalid(format!(
                "format {word_bits}/{frac_bits} needs frac < word <= {}",
                Self::MAX_WORD_BITS
            )));
        }
        Ok(Self { word_bits, frac_bits, signed })
    }

    /// Signed format without range checks, for constants.
    pub const fn q(word_bits: u32, frac_bits: u32) -> Self {
        Self { word_bits, frac_bits, signed: true }
    }

    /// Signed accumulator format wider than a storage word.
    pub(crate) fn wide(word_bits: u32, frac_bits: u32) -> Self {
        debug_assert!(word_bits <= 63);
        Self { word_bits, frac_bits, signed: true }
    }

    pub fn max_raw(&self) -> i64 {
        if self.signed {
            (1i64 << (self.word_bits - 1)) - 1
        } else {
            (1i64 << self.word_bits) - 1
        }
    }

    pub fn min_raw(&self) -> i64 {
        if self.signed {
            -(1i64 << (self.word_bits - 1))
        } else {
            0
        }
    }

    pub fn lsb(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }

    pub fn contains(&self, raw: i64) -> bool {
        (self.min_raw()..=self.max_raw()).contains(&raw)
    }

    pub fn to_f64(&self, raw: i64) -> f64 {
        raw as f64 * self.lsb()
    }

    /// Two's-complement bit pattern of `raw`, masked to the word.
    pub fn bits(&self, raw: i64) -> u64 {
        (raw as u64) & (u64::MAX >> (64 - self.word_bits))
    }
}

/// A raw integer tagged with its format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FxValue {
    pub raw: i64,
    pub fmt: QFormat,
}

impl FxValue {
    pub fn to_f64(&self) -> f64 {
        self.fmt.to_f64(self.raw)
    }
}

/// Counts clamping events at saturating arithmetic sites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SatCounter {
    pub events: u64,
}

impl SatCounter {
    /// Clamps `raw` into `fmt`, counting one event if it was out of range.
    pub fn clamp(&mut self, raw: i128, fmt: QFormat) -> i64 {
        let (lo, hi) = (fmt.min_raw() as i128, fmt.max_raw() as i128);
        if raw < lo {
            self.events += 1;
            lo as i64
        } else if raw > hi {
            self.events += 1;
            hi as i64
        } else {
            raw as i64
        }
    }

    pub fn value(&mut self, raw: i128, fmt: QFormat) -> FxValue {
        FxValue { raw: self.clamp(raw, fmt), fmt }
    }
}

/// Arithmetic right shift with round-half-to-even.
pub fn shr_rne(x: i128, s: u32) -> i128 {
    if s == 0 {
        return x;
    }
    let floor = x >> s;
    let rem = x - (floor << s);
    let half = 1i128 << (s - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Moves `x` from `from` fractional bits to `to` fractional bits, rounding
/// to nearest even when bits are dropped.
pub fn rescale_rne(x: i128, from: i32, to: i32) -> i128 {
    if to >= from {
        x << (to - from) as u32
    } else {
        shr_rne(x, (from - to) as u32)
    }
}

/// Round-to-nearest-even quantization with saturation.
pub fn fx_quantize(x: f64, fmt: QFormat) -> FxValue {
    fx_quantize_counted(x, fmt, &mut SatCounter::default())
}

pub fn fx_quantize_counted(x: f64, fmt: QFormat, sat: &mut SatCounter) -> FxValue {
    let scaled = (x * (fmt.frac_bits as f64).exp2()).round_ties_even();
    let raw = if scaled.is_nan() {
        0
    } else if scaled >= i128::MAX as f64 {
        i128::MAX
    } else if scaled <= i128::MIN as f64 {
        i128::MIN
    } else {
        scaled as i128
    };
    sat.value(raw, fmt)
}

/// Largest `e` with `max_abs * 2^e` representable in `fmt`; zero for zero input.
pub fn block_exponent(max_abs: f64, fmt: QFormat) -> i32 {
    if !(max_abs > 0.0) || !max_abs.is_finite() {
        return 0;
    }
    let limit = fmt.max_value();
    let mut e = (limit / max_abs).log2().floor() as i32;
    while max_abs * (e as f64).exp2() > limit {
        e -= 1;
    }
    while max_abs * ((e + 1) as f64).exp2() <= limit {
        e += 1;
    }
    e
}
