//! Scalar ADC model and its linearized (Bussgang) description.
//!
//! Complex samples are quantized independently on I and Q with a Lloyd-Max
//! codebook designed for a unit-variance Gaussian. The linear gain `alpha`
//! and the composite noise variance follow from the codebook distortion.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::beamspace::ChannelVector;
use crate::error::{invalid, Error, Result};

pub const MAX_BITS: u32 = 8;
const MAX_ITERATIONS: usize = 10_000;
const TOLERANCE: f64 = 1e-12;

/// ADC resolution per real dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Resolution {
    Bits(u32),
    Infinite,
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resolution::Bits(b) => write!(f, "{b}"),
            Resolution::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" => Ok(Resolution::Infinite),
            t => t.parse::<u32>().map(Resolution::Bits).map_err(|_| invalid(format!("bad resolution {t:?}"))),
        }
    }
}

/// Codebook for one real dimension plus its Bussgang gain.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizerModel {
    pub resolution: Resolution,
    /// Reconstruction levels, strictly increasing. Empty when unquantized.
    pub levels: Vec<f64>,
    /// Decision thresholds; `thresholds[i]` separates `levels[i]` and `levels[i + 1]`.
    pub thresholds: Vec<f64>,
    alpha: f64,
}

pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Probability mass of `N(0,1)` on `[a, b]`, accurate in both tails.
fn mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (libm::erfc(a * FRAC_1_SQRT_2) - libm::erfc(b * FRAC_1_SQRT_2))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b * FRAC_1_SQRT_2) - libm::erfc(-a * FRAC_1_SQRT_2))
    } else {
        1.0 - std_normal_cdf(a) - (1.0 - std_normal_cdf(b))
    }
}

fn inverse_normal_cdf(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if std_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn cell_edges(thresholds: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let n = thresholds.len() + 1;
    (0..n).map(move |i| {
        let a = if i == 0 { f64::NEG_INFINITY } else { thresholds[i - 1] };
        let b = if i + 1 == n { f64::INFINITY } else { thresholds[i] };
        (a, b)
    })
}

fn centroids(thresholds: &[f64]) -> Vec<f64> {
    cell_edges(thresholds).map(|(a, b)| (std_normal_pdf(a) - std_normal_pdf(b)) / mass(a, b)).collect()
}

/// Per-dimension MSE `E[(x - Q(x))^2]` of a codebook for `x ~ N(0,1)`,
/// from closed-form truncated Gaussian moments.
pub fn gaussian_distortion(levels: &[f64], thresholds: &[f64]) -> f64 {
    if levels.is_empty() {
        return 0.0;
    }
    let mut d = 0.0;
    for ((a, b), &l) in cell_edges(thresholds).zip(levels) {
        let m0 = mass(a, b);
        let m1 = std_normal_pdf(a) - std_normal_pdf(b);
        let xa = if a.is_finite() { a * std_normal_pdf(a) } else { 0.0 };
        let xb = if b.is_finite() { b * std_normal_pdf(b) } else { 0.0 };
        let m2 = m0 + xa - xb;
        d += m2 - 2.0 * l * m1 + l * l * m0;
    }
    d
}

/// Lloyd-Max codebook for a unit-variance Gaussian.
pub fn build_lloyd_max(bits: u32) -> Result<QuantizerModel> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(invalid(format!("bits must be in 1..={MAX_BITS}, got {bits}")));
    }
    let n = 1usize << bits;
    // companding start point: optimal cell density for a Gaussian is N(0, 3)
    let mut t: Vec<f64> = (1..n).map(|i| 3f64.sqrt() * inverse_normal_cdf(i as f64 / n as f64)).collect();
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let levels = centroids(&t);
        let lloyd: Vec<f64> = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let resid: Vec<f64> = lloyd.iter().zip(&t).map(|(g, x)| g - x).collect();
        if resid.iter().fold(0.0f64, |a, r| a.max(r.abs())) < TOLERANCE {
            converged = true;
            break;
        }
        t = match newton_step(&t, &levels, &resid) {
            Some(next) => next,
            None => lloyd,
        };
    }
    if !converged {
        return Err(Error::NoConvergence { bits, iterations: MAX_ITERATIONS });
    }
    let mut levels = centroids(&t);
    symmetrize(&mut levels);
    symmetrize(&mut t);
    let alpha = 1.0 - gaussian_distortion(&levels, &t);
    Ok(QuantizerModel { resolution: Resolution::Bits(bits), levels, thresholds: t, alpha })
}

/// Newton step on `G(t) - t = 0`, where `G` is the Lloyd threshold update.
/// The Jacobian is tridiagonal. Returns `None` if the step breaks ordering.
fn newton_step(t: &[f64], levels: &[f64], resid: &[f64]) -> Option<Vec<f64>> {
    let k = t.len();
    // derivatives of each cell centroid with respect to its lower and upper edge
    let (da, db): (Vec<f64>, Vec<f64>) = cell_edges(t)
        .zip(levels)
        .map(|((a, b), &c)| {
            let w = mass(a, b);
            let ga = if a.is_finite() { std_normal_pdf(a) * (c - a) / w } else { 0.0 };
            let gb = if b.is_finite() { std_normal_pdf(b) * (b - c) / w } else { 0.0 };
            (ga, gb)
        })
        .unzip();
    let lower: Vec<f64> = (0..k).map(|i| 0.5 * da[i]).collect();
    let diag: Vec<f64> = (0..k).map(|i| 0.5 * (db[i] + da[i + 1]) - 1.0).collect();
    let upper: Vec<f64> = (0..k).map(|i| 0.5 * db[i + 1]).collect();
    let rhs: Vec<f64> = resid.iter().map(|r| -r).collect();
    let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let next: Vec<f64> = t.iter().zip(&delta).map(|(x, d)| x + d).collect();
    (next.iter().all(|x| x.is_finite()) && next.windows(2).all(|w| w[0] < w[1])).then_some(next)
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let (l, cp, dp) = if i == 0 { (0.0, 0.0, 0.0) } else { (lower[i], c[i - 1], d[i - 1]) };
        let den = diag[i] - l * cp;
        if den == 0.0 || !den.is_finite() {
            return None;
        }
        c[i] = upper[i] / den;
        d[i] = (rhs[i] - l * dp) / den;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn symmetrize(v: &mut [f64]) {
    let n = v.len();
    for i in 0..n / 2 {
        let m = 0.5 * (v[n - 1 - i] - v[i]);
        v[i] = -m;
        v[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        v[n / 2] = 0.0;
    }
}

impl QuantizerModel {
    pub fn unquantized() -> Self {
        Self { resolution: Resolution::Infinite, levels: vec![], thresholds: vec![], alpha: 1.0 }
    }

    pub fn new(resolution: Resolution) -> Result<Self> {
        match resolution {
            Resolution::Infinite => Ok(Self::unquantized()),
            Resolution::Bits(b) => build_lloyd_max(b),
        }
    }

    /// Shared, lazily built codebook for `resolution`.
    pub fn cached(resolution: Resolution) -> Result<&'static QuantizerModel> {
        static CACHE: [OnceLock<QuantizerModel>; MAX_BITS as usize + 1] =
            [const { OnceLock::new() }; MAX_BITS as usize + 1];
        let idx = match resolution {
            Resolution::Infinite => 0,
            Resolution::Bits(b) if (1..=MAX_BITS).contains(&b) => b as usize,
            Resolution::Bits(b) => return Err(invalid(format!("bits must be in 1..={MAX_BITS}, got {b}"))),
        };
        if let Some(q) = CACHE[idx].get() {
            return Ok(q);
        }
        let q = Self::new(resolution)?;
        Ok(CACHE[idx].get_or_init(|| q))
    }

    /// Bussgang gain `1 - rho`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Normalized distortion `rho`.
    pub fn distortion(&self) -> f64 {
        1.0 - self.alpha
    }

    /// Quantizes one real value after normalizing by `scale`.
    pub fn quantize_scalar(&self, x: f64, scale: f64) -> f64 {
        if self.levels.is_empty() {
            return x;
        }
        let u = x / scale;
        let idx = self.thresholds.partition_point(|&t| t < u);
        self.levels[idx] * scale
    }

    /// Quantizes I and Q of each entry with full-scale reference `scale`
    /// (the per-dimension standard deviation of the analog input).
    pub fn quantize(&self, v: &ChannelVector, scale: f64) -> Result<ChannelVector> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("input scale must be finite and positive"));
        }
        let out = v
            .entries()
            .iter()
            .map(|z| Complex64::new(self.quantize_scalar(z.re, scale), self.quantize_scalar(z.im, scale)))
            .collect();
        ChannelVector::new(out)
    }

    /// Quantizes with an ideal AGC: the scale is the exact per-dimension RMS
    /// of `v`. An all-zero input is returned unchanged.
    pub fn quantize_agc(&self, v: &ChannelVector) -> Result<ChannelVector> {
        let scale = agc_scale(v);
        if scale == 0.0 || self.levels.is_empty() {
            return Ok(v.clone());
        }
        self.quantize(v, scale)
    }
}

/// `sqrt(||v||^2 / (2M))`.
pub fn agc_scale(v: &ChannelVector) -> f64 {
    (v.norm_sqr() / (2.0 * v.len() as f64)).sqrt()
}

/// `alpha` for a codebook.
pub fn alpha_for(qm: &QuantizerModel) -> f64 {
    qm.alpha()
}

/// `D0 = alpha E0 + alpha (1 - alpha) P_h`.
pub fn composite_noise_variance(alpha: f64, e0: f64, p_h: f64) -> f64 {
    alpha * e0 + alpha * (1.0 - alpha) * p_h
}
