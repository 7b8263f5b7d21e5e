//! 16-QAM mapping and the regularized LMMSE equalizer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Gray-coded 16-QAM with unit average energy. Each dimension carries two
/// bits; amplitude index `i` in `(-3, -1, 1, 3)` has Gray label `GRAY[i]`.
pub struct Qam16;

const GRAY: [u8; 4] = [0b00, 0b01, 0b11, 0b10];
const INV_GRAY: [usize; 4] = [0, 1, 3, 2];

impl Qam16 {
    pub const BITS_PER_SYMBOL: usize = 4;

    fn norm() -> f64 {
        1.0 / 10f64.sqrt()
    }

    fn level(idx: usize) -> f64 {
        (2.0 * idx as f64 - 3.0) * Self::norm()
    }

    /// Maps a 4-bit label (I bits high, Q bits low) to a constellation point.
    pub fn map(bits: u8) -> Complex64 {
        let i = INV_GRAY[((bits >> 2) & 3) as usize];
        let q = INV_GRAY[(bits & 3) as usize];
        Complex64::new(Self::level(i), Self::level(q))
    }

    fn slice(x: f64) -> usize {
        ((x / Self::norm() + 3.0) / 2.0).round().clamp(0.0, 3.0) as usize
    }

    /// Nearest-point decision, returning the 4-bit label.
    pub fn demap(z: Complex64) -> u8 {
        (GRAY[Self::slice(z.re)] << 2) | GRAY[Self::slice(z.im)]
    }
}

/// Condition number above which an equalizer system counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Per-channel equalizer: `W^H = (H^H H + I/snr)^-1 H^H`, solved on the
/// `K x K` system.
pub struct Lmmse {
    filter: DMatrix<Complex64>,
}

impl Lmmse {
    /// Builds the filter; `None` when the regularized Gram matrix is
    /// numerically singular.
    pub fn new(h: &DMatrix<Complex64>, snr_linear: f64) -> Result<Option<Self>> {
        let (m, k) = h.shape();
        if k == 0 || k > m {
            return Err(invalid(format!("need 1 <= K <= M, got K={k}, M={m}")));
        }
        if !(snr_linear > 0.0) {
            return Err(invalid("SNR must be positive"));
        }
        let hh = h.adjoint();
        let mut gram = &hh * h;
        for i in 0..k {
            gram[(i, i)] += Complex64::new(1.0 / snr_linear, 0.0);
        }
        let eig = gram.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Ok(None);
        }
        let Some(chol) = gram.cholesky() else {
            return Ok(None);
        };
        Ok(Some(Self { filter: chol.solve(&hh) }))
    }

    pub fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let y = DVector::from_column_slice(y);
        (&self.filter * y).iter().copied().collect()
    }
}

/// One-shot `x = (H^H H + I/snr)^-1 H^H y`; `None` if the system is singular.
pub fn lmmse_equalize(h: &DMatrix<Complex64>, y: &[Complex64], snr_linear: f64) -> Result<Option<Vec<Complex64>>> {
    if y.len() != h.nrows() {
        return Err(invalid("observation length must match channel rows"));
    }
    Ok(Lmmse::new(h, snr_linear)?.map(|w| w.apply(y)))
}
