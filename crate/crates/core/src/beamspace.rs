//! Antenna and beamspace vector types and the unitary DFT between them.
//!
//! The forward transform uses the kernel `exp(-j 2 pi m k / M) / sqrt(M)`, so
//! `||F h|| = ||h||` and the inverse is the conjugate transpose. Power-of-two
//! lengths go through `rustfft`; other lengths use a direct O(M^2) DFT.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

fn check_finite(entries: &[Complex64]) -> Result<()> {
    match entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

macro_rules! complex_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Vec<Complex64>);

        impl $name {
            /// Wraps `entries`, rejecting empty or non-finite input.
            pub fn new(entries: Vec<Complex64>) -> Result<Self> {
                if entries.is_empty() {
                    return Err(crate::error::invalid("vector must be non-empty"));
                }
                check_finite(&entries)?;
                Ok(Self(entries))
            }

            pub fn zeros(len: usize) -> Self {
                Self(vec![Complex64::new(0.0, 0.0); len])
            }

            pub(crate) fn from_vec(entries: Vec<Complex64>) -> Self {
                Self(entries)
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn entries(&self) -> &[Complex64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<Complex64> {
                self.0
            }

            /// Squared Euclidean norm.
            pub fn norm_sqr(&self) -> f64 {
                self.0.iter().map(|z| z.norm_sqr()).sum()
            }

            /// Squared distance to `other`.
            pub fn distance_sqr(&self, other: &Self) -> f64 {
                self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum()
            }

            pub fn scaled(&self, s: f64) -> Self {
                Self(self.0.iter().map(|z| z * s).collect())
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = Complex64;
            fn index(&self, i: usize) -> &Complex64 {
                &self.0[i]
            }
        }
    };
}

complex_vector!(
    /// Antenna-domain channel (true, observed, or denoised).
    ChannelVector
);

complex_vector!(
    /// Beamspace (DFT-domain) channel.
    BeamspaceVector
);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_unitary(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    fft.process(data);
    let norm = 1.0 / (n as f64).sqrt();
    for z in data.iter_mut() {
        *z *= norm;
    }
}

/// Unitary DFT evaluated directly from its definition.
pub fn dft_direct(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let norm = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let acc: Complex64 = x
                .iter()
                .enumerate()
                .map(|(m, &v)| {
                    // reduce m*k mod n before scaling to keep the phase accurate
                    let idx = (m * k) % n;
                    v * Complex64::from_polar(1.0, sign * 2.0 * PI * idx as f64 / n as f64)
                })
                .sum();
            acc * norm
        })
        .collect()
}

/// Unitary DFT using the FFT for power-of-two lengths and the direct sum otherwise.
pub fn dft(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    if x.len().is_power_of_two() {
        let mut buf = x.to_vec();
        fft_unitary(&mut buf, inverse);
        buf
    } else {
        dft_direct(x, inverse)
    }
}

pub fn to_beamspace(h: &ChannelVector) -> BeamspaceVector {
    BeamspaceVector::from_vec(dft(h.entries(), false))
}

pub fn from_beamspace(hb: &BeamspaceVector) -> ChannelVector {
    ChannelVector::from_vec(dft(hb.entries(), true))
}

/// Element-wise `|h_m|^2`.
pub fn magnitudes_squared(hb: &BeamspaceVector) -> Vec<f64> {
    hb.entries().iter().map(|z| z.norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dc_vector_maps_to_bin_zero() {
        let h = ChannelVector::new(vec![c(1.0, 0.0); 4]).unwrap();
        let hb = to_beamspace(&h);
        assert!((hb[0] - c(2.0, 0.0)).norm() < 1e-12);
        for k in 1..4 {
            assert!(hb[k].norm() < 1e-12);
        }
    }

    #[test]
    fn unit_vector_inverse_is_flat() {
        let mut e0 = vec![c(0.0, 0.0); 16];
        e0[0] = c(1.0, 0.0);
        let h = from_beamspace(&BeamspaceVector::new(e0).unwrap());
        for z in h.entries() {
            assert!((z.norm() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn magnitudes() {
        let hb = BeamspaceVector::new(vec![c(3.0, 4.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(magnitudes_squared(&hb), vec![25.0, 0.0]);
        let z = BeamspaceVector::zeros(5);
        assert!(magnitudes_squared(&z).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn rejects_non_finite() {
        let err = ChannelVector::new(vec![c(1.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        assert!(ChannelVector::new(vec![]).is_err());
    }

    #[test]
    fn fft_matches_direct_dft() {
        for &n in &[8usize, 12, 64] {
            let x: Vec<Complex64> = (0..n).map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())).collect();
            let mut fast = x.clone();
            fft_unitary(&mut fast, false);
            let slow = dft_direct(&x, false);
            let scale: f64 = slow.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-10 * scale);
            }
        }
    }
}
