//! Low-complexity beamspace channel denoiser for quantized massive-MIMO
//! observations.
//!
//! The crate covers the signal chain end to end:
//!
//! - [`chanmodel`] draws sparse mmWave channels and thermal noise.
//! - [`quantizer`] models low-resolution ADCs and their linearized gain.
//! - [`beamspace`] moves vectors between the antenna and DFT domains.
//! - [`estimators`] blindly estimates noise power, channel power, SDNR and
//!   beam activity from beamspace magnitudes.
//! - [`denoiser`] computes the Bayesian hard threshold and applies it.
//! - [`fixedpoint`] is a bit-accurate model of the hardware datapath.
//! - [`harness`] runs Monte-Carlo MSE, BER and timing experiments.
//!
//! ```
//! use beamspace_denoiser::{denoiser, DenoiserParams, ChannelVector};
//! use num_complex::Complex64;
//!
//! let h = ChannelVector::new(vec![Complex64::new(1.0, 0.0); 16]).unwrap();
//! let (out, report) = denoiser::denoise_pipeline(&h, &DenoiserParams::default(), 1.0, None).unwrap();
//! assert_eq!(out.len(), 16);
//! assert!(report.active_beams >= 1);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamspace;
pub mod chanmodel;
pub mod denoiser;
pub mod error;
pub mod estimators;
pub mod fixedpoint;
pub mod harness;
pub mod quantizer;

pub use beamspace::{BeamspaceVector, ChannelVector};
pub use denoiser::{DenoiseResult, EstimationReport, ThresholdInputs};
pub use error::{Error, Result};
pub use estimators::{DenoiserParams, NoiseEstimate};
pub use quantizer::{QuantizerModel, Resolution};
