//! Monte-Carlo experiment driver: channel-estimation MSE, post-equalization
//! BER and denoiser timing, written as CSV.

mod bench;
mod config;
mod equalizer;
mod sim;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

pub use bench::run_scaling_benchmark;
pub use config::{parse_config, parse_params};
pub use equalizer::{lmmse_equalize, Lmmse, Qam16, MAX_CONDITION};
pub use sim::{diag_lmmse_estimate, ls_estimate, run_ber_experiment, run_mse_experiment, snr_at_ber, trial_rng};

use crate::chanmodel::GeometricModel;
use crate::error::{invalid, Error, Result};
use crate::estimators::DenoiserParams;
use crate::fixedpoint::FxFormats;
use crate::quantizer::Resolution;

/// Channel estimators compared by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Denoiser with blind noise estimation.
    ProposedBlind,
    /// Denoiser given the composite noise power.
    ProposedKnown,
    /// Raw quantized observation.
    Ls,
    /// Per-beam Wiener scaling without support selection.
    DiagLmmse,
    /// True channel (BER only).
    PerfectCsi,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::ProposedBlind,
        Estimator::ProposedKnown,
        Estimator::Ls,
        Estimator::DiagLmmse,
        Estimator::PerfectCsi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::ProposedBlind => "proposed-blind",
            Estimator::ProposedKnown => "proposed-known",
            Estimator::Ls => "ls",
            Estimator::DiagLmmse => "diag-lmmse",
            Estimator::PerfectCsi => "perfect-csi",
        }
    }

    pub fn is_proposed(&self) -> bool {
        matches!(self, Estimator::ProposedBlind | Estimator::ProposedKnown)
    }

    /// CSV label, with a `-fx` suffix for denoisers run in fixed point.
    pub fn label(&self, fixed_point: bool) -> String {
        if fixed_point && self.is_proposed() {
            format!("{}-fx", self.name())
        } else {
            self.name().to_string()
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown estimator {s:?}")))
    }
}

/// Ground-truth channel model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelKind {
    Geometric(GeometricModel),
    /// Bernoulli-Gaussian beamspace channel with unit average power.
    BernoulliGaussian {
        activity: f64,
    },
}

impl Default for ChannelKind {
    fn default() -> Self {
        ChannelKind::Geometric(GeometricModel::default())
    }
}

/// Experiment configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub k: usize,
    pub bits: Vec<Resolution>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub channel: ChannelKind,
    pub params: DenoiserParams,
    /// Route the denoiser through the fixed-point model with these formats.
    pub fixed_point: Option<FxFormats>,
    /// Data vectors per BER trial.
    pub data_vectors: usize,
    /// Fill the `seconds_per_vector` column.
    pub timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            m: 64,
            k: 8,
            bits: vec![Resolution::Bits(2), Resolution::Bits(3), Resolution::Bits(4)],
            snr_db: vec![0.0, 5.0, 10.0],
            trials: 1000,
            seed: 1,
            estimators: vec![Estimator::ProposedBlind, Estimator::Ls],
            channel: ChannelKind::default(),
            params: DenoiserParams::default(),
            fixed_point: None,
            data_vectors: 16,
            timing: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("SNR grid must be nonempty and finite"));
        }
        if self.bits.is_empty() {
            return Err(invalid("bit list must be nonempty"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("no estimators selected"));
        }
        if self.m < 2 {
            return Err(invalid("M must be at least 2"));
        }
        if self.k == 0 || self.k > self.m {
            return Err(invalid("K must be in 1..=M"));
        }
        if self.data_vectors == 0 {
            return Err(invalid("data vectors must be at least 1"));
        }
        if self.fixed_point.is_some() && !self.m.is_power_of_two() {
            return Err(invalid("fixed-point mode needs M a power of two"));
        }
        self.params.validate()
    }
}

/// Inclusive SNR grid `start, start + step, ..., <= stop`.
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(invalid("SNR grid needs step > 0 and stop >= start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// One CSV line of results.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub estimator: String,
    pub bits: Resolution,
    pub snr_db: f64,
    pub mse_linear: Option<f64>,
    pub ber: Option<f64>,
    pub trials: usize,
    pub seconds_per_vector: Option<f64>,
    /// Trials whose equalizer system was numerically singular.
    pub flagged: usize,
}

impl ResultRow {
    pub const CSV_HEADER: &'static str = "estimator,bits,snr_db,mse_linear,mse_db,ber,trials,seconds_per_vector";

    pub fn mse_db(&self) -> Option<f64> {
        self.mse_linear.map(|x| 10.0 * x.log10())
    }

    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map(f).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.estimator,
            self.bits,
            self.snr_db,
            opt(self.mse_linear, &|x| format!("{x:.6e}")),
            opt(self.mse_db(), &|x| format!("{x:.4}")),
            opt(self.ber, &|x| format!("{x:.6e}")),
            self.trials,
            opt(self.seconds_per_vector, &|x| format!("{x:.3e}")),
        )
    }
}

/// Writes the header and one line per row, LF-terminated.
pub fn write_csv<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "{}", ResultRow::CSV_HEADER)?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}
