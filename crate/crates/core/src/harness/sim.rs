//! MSE and BER Monte-Carlo experiments.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::equalizer::{Lmmse, Qam16};
use super::{ChannelKind, Estimator, ResultRow, SimConfig};
use crate::beamspace::{from_beamspace, to_beamspace, BeamspaceVector, ChannelVector};
use crate::chanmodel::{add_awgn, complex_gaussian, generate_bg_beamspace_channel, BernoulliGaussianConfig};
use crate::denoiser::denoise_pipeline;
use crate::error::Result;
use crate::estimators::DenoiserParams;
use crate::fixedpoint::{fx_pipeline, FxFormats};
use crate::quantizer::{composite_noise_variance, QuantizerModel, Resolution};

/// Independent random stream for trial `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// The observation itself.
pub fn ls_estimate(h: &ChannelVector) -> ChannelVector {
    h.clone()
}

/// Per-beam Wiener scaling `alpha P / (alpha^2 P + D0)`.
pub fn diag_lmmse_estimate(hb: &BeamspaceVector, alpha: f64, power: f64, d0: f64) -> BeamspaceVector {
    let den = alpha * alpha * power + d0;
    let g = if den > 0.0 { alpha * power / den } else { 0.0 };
    hb.scaled(g)
}

fn draw_channel<R: Rng>(kind: &ChannelKind, m: usize, rng: &mut R) -> Result<ChannelVector> {
    match kind {
        ChannelKind::Geometric(g) => g.generate(m, rng),
        ChannelKind::BernoulliGaussian { activity } => {
            let cfg = BernoulliGaussianConfig { m, q: *activity, power: 1.0 };
            Ok(from_beamspace(&generate_bg_beamspace_channel(&cfg, rng)?))
        }
    }
}

/// Quantities fixed for one (bits, SNR) point.
struct Point<'a> {
    quantizer: &'a QuantizerModel,
    n0: f64,
    known_d0: f64,
    params: &'a DenoiserParams,
    fixed: Option<FxFormats>,
}

impl<'a> Point<'a> {
    fn new(cfg: &'a SimConfig, bits: Resolution, snr_db: f64) -> Result<Self> {
        let quantizer = QuantizerModel::cached(bits)?;
        let n0 = 10f64.powf(-snr_db / 10.0);
        let known_d0 = composite_noise_variance(quantizer.alpha(), n0, 1.0);
        Ok(Self { quantizer, n0, known_d0, params: &cfg.params, fixed: cfg.fixed_point })
    }

    fn alpha(&self) -> f64 {
        self.quantizer.alpha()
    }

    fn observe<R: Rng>(&self, h: &ChannelVector, rng: &mut R) -> Result<ChannelVector> {
        self.quantizer.quantize_agc(&add_awgn(h, self.n0, rng)?)
    }

    fn denoise(&self, y: &ChannelVector, known: Option<f64>) -> Result<ChannelVector> {
        match &self.fixed {
            Some(f) => Ok(fx_pipeline(y, self.params, self.alpha(), known, f)?.0),
            None => Ok(denoise_pipeline(y, self.params, self.alpha(), known)?.0),
        }
    }

    fn estimate(&self, est: Estimator, y: &ChannelVector, h: &ChannelVector) -> Result<ChannelVector> {
        match est {
            Estimator::ProposedBlind => self.denoise(y, None),
            Estimator::ProposedKnown => self.denoise(y, Some(self.known_d0)),
            Estimator::Ls => Ok(ls_estimate(y)),
            Estimator::DiagLmmse => {
                Ok(from_beamspace(&diag_lmmse_estimate(&to_beamspace(y), self.alpha(), 1.0, self.known_d0)))
            }
            Estimator::PerfectCsi => Ok(h.clone()),
        }
    }
}

fn points(cfg: &SimConfig) -> impl Iterator<Item = (Resolution, f64)> + '_ {
    cfg.bits.iter().flat_map(move |&b| cfg.snr_db.iter().map(move |&s| (b, s)))
}

fn elapsed_if(timing: bool, start: Option<Instant>) -> f64 {
    match (timing, start) {
        (true, Some(t)) => t.elapsed().as_secs_f64(),
        _ => 0.0,
    }
}

/// Normalized MSE `sum ||h_hat - h||^2 / sum ||h||^2` per estimator, bits
/// and SNR. The perfect-CSI estimator is skipped.
pub fn run_mse_experiment(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let ests: Vec<Estimator> = cfg.estimators.iter().copied().filter(|e| *e != Estimator::PerfectCsi).collect();
    let mut rows = Vec::new();
    for (bits, snr) in points(cfg) {
        let pt = Point::new(cfg, bits, snr)?;
        let per_trial: Vec<(f64, Vec<(f64, f64)>)> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, t);
                let h = draw_channel(&cfg.channel, cfg.m, &mut rng)?;
                let y = pt.observe(&h, &mut rng)?;
                let errs = ests
                    .iter()
                    .map(|&e| {
                        let start = cfg.timing.then(Instant::now);
                        let hh = pt.estimate(e, &y, &h)?;
                        Ok((hh.distance_sqr(&h), elapsed_if(cfg.timing, start)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((h.norm_sqr(), errs))
            })
            .collect::<Result<_>>()?;
        let norm: f64 = per_trial.iter().map(|(n, _)| n).sum();
        for (i, e) in ests.iter().enumerate() {
            let err: f64 = per_trial.iter().map(|(_, v)| v[i].0).sum();
            let secs: f64 = per_trial.iter().map(|(_, v)| v[i].1).sum();
            rows.push(ResultRow {
                estimator: e.label(cfg.fixed_point.is_some()),
                bits,
                snr_db: snr,
                mse_linear: Some(err / norm),
                ber: None,
                trials: cfg.trials,
                seconds_per_vector: cfg.timing.then(|| secs / cfg.trials as f64),
                flagged: 0,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Default)]
struct BerTally {
    errors: u64,
    bits: u64,
    flagged: usize,
    seconds: f64,
}

/// Uncoded 16-QAM BER after LMMSE equalization with each estimator's
/// channel. Users are trained one at a time with a unit pilot, then
/// `data_vectors` quantized data vectors are detected per trial.
pub fn run_ber_experiment(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let ests = &cfg.estimators;
    let (m, k, ns) = (cfg.m, cfg.k, cfg.data_vectors);
    let mut rows = Vec::new();
    for (bits, snr) in points(cfg) {
        let pt = Point::new(cfg, bits, snr)?;
        let snr_lin = 1.0 / pt.n0;
        let per_trial: Vec<Vec<BerTally>> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, t);
                let users = (0..k).map(|_| draw_channel(&cfg.channel, m, &mut rng)).collect::<Result<Vec<_>>>()?;
                let pilots = users.iter().map(|h| pt.observe(h, &mut rng)).collect::<Result<Vec<_>>>()?;
                let labels: Vec<Vec<u8>> =
                    (0..ns).map(|_| (0..k).map(|_| rng.random_range(0..16u8)).collect()).collect();
                let received = labels
                    .iter()
                    .map(|lab| {
                        let mut y = vec![Complex64::new(0.0, 0.0); m];
                        for (h, &b) in users.iter().zip(lab) {
                            let x = Qam16::map(b);
                            for (ym, hm) in y.iter_mut().zip(h.entries()) {
                                *ym += hm * x;
                            }
                        }
                        for ym in y.iter_mut() {
                            *ym += complex_gaussian(&mut rng, pt.n0);
                        }
                        pt.quantizer.quantize_agc(&ChannelVector::new(y)?)
                    })
                    .collect::<Result<Vec<_>>>()?;

                ests.iter()
                    .map(|&e| {
                        let start = cfg.timing.then(Instant::now);
                        let cols =
                            users.iter().zip(&pilots).map(|(h, y)| pt.estimate(e, y, h)).collect::<Result<Vec<_>>>()?;
                        let seconds = elapsed_if(cfg.timing, start);
                        let hmat = DMatrix::from_fn(m, k, |r, c| cols[c][r]);
                        let mut tally = BerTally { seconds, ..Default::default() };
                        match Lmmse::new(&hmat, snr_lin)? {
                            None => tally.flagged = 1,
                            Some(w) => {
                                for (lab, y) in labels.iter().zip(&received) {
                                    let xh = w.apply(y.entries());
                                    for (&b, &z) in lab.iter().zip(&xh) {
                                        tally.errors += (b ^ Qam16::demap(z)).count_ones() as u64;
                                    }
                                    tally.bits += (Qam16::BITS_PER_SYMBOL * k) as u64;
                                }
                            }
                        }
                        Ok(tally)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for (i, e) in ests.iter().enumerate() {
            let tot = per_trial.iter().fold(BerTally::default(), |a, v| BerTally {
                errors: a.errors + v[i].errors,
                bits: a.bits + v[i].bits,
                flagged: a.flagged + v[i].flagged,
                seconds: a.seconds + v[i].seconds,
            });
            rows.push(ResultRow {
                estimator: e.label(cfg.fixed_point.is_some()),
                bits,
                snr_db: snr,
                mse_linear: None,
                ber: (tot.bits > 0).then(|| tot.errors as f64 / tot.bits as f64),
                trials: cfg.trials,
                seconds_per_vector: cfg.timing.then(|| tot.seconds / (cfg.trials * k) as f64),
                flagged: tot.flagged,
            });
        }
    }
    Ok(rows)
}

/// SNR at which a BER curve first falls through `target`, interpolating
/// linearly in `log10(BER)`. `points` must be sorted by SNR.
pub fn snr_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let lg = |b: f64| b.max(1e-12).log10();
    points.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && b1 < target {
            let f = (lg(b0) - lg(target)) / (lg(b0) - lg(b1));
            Some(s0 + f * (s1 - s0))
        } else {
            None
        }
    })
}
