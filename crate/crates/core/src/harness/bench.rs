//! Wall-clock scaling of the denoiser with the array size.

use std::hint::black_box;
use std::time::Instant;

use super::sim::trial_rng;
use super::ResultRow;
use crate::beamspace::{from_beamspace, magnitudes_squared, to_beamspace, BeamspaceVector, ChannelVector};
use crate::chanmodel::{add_awgn, GeometricModel};
use crate::denoiser::{denoise, denoise_beamspace, estimate_threshold};
use crate::error::{invalid, Result};
use crate::estimators::DenoiserParams;
use crate::quantizer::{composite_noise_variance, QuantizerModel, Resolution};

const BITS: u32 = 3;
const SNR_DB: f64 = 10.0;
/// Samples processed per timed batch, so small `M` still runs long enough.
const BATCH_SAMPLES: usize = 1 << 16;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

const VARIANTS: [&str; 4] = ["post-blind", "post-known", "full-blind", "full-known"];

struct Case {
    m: usize,
    alpha: f64,
    known: f64,
    y: ChannelVector,
    hb: BeamspaceVector,
}

impl Case {
    fn run(&self, variant: usize, params: &DenoiserParams) -> Result<()> {
        let kd = (variant % 2 == 1).then_some(self.known);
        if variant < 2 {
            let p = magnitudes_squared(black_box(&self.hb));
            let est = estimate_threshold(&p, params, kd)?;
            black_box(denoise(&self.hb, est.eta, self.alpha)?);
        } else {
            let (r, _) = denoise_beamspace(&to_beamspace(black_box(&self.y)), params, self.alpha, kd)?;
            black_box(from_beamspace(&r.beamspace));
        }
        Ok(())
    }
}

/// Median seconds per denoised vector for each `M`, for four variants:
/// `post-blind`, `post-known` (after the forward transform: magnitudes,
/// estimation and thresholding) and `full-blind`, `full-known` (including
/// both transforms). Rows are labelled `<variant>-m<M>`. Every repetition
/// times all sizes and variants back to back so slow periods affect them
/// alike.
pub fn run_scaling_benchmark(ms: &[usize], repetitions: usize, seed: u64) -> Result<Vec<ResultRow>> {
    if repetitions == 0 {
        return Err(invalid("repetitions must be at least 1"));
    }
    let params = DenoiserParams::default();
    let q = QuantizerModel::cached(Resolution::Bits(BITS))?;
    let alpha = q.alpha();
    let n0 = 10f64.powf(-SNR_DB / 10.0);
    let known = composite_noise_variance(alpha, n0, 1.0);
    let cases = ms
        .iter()
        .map(|&m| {
            if !m.is_power_of_two() || m < 2 {
                return Err(invalid(format!("M must be a power of two, got {m}")));
            }
            let mut rng = trial_rng(seed, m as u64);
            let h = GeometricModel::default().generate(m, &mut rng)?;
            let y = q.quantize_agc(&add_awgn(&h, n0, &mut rng)?)?;
            let hb = to_beamspace(&y);
            Ok(Case { m, alpha, known, y, hb })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut samples = vec![vec![Vec::with_capacity(repetitions); VARIANTS.len()]; cases.len()];
    for case in &cases {
        for v in 0..VARIANTS.len() {
            case.run(v, &params)?;
        }
    }
    for _ in 0..repetitions {
        for (case, per_case) in cases.iter().zip(&mut samples) {
            let batch = (BATCH_SAMPLES / case.m).max(1);
            for (v, out) in per_case.iter_mut().enumerate() {
                let t = Instant::now();
                for _ in 0..batch {
                    case.run(v, &params)?;
                }
                out.push(t.elapsed().as_secs_f64() / batch as f64);
            }
        }
    }

    let mut rows = Vec::new();
    for (case, per_case) in cases.iter().zip(samples) {
        for (name, times) in VARIANTS.iter().zip(per_case) {
            rows.push(ResultRow {
                estimator: format!("{name}-m{}", case.m),
                bits: Resolution::Bits(BITS),
                snr_db: SNR_DB,
                mse_linear: None,
                ber: None,
                trials: repetitions,
                seconds_per_vector: Some(median(times)),
                flagged: 0,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_per_size() {
        let rows = run_scaling_benchmark(&[16, 32], 1, 1).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.seconds_per_vector.unwrap() > 0.0));
        assert_eq!(rows[0].estimator, "post-blind-m16");
        assert!(run_scaling_benchmark(&[12], 1, 1).is_err());
    }
}
