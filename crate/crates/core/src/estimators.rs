//! Blind estimation of noise power, channel power, SDNR and beam activity
//! from beamspace squared magnitudes `p_m = |h'_m|^2`.

use std::f64::consts::LN_2;

use crate::error::{invalid, Result};

/// Tuning knobs shared by the floating-point and fixed-point pipelines.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserParams {
    /// Cost ratio `C` between false alarm and misdetection.
    pub cost_ratio: f64,
    /// Confidence scalar `c` for the retained-set threshold.
    pub confidence: f64,
    /// Enlarged scalar `c'` used when too few samples survive.
    pub confidence_enlarged: f64,
    /// Minimum retained-set size. `None` picks `max(8, M/8)` capped at `M`.
    pub min_retained: Option<usize>,
    /// Number of refinement iterations `T`.
    pub iterations: usize,
    /// Always divide by `kappa(c)`, even after falling back to `c'`.
    pub strict_kappa: bool,
}

impl Default for DenoiserParams {
    fn default() -> Self {
        Self {
            cost_ratio: 4.0,
            confidence: 2.0,
            confidence_enlarged: 4.0,
            min_retained: None,
            iterations: 3,
            strict_kappa: false,
        }
    }
}

impl DenoiserParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.cost_ratio) {
            return Err(invalid("cost ratio C must be positive"));
        }
        if !pos(self.confidence) || !pos(self.confidence_enlarged) {
            return Err(invalid("confidence scalars must be positive"));
        }
        if self.confidence_enlarged <= self.confidence {
            return Err(invalid("c' must exceed c"));
        }
        if self.iterations < 1 {
            return Err(invalid("at least one iteration is required"));
        }
        if self.min_retained == Some(0) {
            return Err(invalid("minimum retained count must be at least 1"));
        }
        Ok(())
    }

    /// Effective minimum retained-set size for a length-`m` vector.
    pub fn min_retained_for(&self, m: usize) -> usize {
        self.min_retained.unwrap_or_else(|| 8.max(m / 8)).min(m).max(1)
    }
}

/// Truncated-mean bias of `Exp(1)` data below threshold `k`:
/// `(1 - e^{-k}(1 + k)) / (1 - e^{-k})`.
pub fn kappa(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(invalid(format!("kappa needs k > 0, got {k}")));
    }
    if k.is_infinite() {
        return Ok(1.0);
    }
    let e = (-k).exp();
    // -expm1(-k) = 1 - e^{-k} without cancellation for small k
    Ok((-(-k).exp_m1() - e * k) / -(-k).exp_m1())
}

/// Linear-time median by selection.
fn median(p: &[f64]) -> f64 {
    let mut v = p.to_vec();
    let m = v.len();
    let (lower, mid, _) = v.select_nth_unstable_by(m / 2, f64::total_cmp);
    let mid = *mid;
    if m % 2 == 1 {
        mid
    } else {
        0.5 * (lower.iter().copied().fold(f64::NEG_INFINITY, f64::max) + mid)
    }
}

/// Count and sum of the entries at or below `tau`.
fn truncated_sum(p: &[f64], tau: f64) -> (usize, f64) {
    p.iter().filter(|&&x| x <= tau).fold((0, 0.0), |(n, s), &x| (n + 1, s + x))
}

/// `median(p) / ln 2`.
pub fn mad_init(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(invalid("median of an empty vector"));
    }
    Ok(median(p) / LN_2)
}

/// Output of the iterative noise-power estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseEstimate {
    /// `D0` per iteration, index 0 being the median initialization.
    pub trajectory: Vec<f64>,
    /// Retained-set size per iteration.
    pub retained: Vec<usize>,
    /// Whether each iteration fell back to `c'`.
    pub enlarged: Vec<bool>,
}

impl NoiseEstimate {
    pub fn d0(&self) -> f64 {
        *self.trajectory.last().expect("trajectory is never empty")
    }
}

fn check_powers(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(invalid("empty magnitude vector"));
    }
    if let Some(i) = p.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(invalid(format!("magnitude {i} is negative or non-finite")));
    }
    Ok(())
}

/// Iterative truncated-mean estimate of the composite noise power.
pub fn estimate_noise_power(p: &[f64], params: &DenoiserParams) -> Result<NoiseEstimate> {
    check_powers(p)?;
    params.validate()?;
    let rho_min = params.min_retained_for(p.len());
    let kappa_c = kappa(params.confidence)?;
    let kappa_cp = kappa(params.confidence_enlarged)?;

    let mut d = median(p) / LN_2;
    let mut est = NoiseEstimate {
        trajectory: vec![d],
        retained: Vec::with_capacity(params.iterations),
        enlarged: Vec::with_capacity(params.iterations),
    };
    for _ in 0..params.iterations {
        let (mut n, mut sum) = truncated_sum(p, params.confidence * d);
        let mut kap = kappa_c;
        let enlarged = n < rho_min;
        if enlarged {
            (n, sum) = truncated_sum(p, params.confidence_enlarged * d);
            if !params.strict_kappa {
                kap = kappa_cp;
            }
        }
        d = if n == 0 { 0.0 } else { sum / n as f64 / kap };
        est.trajectory.push(d);
        est.retained.push(n);
        est.enlarged.push(enlarged);
    }
    Ok(est)
}

fn mean(p: &[f64]) -> f64 {
    p.iter().sum::<f64>() / p.len() as f64
}

/// `max(mean(p) - D0, 0)`.
pub fn estimate_channel_power(p: &[f64], d0: f64) -> f64 {
    (mean(p) - d0).max(0.0)
}

/// `max(mean(p)/D0 - 1, 0)`. A zero noise estimate with signal present
/// yields `+inf`.
pub fn estimate_sdnr(p: &[f64], d0: f64) -> f64 {
    let mu = mean(p);
    if d0 <= 0.0 {
        return if mu > 0.0 { f64::INFINITY } else { 0.0 };
    }
    (mu / d0 - 1.0).max(0.0)
}

/// Estimated number of active beams.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivityEstimate {
    /// `qM` in `[1, M]`.
    pub active_beams: usize,
    /// Set when the fourth-moment denominator was not positive.
    pub degenerate: bool,
}

impl ActivityEstimate {
    pub fn rate(&self, m: usize) -> f64 {
        self.active_beams as f64 / m as f64
    }
}

/// Neumaier-compensated sum of `p_m^2`.
pub fn fourth_moment_sum(p: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in p {
        let v = x * x;
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

fn activity_denominator(p: &[f64], d0: f64, power: f64) -> f64 {
    let m = p.len() as f64;
    fourth_moment_sum(p) - 2.0 * m * d0 * d0 - 4.0 * m * d0 * power
}

/// `qM = round(2 M^2 P^2 / (sum p^2 - 2 M D0^2 - 4 M D0 P))` clamped to
/// `[1, M]`, with `P = SDNR * D0`.
pub fn estimate_activity(p: &[f64], d0: f64, sdnr: f64) -> ActivityEstimate {
    let m = p.len();
    let power = if sdnr.is_finite() { sdnr * d0 } else { estimate_channel_power(p, d0) };
    let den = activity_denominator(p, d0, power);
    if !(den > 0.0) {
        return ActivityEstimate { active_beams: m, degenerate: true };
    }
    let mf = m as f64;
    let q = (2.0 * mf * mf * power * power / den).round();
    ActivityEstimate { active_beams: q.clamp(1.0, mf) as usize, degenerate: false }
}

/// Activity rate as the minimizer of the squared fourth-moment mismatch
/// `(sum p^2 - M (2 D0^2 + 4 D0 P + 2 P^2 / q))^2`, unclamped.
pub fn activity_rate_continuous(p: &[f64], d0: f64, sdnr: f64) -> Option<f64> {
    let power = sdnr * d0;
    let den = activity_denominator(p, d0, power);
    (den > 0.0).then(|| 2.0 * p.len() as f64 * power * power / den)
}

/// Same estimate found by scanning the grid `{1/M, ..., 1}` for the smallest
/// moment mismatch, used as an independent cross-check.
pub fn estimate_activity_grid(p: &[f64], d0: f64, sdnr: f64) -> ActivityEstimate {
    let m = p.len();
    let mf = m as f64;
    let power = sdnr * d0;
    let den = activity_denominator(p, d0, power);
    if !(den > 0.0) {
        return ActivityEstimate { active_beams: m, degenerate: true };
    }
    // moment mismatch scaled by q: |q den / (2 M P^2) - 1|
    let target = den / (2.0 * mf * power * power);
    let err = |a: usize| (a as f64 * target - mf).abs();
    let best = (1..=m).min_by(|&a, &b| err(a).total_cmp(&err(b))).unwrap_or(m);
    ActivityEstimate { active_beams: best, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kappa_values() {
        assert!((kappa(2.0).unwrap() - 0.686_97).abs() < 1e-5);
        assert!((kappa(4.0).unwrap() - 0.925_37).abs() < 1e-5);
        assert!((kappa(60.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(kappa(0.0).is_err() && kappa(-1.0).is_err());
        // small-k limit is k/2
        assert!((kappa(1e-6).unwrap() / 0.5e-6 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn kappa_matches_truncated_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..400_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        for k in [2.0, 4.0] {
            let kept: Vec<f64> = xs.iter().copied().filter(|&x| x <= k).collect();
            let m = mean(&kept);
            assert!((m / kappa(k).unwrap() - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn mad_examples() {
        assert!((mad_init(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 2.5 / LN_2).abs() < 1e-12);
        assert!((mad_init(&[3.0; 7]).unwrap() - 3.0 / LN_2).abs() < 1e-12);
        assert!(mad_init(&[]).is_err());
    }

    #[test]
    fn zeros_stay_zero() {
        let est = estimate_noise_power(&[0.0; 64], &DenoiserParams::default()).unwrap();
        assert!(est.trajectory.iter().all(|&d| d == 0.0));
        assert_eq!(est.trajectory.len(), 4);
    }

    #[test]
    fn pure_noise_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = DenoiserParams::default();
        let trials = 4000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let p: Vec<f64> = (0..64).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            acc += estimate_noise_power(&p, &params).unwrap().d0();
        }
        let avg = acc / trials as f64;
        assert!((0.9..=1.1).contains(&avg), "{avg}");
    }

    #[test]
    fn enlarged_set_used_when_sparse() {
        let mut p = vec![0.0; 60];
        p.extend([100.0, 200.0, 300.0, 400.0]);
        let params = DenoiserParams { min_retained: Some(62), ..Default::default() };
        let est = estimate_noise_power(&p, &params).unwrap();
        assert_eq!(est.d0(), 0.0);
        let mut p: Vec<f64> = (1..=64).map(|i| i as f64).collect();
        p[63] = 1e4;
        let est = estimate_noise_power(&p, &DenoiserParams { min_retained: Some(64), ..Default::default() }).unwrap();
        assert!(est.enlarged.iter().any(|&e| e));
    }

    #[test]
    fn rho_min_default() {
        let p = DenoiserParams::default();
        assert_eq!(p.min_retained_for(64), 8);
        assert_eq!(p.min_retained_for(4096), 512);
        assert_eq!(p.min_retained_for(4), 4);
    }

    #[test]
    fn params_validation() {
        let bad = DenoiserParams { confidence_enlarged: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(DenoiserParams { iterations: 0, ..Default::default() }.validate().is_err());
        assert!(DenoiserParams { cost_ratio: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn power_and_sdnr() {
        let p = [1.0, 3.0];
        assert_eq!(estimate_channel_power(&p, 0.5), 1.5);
        assert_eq!(estimate_channel_power(&p, 5.0), 0.0);
        assert_eq!(estimate_sdnr(&p, 1.0), 1.0);
        assert_eq!(estimate_sdnr(&p, 3.0), 0.0);
        assert_eq!(estimate_sdnr(&p, 0.0), f64::INFINITY);
        assert_eq!(estimate_sdnr(&[0.0, 0.0], 0.0), 0.0);
    }

    #[test]
    fn activity_clamps() {
        let act = estimate_activity(&[1.0; 8], 1.0, 0.5);
        assert!(act.degenerate);
        assert_eq!(act.active_beams, 8);
    }

    #[test]
    fn activity_grid_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let m = 64;
            let p: Vec<f64> = (0..m)
                .map(|_| {
                    let x = -(1.0 - rng.random::<f64>()).ln();
                    if rng.random::<f64>() < 0.2 {
                        x * rng.random_range(2.0..50.0)
                    } else {
                        x
                    }
                })
                .collect();
            let d0 = estimate_noise_power(&p, &DenoiserParams::default()).unwrap().d0();
            let s = estimate_sdnr(&p, d0);
            let a = estimate_activity(&p, d0, s);
            let g = estimate_activity_grid(&p, d0, s);
            assert_eq!(a.degenerate, g.degenerate);
            if !a.degenerate {
                let cont = activity_rate_continuous(&p, d0, s).unwrap();
                let want = (cont * m as f64).round().clamp(1.0, m as f64) as usize;
                assert_eq!(a.active_beams, want);
                assert_eq!(a.active_beams, g.active_beams);
            }
        }
    }
}
