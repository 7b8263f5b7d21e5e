//! Ground-truth channel generators and thermal noise.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beamspace::{BeamspaceVector, ChannelVector};
use crate::error::{invalid, Result};

/// One propagation path: spatial frequency and complex gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub phi: f64,
    pub gain: Complex64,
}

/// Array size plus the paths that make up a geometric channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringConfig {
    pub m: usize,
    pub paths: Vec<Path>,
}

impl SteeringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(invalid(format!("antenna count must be at least 2, got {}", self.m)));
        }
        if self.paths.is_empty() {
            return Err(invalid("at least one path is required"));
        }
        for p in &self.paths {
            check_phi(p.phi)?;
            if !p.gain.re.is_finite() || !p.gain.im.is_finite() {
                return Err(invalid("path gain must be finite"));
            }
        }
        Ok(())
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if !(-0.5..0.5).contains(&phi) {
        return Err(invalid(format!("spatial frequency {phi} outside [-1/2, 1/2)")));
    }
    Ok(())
}

/// `a(phi)_m = exp(-j 2 pi m phi)` for `m = 0..M`.
pub fn steering_vector(phi: f64, m: usize) -> Result<ChannelVector> {
    if m < 1 {
        return Err(invalid("antenna count must be positive"));
    }
    check_phi(phi)?;
    Ok(ChannelVector::from_vec(steering_entries(phi, m)))
}

fn steering_entries(phi: f64, m: usize) -> Vec<Complex64> {
    (0..m).map(|i| Complex64::from_polar(1.0, -2.0 * PI * i as f64 * phi)).collect()
}

/// `h = sum_l g_l a(phi_l)`.
pub fn generate_geometric_channel(cfg: &SteeringConfig) -> Result<ChannelVector> {
    cfg.validate()?;
    let mut h = vec![Complex64::new(0.0, 0.0); cfg.m];
    for p in &cfg.paths {
        for (hm, a) in h.iter_mut().zip(steering_entries(p.phi, cfg.m)) {
            *hm += p.gain * a;
        }
    }
    Ok(ChannelVector::from_vec(h))
}

/// Where random path frequencies are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Grid {
    /// `phi = k/M - 1/2` for uniform integer `k`, so each path lands in one DFT bin.
    #[default]
    OnGrid,
    /// `phi` uniform over `[-1/2, 1/2)`; energy leaks into neighbouring bins.
    OffGrid,
}

/// Random multipath model: `num_paths` paths whose powers decay geometrically
/// by `power_decay` and sum to one, with circular Gaussian gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricModel {
    pub num_paths: usize,
    pub power_decay: f64,
    pub grid: Grid,
}

impl Default for GeometricModel {
    fn default() -> Self {
        Self { num_paths: 3, power_decay: 0.5, grid: Grid::OnGrid }
    }
}

impl GeometricModel {
    /// Per-path mean powers, normalized to unit total.
    pub fn path_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.num_paths).map(|l| self.power_decay.powi(l as i32)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<SteeringConfig> {
        if self.num_paths == 0 {
            return Err(invalid("geometric model needs at least one path"));
        }
        if !(self.power_decay > 0.0 && self.power_decay.is_finite()) {
            return Err(invalid("power decay must be positive"));
        }
        let paths = self
            .path_powers()
            .into_iter()
            .map(|pw| {
                let phi = match self.grid {
                    Grid::OnGrid => rng.random_range(0..m) as f64 / m as f64 - 0.5,
                    Grid::OffGrid => rng.random_range(-0.5..0.5),
                };
                Path { phi, gain: complex_gaussian(rng, pw) }
            })
            .collect();
        Ok(SteeringConfig { m, paths })
    }

    pub fn generate<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<ChannelVector> {
        generate_geometric_channel(&self.draw(m, rng)?)
    }
}

/// Bernoulli-complex-Gaussian beamspace prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernoulliGaussianConfig {
    pub m: usize,
    /// Activity rate in `(0, 1]`.
    pub q: f64,
    /// Average per-entry channel power.
    pub power: f64,
}

impl BernoulliGaussianConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(invalid("antenna count must be positive"));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(invalid(format!("activity rate {} outside (0, 1]", self.q)));
        }
        if (self.q * self.m as f64).round() < 1.0 {
            return Err(invalid("activity rate yields fewer than one active beam"));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(invalid("channel power must be finite and positive"));
        }
        Ok(())
    }
}

/// Each entry is zero with probability `1 - q`, else `CN(0, power / q)`.
pub fn generate_bg_beamspace_channel<R: Rng + ?Sized>(
    cfg: &BernoulliGaussianConfig,
    rng: &mut R,
) -> Result<BeamspaceVector> {
    cfg.validate()?;
    let active_var = cfg.power / cfg.q;
    let entries = (0..cfg.m)
        .map(|_| if rng.random::<f64>() < cfg.q { complex_gaussian(rng, active_var) } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(BeamspaceVector::from_vec(entries))
}

/// One `CN(0, var)` draw.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = var.sqrt() * FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Adds i.i.d. `CN(0, n0)` noise to every entry.
pub fn add_awgn<R: Rng + ?Sized>(h: &ChannelVector, n0: f64, rng: &mut R) -> Result<ChannelVector> {
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(invalid(format!("noise variance {n0} must be finite and nonnegative")));
    }
    if n0 == 0.0 {
        return Ok(h.clone());
    }
    Ok(ChannelVector::from_vec(h.entries().iter().map(|&z| z + complex_gaussian(rng, n0)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamspace::{dft_direct, magnitudes_squared, to_beamspace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_frequency_is_all_ones() {
        let a = steering_vector(0.0, 4).unwrap();
        assert!(a.entries().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn steering_rejects_out_of_range() {
        assert!(steering_vector(0.5, 8).is_err());
        assert!(steering_vector(-0.51, 8).is_err());
        assert!(steering_vector(0.1, 0).is_err());
        assert!(steering_vector(-0.5, 8).is_ok());
    }

    #[test]
    fn on_grid_steering_hits_one_bin() {
        let m = 16;
        for k in -8i64..8 {
            let phi = k as f64 / m as f64;
            let a = steering_vector(phi, m).unwrap();
            let spec = dft_direct(a.entries(), false);
            let bin = (-k).rem_euclid(m as i64) as usize;
            for (i, z) in spec.iter().enumerate() {
                let want = if i == bin { (m as f64).sqrt() } else { 0.0 };
                assert!((z.norm() - want).abs() < 1e-9, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn single_path_and_cancellation() {
        let one = Complex64::new(1.0, 0.0);
        let cfg = SteeringConfig { m: 8, paths: vec![Path { phi: 0.0, gain: one }] };
        let h = generate_geometric_channel(&cfg).unwrap();
        assert!(h.entries().iter().all(|z| (z - one).norm() < 1e-15));
        let cfg = SteeringConfig { m: 8, paths: vec![Path { phi: 0.2, gain: one }, Path { phi: 0.2, gain: -one }] };
        assert!(generate_geometric_channel(&cfg).unwrap().norm_sqr() < 1e-24);
    }

    #[test]
    fn on_grid_channel_has_at_most_three_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = GeometricModel::default();
        for _ in 0..50 {
            let cfg = model.draw(64, &mut rng).unwrap();
            let p = magnitudes_squared(&to_beamspace(&generate_geometric_channel(&cfg).unwrap()));
            let mut bins: Vec<usize> =
                cfg.paths.iter().map(|pa| ((-(pa.phi * 64.0).round() as i64).rem_euclid(64)) as usize).collect();
            bins.sort_unstable();
            bins.dedup();
            for (i, &v) in p.iter().enumerate() {
                if !bins.contains(&i) {
                    assert!(v < 1e-20);
                }
            }
        }
    }

    #[test]
    fn path_powers_sum_to_one() {
        let p = GeometricModel::default().path_powers();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] / p[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bg_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = BernoulliGaussianConfig { m: 64, q: 0.25, power: 2.0 };
        let trials = 2000;
        let (mut active, mut power) = (0usize, 0.0);
        for _ in 0..trials {
            let hb = generate_bg_beamspace_channel(&cfg, &mut rng).unwrap();
            active += hb.entries().iter().filter(|z| z.norm_sqr() > 0.0).count();
            power += hb.norm_sqr();
        }
        let n = (cfg.m * trials) as f64;
        let rate = active as f64 / n;
        assert!((rate - 0.25).abs() < 3.0 * (0.25 * 0.75 / n).sqrt());
        assert!((power / n / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn bg_full_activity_has_no_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = BernoulliGaussianConfig { m: 64, q: 1.0, power: 1.0 };
        let hb = generate_bg_beamspace_channel(&cfg, &mut rng).unwrap();
        assert!(hb.entries().iter().all(|z| z.norm_sqr() > 0.0));
        assert!(BernoulliGaussianConfig { m: 64, q: 0.001, power: 1.0 }.validate().is_err());
    }

    #[test]
    fn awgn_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = ChannelVector::zeros(1 << 20);
        assert_eq!(add_awgn(&h, 0.0, &mut rng).unwrap(), h);
        let n = add_awgn(&h, 0.5, &mut rng).unwrap();
        let len = n.len() as f64;
        assert!((n.norm_sqr() / len / 0.5 - 1.0).abs() < 0.02);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for z in n.entries() {
            sxy += z.re * z.im;
            sxx += z.re * z.re;
            syy += z.im * z.im;
        }
        assert!((sxy / (sxx * syy).sqrt()).abs() < 0.01);
    }

    #[test]
    fn reproducible() {
        let model = GeometricModel { grid: Grid::OffGrid, ..Default::default() };
        let a = model.generate(32, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = model.generate(32, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
