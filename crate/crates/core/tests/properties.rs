use beamspace_denoiser::beamspace::{from_beamspace, magnitudes_squared, to_beamspace};
use beamspace_denoiser::chanmodel::{generate_geometric_channel, steering_vector, Path, SteeringConfig};
use beamspace_denoiser::denoiser::{compute_threshold, denoise, denoise_pipeline, likelihood_ratio};
use beamspace_denoiser::estimators::{estimate_activity, estimate_noise_power, estimate_sdnr, kappa};
use beamspace_denoiser::fixedpoint::{fx_pipeline, FxFormats};
use beamspace_denoiser::{BeamspaceVector, ChannelVector, DenoiserParams, QuantizerModel, Resolution, ThresholdInputs};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn powers(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, len)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn quantizer_idempotent(bits in 1u32..=6, v in complex_vec(1..64), scale in 0.1f64..10.0) {
        let q = QuantizerModel::cached(Resolution::Bits(bits)).unwrap();
        let once = q.quantize(&ChannelVector::new(v).unwrap(), scale).unwrap();
        let twice = q.quantize(&once, scale).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn quantizer_monotone(bits in 1u32..=6, a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let q = QuantizerModel::cached(Resolution::Bits(bits)).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(q.quantize_scalar(lo, 1.0) <= q.quantize_scalar(hi, 1.0));
    }

    #[test]
    fn transform_is_unitary(v in complex_vec(1..200)) {
        let h = ChannelVector::new(v).unwrap();
        let hb = to_beamspace(&h);
        prop_assert!(rel_close(hb.norm_sqr(), h.norm_sqr(), 1e-12));
        let back = from_beamspace(&hb);
        prop_assert!(back.distance_sqr(&h) <= 1e-24 * h.norm_sqr().max(1.0));
    }

    #[test]
    fn steering_norm_is_m(phi in -0.5f64..0.5, m in 2usize..300) {
        let a = steering_vector(phi, m).unwrap();
        prop_assert!(rel_close(a.norm_sqr(), m as f64, 1e-12));
    }

    #[test]
    fn channel_linear_in_gains(
        paths in prop::collection::vec((-0.5f64..0.5, -2.0f64..2.0, -2.0f64..2.0), 1..5),
        m in 2usize..64,
    ) {
        let mk = |s: f64| SteeringConfig {
            m,
            paths: paths.iter().map(|&(phi, re, im)| Path { phi, gain: Complex64::new(re, im) * s }).collect(),
        };
        let h1 = generate_geometric_channel(&mk(1.0)).unwrap();
        let h2 = generate_geometric_channel(&mk(2.0)).unwrap();
        prop_assert!(h2.distance_sqr(&h1.scaled(2.0)) <= 1e-20 * h2.norm_sqr().max(1.0));
    }

    #[test]
    fn noise_estimate_scale_equivariant(p in powers(2..128), s in 0.01f64..100.0) {
        let params = DenoiserParams::default();
        let a = estimate_noise_power(&p, &params).unwrap();
        let scaled: Vec<f64> = p.iter().map(|x| x * s).collect();
        let b = estimate_noise_power(&scaled, &params).unwrap();
        prop_assert!(rel_close(b.d0(), s * a.d0(), 1e-9));
    }

    #[test]
    fn noise_estimate_exact_under_binary_scaling(p in powers(2..128), k in -20i32..20) {
        let params = DenoiserParams::default();
        let s = 2f64.powi(k);
        let a = estimate_noise_power(&p, &params).unwrap();
        let scaled: Vec<f64> = p.iter().map(|x| x * s).collect();
        let b = estimate_noise_power(&scaled, &params).unwrap();
        prop_assert_eq!(&a.retained, &b.retained);
        for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
            prop_assert_eq!(x * s, *y);
        }
    }

    #[test]
    fn retained_set_grows_with_confidence(p in powers(2..128), c1 in 0.5f64..8.0, dc in 0.01f64..8.0) {
        let one = |c: f64| DenoiserParams {
            confidence: c,
            confidence_enlarged: c * 2.0,
            min_retained: Some(1),
            iterations: 1,
            ..Default::default()
        };
        let a = estimate_noise_power(&p, &one(c1)).unwrap();
        let b = estimate_noise_power(&p, &one(c1 + dc)).unwrap();
        prop_assert!(b.retained[0] >= a.retained[0]);
    }

    #[test]
    fn noise_trajectory_bounded(p in powers(1..128), t in 1usize..8) {
        let params = DenoiserParams { iterations: t, ..Default::default() };
        let est = estimate_noise_power(&p, &params).unwrap();
        let bound = p.iter().copied().fold(0.0, f64::max) / kappa(params.confidence).unwrap();
        for &d in &est.trajectory {
            prop_assert!(d >= 0.0 && d <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn activity_in_range(p in powers(1..128), d0 in 0.01f64..50.0) {
        let sdnr = estimate_sdnr(&p, d0);
        prop_assume!(sdnr > 0.0 && sdnr.is_finite());
        let a = estimate_activity(&p, d0, sdnr);
        prop_assert!(a.active_beams >= 1 && a.active_beams <= p.len());
    }

    #[test]
    fn likelihood_ratio_at_threshold(
        d0 in 0.01f64..10.0,
        sdnr in 0.01f64..100.0,
        m in 2usize..512,
        frac in 0.0f64..1.0,
        c in 0.25f64..16.0,
    ) {
        let qm = 1 + ((m - 1) as f64 * frac) as usize;
        prop_assume!(qm < m);
        let q = qm as f64 / m as f64;
        let eta = compute_threshold(&ThresholdInputs { d0, sdnr, q, cost_ratio: c }).unwrap();
        prop_assume!(eta.is_finite() && eta > 0.0);
        let lr = likelihood_ratio(eta, d0, sdnr, q);
        prop_assert!(rel_close(lr, (1.0 - q) / q * c, 1e-9));
    }

    #[test]
    fn threshold_increases_with_cost(
        d0 in 0.01f64..10.0,
        sdnr in 0.01f64..100.0,
        q in 0.01f64..0.99,
        c in 0.25f64..16.0,
        dc in 0.01f64..4.0,
    ) {
        let t = |c: f64| compute_threshold(&ThresholdInputs { d0, sdnr, q, cost_ratio: c }).unwrap();
        prop_assert!(t(c + dc) > t(c));
    }

    #[test]
    fn support_shrinks_with_cost(v in complex_vec(8..64), dc in 0.5f64..8.0) {
        let h = ChannelVector::new(v).unwrap();
        let lo = DenoiserParams::default();
        let hi = DenoiserParams { cost_ratio: lo.cost_ratio + dc, ..lo.clone() };
        let (_, a) = denoise_pipeline(&h, &lo, 0.9, None).unwrap();
        let (_, b) = denoise_pipeline(&h, &hi, 0.9, None).unwrap();
        if a.eta.is_finite() && b.eta.is_finite() {
            prop_assert!(b.eta >= a.eta);
            for (x, y) in a.decisions.iter().zip(&b.decisions) {
                prop_assert!(!*y || *x);
            }
        }
    }

    #[test]
    fn decisions_invariant_under_common_scaling(v in complex_vec(1..64), eta in 0.0f64..50.0, k in -10i32..10) {
        let hb = BeamspaceVector::new(v).unwrap();
        let s = 2f64.powi(k);
        let a = denoise(&hb, eta, 0.8).unwrap();
        let b = denoise(&hb.scaled(s), eta * s * s, 0.8).unwrap();
        prop_assert_eq!(a.decisions, b.decisions);
    }

    #[test]
    fn pipeline_mask_invariant_under_input_scaling(v in complex_vec(4..64), k in -6i32..6) {
        let h = ChannelVector::new(v).unwrap();
        let params = DenoiserParams::default();
        let (_, a) = denoise_pipeline(&h, &params, 0.8, None).unwrap();
        let (_, b) = denoise_pipeline(&h.scaled(2f64.powi(k)), &params, 0.8, None).unwrap();
        prop_assert_eq!(a.decisions, b.decisions);
    }

    #[test]
    fn denoised_energy_bounded(v in complex_vec(1..64), eta in 0.0f64..50.0, alpha in 0.3f64..1.0) {
        let hb = BeamspaceVector::new(v).unwrap();
        let r = denoise(&hb, eta, alpha).unwrap();
        prop_assert!(r.beamspace.norm_sqr() <= hb.norm_sqr() / (alpha * alpha) * (1.0 + 1e-12));
        let nonzero = r.beamspace.entries().iter().filter(|z| z.norm_sqr() > 0.0).count();
        prop_assert!(nonzero <= r.support_size() && r.support_size() <= hb.len());
        for ((z, &d), y) in hb.entries().iter().zip(&r.decisions).zip(r.beamspace.entries()) {
            if d {
                prop_assert_eq!(*y, z / alpha);
            } else {
                prop_assert_eq!(*y, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn fixed_point_is_deterministic(v in complex_vec(64..65)) {
        let h = ChannelVector::new(v).unwrap();
        let params = DenoiserParams::default();
        let a = fx_pipeline(&h, &params, 0.9, None, &FxFormats::declared()).unwrap();
        let b = fx_pipeline(&h, &params, 0.9, None, &FxFormats::declared()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn power_is_squared_magnitude(v in complex_vec(1..64)) {
        let hb = BeamspaceVector::new(v.clone()).unwrap();
        for (p, z) in magnitudes_squared(&hb).iter().zip(&v) {
            prop_assert_eq!(*p, z.norm_sqr());
        }
    }
}

#[test]
fn alpha_strictly_increasing() {
    let alphas: Vec<f64> = (1..=8).map(|b| QuantizerModel::cached(Resolution::Bits(b)).unwrap().alpha()).collect();
    assert!(alphas.windows(2).all(|w| w[0] < w[1]));
    assert!(alphas[7] > 0.9999 && alphas[7] < 1.0);
}
