use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use taxelsim::contact::ContactParams;
use taxelsim::signal::{
    fit_contact_params, fit_contact_params_with, histogram_compare, normalize_reading,
    simulate_response_curve, simulate_response_curve_with, CurveSample, CurveSource, FitOptions,
    ForceResponseCurve, KdConfidence, NormalizationConfig, PressScene,
};

fn loads() -> Vec<f64> {
    (1..=12).map(|i| i as f64 * 1.25e-4).collect()
}

fn dynamic_scene() -> PressScene {
    PressScene {
        rates: vec![0.0, 0.02, 0.05],
        ..PressScene::default()
    }
}

/// Adds `N(0, (level · max reading)²)` to every reading.
fn with_noise(curve: &ForceResponseCurve, level: f64, rng: &mut impl Rng) -> ForceResponseCurve {
    let max = curve.readings().into_iter().fold(0.0, f64::max);
    let noise = Normal::new(0.0, level * max).unwrap();
    let samples = curve
        .samples
        .iter()
        .map(|s| CurveSample {
            reading: s.reading + noise.sample(rng),
            ..*s
        })
        .collect();
    ForceResponseCurve::new(samples, CurveSource::Measured).unwrap()
}

proptest! {
    #[test]
    fn normalization_is_monotone_per_branch_and_bounded(
        a in 0.0f64..2000.0, b in 0.0f64..2000.0, frame_max in 0.0f64..2000.0,
    ) {
        let cfg = NormalizationConfig::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (n_lo, n_hi) = (normalize_reading(lo, &cfg, frame_max), normalize_reading(hi, &cfg, frame_max));
        prop_assert!((0.0..=1.0).contains(&n_lo) && (0.0..=1.0).contains(&n_hi));
        if (lo < cfg.tau) == (hi < cfg.tau) {
            prop_assert!(n_lo <= n_hi);
        }
    }

    #[test]
    fn js_divergence_is_symmetric_and_bounded(
        a in prop::collection::vec(-0.2f64..1.2, 1..200),
        b in prop::collection::vec(-0.2f64..1.2, 1..200),
        bins in 2usize..64,
    ) {
        let ab = histogram_compare(&a, &b, bins);
        let ba = histogram_compare(&b, &a, bins);
        prop_assert_eq!(ab.divergence.to_bits(), ba.divergence.to_bits());
        prop_assert!((0.0..=1.0).contains(&ab.divergence));
        prop_assert_eq!(ab.real_counts.iter().sum::<u64>() as usize, a.len());
        prop_assert_eq!(&ab.edges, &ba.edges);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fit_never_worsens(
        k_n in 0.2f64..5.0, k_d in 1e-4f64..1e-2,
        init_n in 0.1f64..10.0, init_d in 1e-4f64..1e-1,
        budget in 1usize..60,
    ) {
        let truth = ContactParams::new(k_n, k_d).unwrap();
        let measured = simulate_response_curve_with(&truth, &loads(), &dynamic_scene());
        let opts = FitOptions { budget, scene: dynamic_scene() };
        let fit = fit_contact_params_with(&measured, &ContactParams::new(init_n, init_d).unwrap(), &opts).unwrap();
        prop_assert!(fit.mse <= fit.initial_mse);
        prop_assert!(fit.mse >= 0.0 && fit.k_n > 0.0 && fit.k_d > 0.0);
        prop_assert!(fit.iterations <= budget);
    }
}

#[test]
fn static_curve_cannot_constrain_damping() {
    let measured = simulate_response_curve(&ContactParams::default(), &loads());
    let fit = fit_contact_params(&measured, &ContactParams::new(0.5, 1e-3).unwrap(), 200).unwrap();
    assert_eq!(fit.k_d_confidence, KdConfidence::Unconstrained);
    assert!((fit.k_n - 1.0).abs() < 1e-3);
}

#[test]
fn noisy_static_curves_recover_stiffness() {
    let truth = ContactParams::default();
    let clean = simulate_response_curve(&truth, &loads());
    let init = ContactParams::new(0.5, 1e-3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let noisy = with_noise(&clean, 0.05, &mut rng);
        let fit = fit_contact_params(&noisy, &init, 200).unwrap();
        assert!(
            (fit.k_n - 1.0).abs() <= 0.1,
            "trial {trial}: k_n = {}",
            fit.k_n
        );
    }
}

#[test]
fn same_distribution_histograms_are_close() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let dist = Normal::new(0.5, 0.1).unwrap();
    let a: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
    let report = histogram_compare(&a, &b, 32);
    assert!(report.divergence < 0.01, "{}", report.divergence);
    assert_eq!(report.edges.len(), 33);
}
