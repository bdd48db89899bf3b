mod common;

use rand::Rng;
use sd_sentinel::detector::{build_model, infer, train, TrainConfig, Variant};
use sd_sentinel::seed;
use sd_sentinel::windowing::WindowSample;

#[test]
fn full_network_gradients_match_finite_differences() {
    let errs = common::network_trials(12, 0);
    assert!(errs.len() > 1000);
    let (p95, max) = common::p95_max(errs);
    assert!(p95 <= 1e-4 && max <= 1e-3, "p95 {p95:e} max {max:e}");
}

#[test]
fn every_layer_gradient_matches_finite_differences() {
    let mut rng = seed::rng(21);
    let mut by_layer: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for _ in 0..20 {
        for (name, e) in common::layer_gradient_errors(&mut rng) {
            by_layer.entry(name).or_default().push(e);
        }
    }
    assert_eq!(by_layer.len(), 7);
    for (name, errs) in by_layer {
        let (p95, max) = common::p95_max(errs);
        assert!(p95 <= 1e-4 && max <= 1e-3, "{name}: p95 {p95:e} max {max:e}");
    }
}

#[test]
fn forward_kernels_match_nested_loop_oracles() {
    let worst = common::kernel_oracle_deviation(100, &mut seed::rng(5));
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn overfits_small_balanced_set() {
    let mut rng = seed::rng(11);
    let samples: Vec<WindowSample> = (0..32)
        .map(|i| WindowSample {
            image: (0..900).map(|_| rng.random()).collect(),
            vector: (0..30).map(|_| rng.random_range(-2.0..2.0)).collect(),
            center_min: 15 + i,
            label: (i % 2) as u8,
        })
        .collect();
    let mut model = build_model(Variant::Dual, 3);
    let cfg = TrainConfig { epochs: 200, batch_size: 32, ..TrainConfig::default() };
    let report = train(&mut model, &samples, &cfg, 5).unwrap();
    let out = infer(&model, &samples, 0.5).unwrap();
    let correct = out.values.iter().zip(&samples).filter(|(v, s)| **v == s.label).count();
    assert_eq!(correct, 32, "final loss {:?}", report.epoch_losses.last());
}
