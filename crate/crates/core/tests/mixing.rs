mod common;

use sd_sentinel::seed;
use sd_sentinel::simulate::{
    augment_sd, place_peaks, white_noise, AugmentSpec, Placement, SdSource, SdTemplate,
};

#[test]
fn zero_alpha_beta_collapses_to_bandpassed_base() {
    let d = common::collapse_deviation(17);
    assert!(d <= 1e-9, "{d:e}");
}

#[test]
fn trough_suppression_follows_alpha() {
    for alpha in [0.1, 0.2, 0.3] {
        let r = common::trough_ratio(alpha, 4);
        let want = 1.0 / (1.0 + alpha);
        assert!((r - want).abs() / want <= 0.05, "alpha {alpha}: {r} vs {want}");
    }
}

#[test]
fn sd_free_mix_is_base_plus_scaled_noise() {
    use sd_sentinel::preprocess::{bandpass, BandpassSpec};
    let base = common::normalized_base(20, 200.0, 2);
    let (alpha, beta, s) = (0.2, 0.15, 3);
    let spec = AugmentSpec { alpha, beta, seed: s, placement: Placement::Peaks(vec![]), envelope_smoothing_s: 0.0 };
    let (mixed, labels) = augment_sd(&base, SdSource::Template(&SdTemplate::default()), &spec).unwrap();
    assert!(labels.is_empty());
    let noise = white_noise(base.len(), seed::child_seed(s, 0));
    let direct: Vec<f64> = base.samples().iter().zip(&noise).map(|(x, n)| (x + beta * n) / (1.0 + beta)).collect();
    let want = bandpass(&sd_sentinel::EegTrace::new(direct, 200.0, 0.0, base.channel_id()).unwrap(), &BandpassSpec::default()).unwrap();
    assert!(common::max_abs_diff(mixed.samples(), want.samples()) < 1e-9);
}

#[test]
fn white_noise_is_unit_rms_and_seeded() {
    let a = white_noise(10_000, 5);
    let rms = (a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64).sqrt();
    assert!((rms - 1.0).abs() < 1e-12);
    assert_eq!(a, white_noise(10_000, 5));
    assert_ne!(a, white_noise(10_000, 6));
}

#[test]
fn poisson_placement_has_poisson_counts() {
    let t = SdTemplate::default();
    let duration = 600.0;
    let rate = 0.5;
    let mean = rate * duration / 60.0;
    let draws = 3000;
    let counts: Vec<f64> = (0..draws)
        .map(|s| {
            let p = place_peaks(&Placement::Poisson { rate_per_h: rate }, duration, &t, seed::child_seed(99, s)).unwrap();
            assert!(p.windows(2).all(|w| w[0] < w[1]));
            assert!(p.iter().all(|&m| m >= t.peak_offset_min() && m <= duration - (t.duration_min() - t.peak_offset_min())));
            p.len() as f64
        })
        .collect();
    let m = counts.iter().sum::<f64>() / draws as f64;
    let var = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let se = (mean / draws as f64).sqrt();
    assert!((m - mean).abs() < 4.0 * se, "mean {m} vs {mean}");
    assert!((var / mean - 1.0).abs() < 0.15, "dispersion {}", var / mean);
}
