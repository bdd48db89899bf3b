//! Labelled SD-carrying EEG from SD-free base traces.
//!
//! The mixture is
//! `BPF( (1/(1+β)) · ( (s + α·s·|e|)/(1+α) + β·n ) )`
//! with `s` the normalized base, `e` the SD source (a suppression profile or
//! an SD-carrying trace), `n` unit-RMS white noise and `BPF` the 0.5–45 Hz
//! bandpass.

mod dataset;
mod template;

pub use dataset::{
    generate_segment, negative_control_plans, plan_segments, write_validation_bundle, DatasetSpec,
    DriftSpec, SdEvent, SegmentPlan, Split,
};
pub use template::{SdTemplate, TemplateRanges};

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eeg_io::{EegTrace, SdLabelSet};
use crate::error::{Error, Result};
use crate::preprocess::{self, BandpassSpec};
use crate::seed;
use crate::spectro::PowerSeries;

pub const ALPHA_RANGE: (f64, f64) = (0.0, 0.3);
pub const BETA_RANGE: (f64, f64) = (0.0, 0.2);
const NORM_TOL: f64 = 1e-6;

/// Where SD peaks go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Peak minutes.
    Peaks(Vec<f64>),
    /// Poisson count at `rate_per_h`, positions uniform over the span where
    /// the whole profile fits.
    Poisson { rate_per_h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSpec {
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub placement: Placement,
    /// Moving-RMS smoothing of `|e|` for trace sources; 0 keeps the raw
    /// rectified samples.
    #[serde(default)]
    pub envelope_smoothing_s: f64,
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        if !within(self.alpha, ALPHA_RANGE) {
            return Err(Error::InvalidArgument(format!("alpha {} outside [0, 0.3]", self.alpha)));
        }
        if !within(self.beta, BETA_RANGE) {
            return Err(Error::InvalidArgument(format!("beta {} outside [0, 0.2]", self.beta)));
        }
        if !(self.envelope_smoothing_s >= 0.0 && self.envelope_smoothing_s.is_finite()) {
            return Err(Error::InvalidArgument("envelope smoothing must be ≥ 0".into()));
        }
        if let Placement::Poisson { rate_per_h } = self.placement {
            if !(rate_per_h >= 0.0 && rate_per_h.is_finite()) {
                return Err(Error::InvalidArgument(format!("SD rate {rate_per_h} per hour")));
            }
        }
        Ok(())
    }
}

/// What supplies `|e|`.
#[derive(Debug, Clone, Copy)]
pub enum SdSource<'a> {
    /// The same profile at every placed peak.
    Template(&'a SdTemplate),
    /// A normalized SD-carrying trace with its own labels; placement is
    /// ignored.
    Trace { trace: &'a EegTrace, labels: &'a SdLabelSet },
}

fn check_normalized(trace: &EegTrace, what: &str) -> Result<()> {
    let (mean, rms) = (trace.mean(), trace.rms());
    if mean.abs() > NORM_TOL || (rms - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!(
            "{what} must be normalized (mean {mean:.3e}, RMS {rms:.6})"
        )));
    }
    Ok(())
}

/// Mixes SDs into `base` and bandpasses the result.
pub fn augment_sd(
    base: &EegTrace,
    source: SdSource<'_>,
    spec: &AugmentSpec,
) -> Result<(EegTrace, SdLabelSet)> {
    spec.validate()?;
    check_normalized(base, "base trace")?;
    let fs = base.sample_rate_hz();
    match source {
        SdSource::Template(t) => {
            t.validate()?;
            let peaks = place_peaks(&spec.placement, base.duration_min(), t, spec.seed)?;
            let events: Vec<SdEvent> = peaks.iter().map(|&p| SdEvent { peak_min: p, template: *t }).collect();
            mix_events(base, &events, spec.alpha, spec.beta, spec.seed)
        }
        SdSource::Trace { trace, labels } => {
            check_normalized(trace, "SD source trace")?;
            if trace.sample_rate_hz() != fs {
                return Err(Error::InvalidArgument(format!(
                    "sample rates differ: base {fs} Hz, SD source {} Hz",
                    trace.sample_rate_hz()
                )));
            }
            if trace.len() != base.len() {
                return Err(Error::ShapeMismatch(format!(
                    "base has {} samples, SD source {}",
                    base.len(),
                    trace.len()
                )));
            }
            labels.check_within(base.duration_min())?;
            let env = rectified_envelope(trace.samples(), fs, spec.envelope_smoothing_s);
            let out = mix(base, &env, spec.alpha, spec.beta, spec.seed)?;
            Ok((out, labels.clone()))
        }
    }
}

/// Injects `events` (combined by pointwise minimum where they overlap).
pub fn mix_events(
    base: &EegTrace,
    events: &[SdEvent],
    alpha: f64,
    beta: f64,
    noise_seed: u64,
) -> Result<(EegTrace, SdLabelSet)> {
    let env = suppression_envelope(base.len(), base.sample_rate_hz(), events);
    let labels = event_labels(events, base.duration_min())?;
    let out = mix(base, &env, alpha, beta, noise_seed)?;
    Ok((out, labels))
}

/// Per-sample multiplier of the combined profiles; 1 away from any SD.
pub fn suppression_envelope(n: usize, fs: f64, events: &[SdEvent]) -> Vec<f64> {
    let mut env = vec![1.0f64; n];
    for e in events {
        let start_min = e.peak_min - e.template.peak_offset_min();
        let i0 = ((start_min * 60.0 * fs).floor().max(0.0) as usize).min(n);
        let i1 = (((start_min + e.template.duration_min()) * 60.0 * fs).ceil().max(0.0) as usize).min(n);
        for (i, v) in env.iter_mut().enumerate().take(i1).skip(i0) {
            let t_min = i as f64 / fs / 60.0 - start_min;
            *v = v.min(e.template.value_at(t_min));
        }
    }
    env
}

fn event_labels(events: &[SdEvent], duration_min: f64) -> Result<SdLabelSet> {
    let mut pairs: Vec<(f64, (f64, f64))> = events
        .iter()
        .map(|e| {
            let start = e.peak_min - e.template.peak_offset_min();
            (e.peak_min, (start.max(0.0), (start + e.template.duration_min()).min(duration_min)))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0);
    let labels = SdLabelSet::new(
        pairs.iter().map(|p| p.0).collect(),
        Some(pairs.iter().map(|p| p.1).collect()),
    )?;
    labels.check_within(duration_min)?;
    Ok(labels)
}

fn rectified_envelope(x: &[f64], fs: f64, smoothing_s: f64) -> Vec<f64> {
    let half = (smoothing_s * fs / 2.0).round() as usize;
    if half == 0 {
        return x.iter().map(|v| v.abs()).collect();
    }
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v * v;
        prefix.push(acc);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            ((prefix[hi] - prefix[lo]).max(0.0) / (hi - lo) as f64).sqrt()
        })
        .collect()
}

/// Unit-RMS white Gaussian noise.
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    x
}

fn mix(base: &EegTrace, env: &[f64], alpha: f64, beta: f64, noise_seed: u64) -> Result<EegTrace> {
    let noise = white_noise(base.len(), seed::child_seed(noise_seed, 0));
    let mixed: Vec<f64> = base
        .samples()
        .iter()
        .zip(env)
        .zip(&noise)
        .map(|((&s, &e), &n)| ((s + alpha * s * e) / (1.0 + alpha) + beta * n) / (1.0 + beta))
        .collect();
    preprocess::bandpass(&base.with_samples(mixed), &BandpassSpec::default())
}

/// Peak minutes for a template under `placement`.
pub fn place_peaks(
    placement: &Placement,
    duration_min: f64,
    template: &SdTemplate,
    seed: u64,
) -> Result<Vec<f64>> {
    match placement {
        Placement::Peaks(p) => {
            let mut p = p.clone();
            p.sort_by(f64::total_cmp);
            SdLabelSet::new(p.clone(), None)?.check_within(duration_min)?;
            Ok(p)
        }
        Placement::Poisson { rate_per_h } => {
            let lo = template.peak_offset_min();
            let hi = duration_min - (template.duration_min() - lo);
            let mut rng = seed::rng(seed::child_seed(seed, 1));
            Ok(poisson_positions(&mut rng, *rate_per_h * duration_min / 60.0, lo, hi))
        }
    }
}

/// Poisson(mean) count of sorted uniform positions in `[lo, hi]`; empty if
/// the interval is empty.
pub(crate) fn poisson_positions<R: Rng>(rng: &mut R, mean: f64, lo: f64, hi: f64) -> Vec<f64> {
    if !(mean > 0.0) || !(hi >= lo) {
        return Vec::new();
    }
    let count = Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0);
    let mut p: Vec<f64> = (0..count).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    p.sort_by(f64::total_cmp);
    p.dedup();
    p
}

/// `y[t] = y[t-1]·exp(-Δt/τ) + P[t]·Δt` with `y[-1] = 0` and Δt the power
/// series step.
pub fn leaky_integral(power: &PowerSeries, step_s: f64, tau_s: f64) -> Result<Vec<f64>> {
    if !(tau_s > 0.0) || !(step_s > 0.0) {
        return Err(Error::InvalidArgument(format!("leaky integral needs τ > 0 and Δt > 0, got {tau_s}, {step_s}")));
    }
    let decay = (-step_s / tau_s).exp();
    let mut y = 0.0;
    Ok(power
        .values
        .iter()
        .map(|&p| {
            y = y * decay + p * step_s;
            y
        })
        .collect())
}
