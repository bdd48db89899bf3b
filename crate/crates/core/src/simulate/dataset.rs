use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::template::{uniform, SdTemplate, TemplateRanges};
use super::{leaky_integral, mix_events, ALPHA_RANGE, BETA_RANGE};
use crate::eeg_io::{synth_base_eeg_with, write_labels, write_trace, EegTrace, SdLabelSet, SynthParams, TraceFormat};
use crate::error::{Error, Result};
use crate::preprocess;
use crate::seed::{self, Stream};
use crate::spectro::{power_series, FRAME_S};

/// Slow log-normal amplitude modulation of the base: `exp(depth·u(t))`
/// where `u` is a unit-variance sum of `DRIFT_COMPONENTS` sinusoids with
/// periods drawn uniformly from `period_min` and random phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSpec {
    pub depth: f64,
    pub period_min: (f64, f64),
}

const DRIFT_COMPONENTS: usize = 3;

impl Default for DriftSpec {
    fn default() -> Self {
        Self { depth: 0.1, period_min: (60.0, 360.0) }
    }
}

impl DriftSpec {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.period_min;
        if !(self.depth >= 0.0 && self.depth.is_finite() && lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad drift {self:?}")));
        }
        Ok(())
    }

    /// Per-sample gain.
    pub fn gain(&self, n: usize, fs: f64, seed: u64) -> Vec<f64> {
        if self.depth == 0.0 {
            return vec![1.0; n];
        }
        let mut rng = seed::rng(seed);
        let amp = self.depth * (2.0 / DRIFT_COMPONENTS as f64).sqrt();
        let parts: Vec<(f64, f64)> = (0..DRIFT_COMPONENTS)
            .map(|_| {
                let period_s = uniform(&mut rng, self.period_min) * 60.0;
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                (std::f64::consts::TAU / (period_s * fs), phase)
            })
            .collect();
        (0..n)
            .map(|i| {
                let u: f64 = parts.iter().map(|(w, ph)| (w * i as f64 + ph).sin()).sum();
                (amp * u).exp()
            })
            .collect()
    }
}

/// Simulated-dataset settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    pub train_hours: f64,
    pub test_hours: f64,
    pub control_hours: f64,
    pub segment_hours: f64,
    pub sd_rate_per_h: f64,
    pub sample_rate_hz: f64,
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub delta_peak_hz: (f64, f64),
    pub envelope_smoothing_s: f64,
    /// Amplitude-envelope spread of the base delta oscillation.
    pub base_envelope_depth: f64,
    /// Envelope correlation time, seconds.
    pub base_envelope_corr_s: f64,
    pub template: TemplateRanges,
    pub drift: DriftSpec,
    pub control_drift: DriftSpec,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            train_hours: 200.0,
            test_hours: 200.0,
            control_hours: 50.0,
            segment_hours: 5.0,
            sd_rate_per_h: 0.5,
            sample_rate_hz: 200.0,
            alpha: (0.1, 0.3),
            beta: (0.0, 0.2),
            delta_peak_hz: (0.8, 1.5),
            envelope_smoothing_s: 0.0,
            base_envelope_depth: 0.15,
            base_envelope_corr_s: 0.5,
            template: TemplateRanges::default(),
            drift: DriftSpec::default(),
            control_drift: DriftSpec::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let within = |(lo, hi): (f64, f64), (a, b): (f64, f64)| lo <= hi && lo >= a && hi <= b;
        if !within(self.alpha, ALPHA_RANGE) {
            return bad(format!("alpha range {:?} outside [0, 0.3]", self.alpha));
        }
        if !within(self.beta, BETA_RANGE) {
            return bad(format!("beta range {:?} outside [0, 0.2]", self.beta));
        }
        for h in [self.train_hours, self.test_hours, self.control_hours] {
            if !(h >= 0.0 && h.is_finite()) {
                return bad(format!("hours must be ≥ 0, got {h}"));
            }
        }
        if !(self.segment_hours * 60.0 >= 30.0) {
            return bad("segments must be at least 30 min long".into());
        }
        if !(self.sd_rate_per_h >= 0.0 && self.sd_rate_per_h.is_finite()) {
            return bad(format!("SD rate {}", self.sd_rate_per_h));
        }
        let (lo, hi) = self.delta_peak_hz;
        if !(lo > 0.0 && lo <= hi && hi < self.sample_rate_hz / 2.0) {
            return bad(format!("delta peak range {:?}", self.delta_peak_hz));
        }
        if !(self.base_envelope_depth >= 0.0 && self.base_envelope_corr_s > 0.0) {
            return bad("base envelope depth must be ≥ 0 and correlation > 0".into());
        }
        if !(self.envelope_smoothing_s >= 0.0) {
            return bad("envelope smoothing must be ≥ 0".into());
        }
        if self.template.max_duration_min() > self.segment_hours * 60.0 {
            return bad("SD template longer than a segment".into());
        }
        self.template.validate()?;
        self.drift.validate()?;
        self.control_drift.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Test,
    Control,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Control => "control",
        }
    }

    fn stream(self) -> Stream {
        match self {
            Split::Train => Stream::TrainData,
            Split::Test => Stream::TestData,
            Split::Control => Stream::NegativeControl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdEvent {
    pub peak_min: f64,
    pub template: SdTemplate,
}

/// Everything needed to regenerate one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPlan {
    pub split: Split,
    pub index: usize,
    pub duration_min: u32,
    pub alpha: f64,
    pub beta: f64,
    pub delta_peak_hz: f64,
    pub drift: DriftSpec,
    pub events: Vec<SdEvent>,
    pub base_seed: u64,
    pub drift_seed: u64,
    pub noise_seed: u64,
}

impl SegmentPlan {
    pub fn name(&self) -> String {
        format!("{}-{:03}", self.split.name(), self.index)
    }
}

fn segment_minutes(hours: f64, segment_hours: f64) -> Vec<u32> {
    let total = (hours * 60.0).round() as u32;
    let seg = (segment_hours * 60.0).round() as u32;
    let mut out = vec![seg; (total / seg) as usize];
    if total % seg >= 30 {
        out.push(total % seg);
    }
    out
}

/// Deterministic segment plans for `split` from `root_seed`. Train, test and
/// control draw from separate seed streams, so their base traces are
/// disjoint.
pub fn plan_segments(spec: &DatasetSpec, split: Split, root_seed: u64) -> Result<Vec<SegmentPlan>> {
    spec.validate()?;
    let (hours, rate, drift) = match split {
        Split::Train => (spec.train_hours, spec.sd_rate_per_h, spec.drift),
        Split::Test => (spec.test_hours, spec.sd_rate_per_h, spec.drift),
        Split::Control => (spec.control_hours, 0.0, spec.control_drift),
    };
    let split_seed = seed::stream_seed(root_seed, split.stream());
    Ok(segment_minutes(hours, spec.segment_hours)
        .into_iter()
        .enumerate()
        .map(|(index, duration_min)| {
            let seg_seed = seed::child_seed(split_seed, index as u64);
            let mut rng = seed::rng(seg_seed);
            let alpha = uniform(&mut rng, spec.alpha);
            let beta = uniform(&mut rng, spec.beta);
            let delta_peak_hz = uniform(&mut rng, spec.delta_peak_hz);
            let mean = rate * duration_min as f64 / 60.0;
            let count = if mean > 0.0 {
                Poisson::new(mean).map(|d| d.sample(&mut rng) as usize).unwrap_or(0)
            } else {
                0
            };
            let mut events: Vec<SdEvent> = (0..count)
                .map(|_| {
                    let template = spec.template.draw(&mut rng);
                    let lo = template.peak_offset_min();
                    let hi = duration_min as f64 - (template.duration_min() - lo);
                    SdEvent { peak_min: lo + (hi - lo) * rng.random::<f64>(), template }
                })
                .collect();
            events.sort_by(|a, b| a.peak_min.total_cmp(&b.peak_min));
            events.dedup_by(|a, b| a.peak_min == b.peak_min);
            SegmentPlan {
                split,
                index,
                duration_min,
                alpha,
                beta,
                delta_peak_hz,
                drift,
                events,
                base_seed: seed::child_seed(seg_seed, 10),
                drift_seed: seed::child_seed(seg_seed, 11),
                noise_seed: seed::child_seed(seg_seed, 12),
            }
        })
        .collect())
}

/// SD-free plans with the stronger control drift.
pub fn negative_control_plans(spec: &DatasetSpec, root_seed: u64) -> Result<Vec<SegmentPlan>> {
    plan_segments(spec, Split::Control, root_seed)
}

/// Normalized base with drift, then the SD mixture.
pub fn generate_segment(plan: &SegmentPlan, spec: &DatasetSpec) -> Result<(EegTrace, SdLabelSet)> {
    let base = synth_base_eeg_with(&SynthParams {
        duration_min: plan.duration_min,
        sample_rate_hz: spec.sample_rate_hz,
        seed: plan.base_seed,
        delta_peak_hz: plan.delta_peak_hz,
        envelope_depth: spec.base_envelope_depth,
        envelope_corr_s: spec.base_envelope_corr_s,
        ..SynthParams::default()
    })?;
    let gain = plan.drift.gain(base.len(), spec.sample_rate_hz, plan.drift_seed);
    let drifted: Vec<f64> = base.samples().iter().zip(&gain).map(|(s, g)| s * g).collect();
    let base = preprocess::normalize(&base.with_samples(drifted))?;
    let (trace, labels) = mix_events(&base, &plan.events, plan.alpha, plan.beta, plan.noise_seed)?;
    Ok((trace, labels))
}

/// Writes `<name>_trace.csv`, `<name>_labels.txt`, `<name>_power.csv` and
/// `<name>_leaky.csv` (τ = `tau_s`) into `dir`; returns the paths.
pub fn write_validation_bundle(
    dir: &Path,
    name: &str,
    trace: &EegTrace,
    labels: &SdLabelSet,
    tau_s: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let power = power_series(trace)?;
    let leaky = leaky_integral(&power, FRAME_S, tau_s)?;
    let paths: Vec<PathBuf> = ["trace.csv", "labels.txt", "power.csv", "leaky.csv"]
        .iter()
        .map(|s| dir.join(format!("{name}_{s}")))
        .collect();
    write_trace(trace, &paths[0], TraceFormat::Csv)?;
    write_labels(labels, &paths[1])?;
    let mut p = String::from("minute,power\n");
    let mut l = String::from("minute,leaky_integral\n");
    for (i, (pv, lv)) in power.values.iter().zip(&leaky).enumerate() {
        let _ = writeln!(p, "{i},{pv}");
        let _ = writeln!(l, "{i},{lv}");
    }
    fs::write(&paths[2], p).map_err(|e| Error::io(&paths[2], e))?;
    fs::write(&paths[3], l).map_err(|e| Error::io(&paths[3], e))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_lengths() {
        assert_eq!(segment_minutes(10.0, 5.0), vec![300, 300]);
        assert_eq!(segment_minutes(11.0, 5.0), vec![300, 300, 60]);
        assert_eq!(segment_minutes(10.25, 5.0), vec![300, 300]);
        assert!(segment_minutes(0.0, 5.0).is_empty());
    }

    #[test]
    fn plans_are_reproducible_and_disjoint() {
        let spec = DatasetSpec { train_hours: 10.0, test_hours: 10.0, ..DatasetSpec::default() };
        let a = plan_segments(&spec, Split::Train, 1).unwrap();
        assert_eq!(a, plan_segments(&spec, Split::Train, 1).unwrap());
        let b = plan_segments(&spec, Split::Test, 1).unwrap();
        for p in &a {
            assert!(b.iter().all(|q| q.base_seed != p.base_seed));
            assert!((0.1..=0.3).contains(&p.alpha) && (0.0..=0.2).contains(&p.beta));
            for e in &p.events {
                assert!(e.peak_min >= e.template.peak_offset_min());
                assert!(e.peak_min + e.template.duration_min() - e.template.peak_offset_min() <= p.duration_min as f64);
            }
        }
    }

    #[test]
    fn rate_zero_gives_no_sds() {
        let spec = DatasetSpec { train_hours: 10.0, sd_rate_per_h: 0.0, ..DatasetSpec::default() };
        assert!(plan_segments(&spec, Split::Train, 3).unwrap().iter().all(|p| p.events.is_empty()));
        assert!(negative_control_plans(&spec, 3).unwrap().iter().all(|p| p.events.is_empty()));
    }

    #[test]
    fn drift_gain_statistics() {
        // Whole periods of every component: the log-gain RMS is exactly `depth`.
        let d = DriftSpec { depth: 0.3, period_min: (10.0, 10.0) };
        let g = d.gain(600 * 60, 1.0, 4);
        let logs: Vec<f64> = g.iter().map(|v| v.ln()).collect();
        let rms = (logs.iter().map(|v| v * v).sum::<f64>() / logs.len() as f64).sqrt();
        assert!(rms <= 0.3 * 3f64.sqrt() + 1e-9);
        let spread = DriftSpec { depth: 0.3, period_min: (10.0, 20.0) };
        let mut acc = 0.0;
        for s in 0..50 {
            let l: Vec<f64> = spread.gain(60 * 600, 1.0, s).iter().map(|v| v.ln()).collect();
            acc += l.iter().map(|v| v * v).sum::<f64>() / l.len() as f64;
        }
        assert!(((acc / 50.0).sqrt() - 0.3).abs() < 0.03);
        assert_eq!(DriftSpec { depth: 0.0, ..d }.gain(10, 1.0, 1), vec![1.0; 10]);
    }

    #[test]
    fn generated_segment_carries_planned_labels() {
        let spec = DatasetSpec { train_hours: 1.0, segment_hours: 1.0, sd_rate_per_h: 3.0, ..DatasetSpec::default() };
        let plans = plan_segments(&spec, Split::Train, 9).unwrap();
        let (trace, labels) = generate_segment(&plans[0], &spec).unwrap();
        assert_eq!(trace.len(), 60 * 60 * 200);
        let expect: Vec<f64> = plans[0].events.iter().map(|e| e.peak_min).collect();
        assert_eq!(labels.peaks_min(), expect.as_slice());
        let dir = tempfile::tempdir().unwrap();
        let files = write_validation_bundle(dir.path(), &plans[0].name(), &trace, &labels, 60.0).unwrap();
        assert!(files.iter().all(|f| f.exists()));
    }
}
