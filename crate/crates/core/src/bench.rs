//! Single-thread, batch-1 latency per hour of EEG: conditioning plus
//! spectral features, and 60 per-minute network evaluations.

use std::fmt::Write as _;
use std::time::Instant;

use crate::detector::{self, ModelParams};
use crate::eeg_io::{synth_base_eeg, SdLabelSet};
use crate::error::Result;
use crate::preprocess::{self, PreprocessSpec};
use crate::seed::{self, Stream};
use crate::spectro::{self, SpectroSpec};
use crate::windowing;

/// Reference CPU timings per EEG-hour, seconds.
pub const REFERENCE_PREPROCESS_S: f64 = 0.08;
pub const REFERENCE_INFERENCE_S: f64 = 0.13;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub sample_rate_hz: f64,
    /// Seconds per hour of input.
    pub preprocess_s: Vec<f64>,
    pub inference_s: Vec<f64>,
    /// Time to read the checkpoint, when one was loaded.
    pub io_s: Option<f64>,
}

pub fn mean_sd(x: &[f64]) -> Option<(f64, f64)> {
    if x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

impl BenchReport {
    pub fn hours(&self) -> usize {
        self.preprocess_s.len()
    }

    pub fn total_s(&self) -> f64 {
        self.preprocess_s.iter().chain(&self.inference_s).sum()
    }

    /// Mean preprocessing plus mean inference time per hour.
    pub fn per_hour_s(&self) -> Option<f64> {
        Some(mean_sd(&self.preprocess_s)?.0 + mean_sd(&self.inference_s)?.0)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.hours() == 0 {
            return out;
        }
        let _ = writeln!(
            out,
            "latency per EEG-hour ({} h at {} Hz, 1 thread, batch 1)",
            self.hours(),
            self.sample_rate_hz
        );
        let _ = writeln!(out, "{:<14}{:>22}{:>12}", "stage", "measured (s)", "reference");
        let rows = [
            ("preprocessing", &self.preprocess_s, REFERENCE_PREPROCESS_S),
            ("inference", &self.inference_s, REFERENCE_INFERENCE_S),
        ];
        for (name, v, reference) in rows {
            let (m, sd) = mean_sd(v).unwrap_or_default();
            let _ = writeln!(out, "{name:<14}{:>22}{reference:>12.2}", format!("{m:.4} ± {sd:.4}"));
        }
        let _ = writeln!(
            out,
            "{:<14}{:>22}{:>12.2}",
            "total",
            format!("{:.4}", self.per_hour_s().unwrap_or_default()),
            REFERENCE_PREPROCESS_S + REFERENCE_INFERENCE_S
        );
        if let Some(io) = self.io_s {
            let _ = writeln!(out, "checkpoint read: {io:.4} s (excluded)");
        }
        out
    }
}

/// Times `hours` consecutive hours of synthetic EEG. Input synthesis and
/// window cropping are not timed.
pub fn run_bench(
    model: &ModelParams,
    hours: u32,
    sample_rate_hz: f64,
    pre: &PreprocessSpec,
    spectro_spec: &SpectroSpec,
    root_seed: u64,
) -> Result<BenchReport> {
    let mut report = BenchReport { sample_rate_hz, ..BenchReport::default() };
    if hours == 0 {
        return Ok(report);
    }
    let minutes = hours * 60 + windowing::WINDOW_MIN as u32;
    let trace = synth_base_eeg(minutes, sample_rate_hz, seed::stream_seed(root_seed, Stream::Bench), 1.0)?;
    let (spec, power) = spectro::spectral_features(&preprocess::condition(&trace, pre)?, spectro_spec)?;
    let windows = windowing::crop_windows(&spec, &power, &SdLabelSet::empty())?;
    let hour_len = (3600.0 * sample_rate_hz).round() as usize;

    for h in 0..hours as usize {
        let chunk = trace.slice(h * hour_len, (h + 1) * hour_len)?;
        let t = Instant::now();
        let clean = preprocess::condition(&chunk, pre)?;
        let features = spectro::spectral_features(&clean, spectro_spec)?;
        report.preprocess_s.push(t.elapsed().as_secs_f64());
        std::hint::black_box(features);

        let t = Instant::now();
        for w in &windows[h * 60..(h + 1) * 60] {
            std::hint::black_box(detector::predict_sample(model, w)?);
        }
        report.inference_s.push(t.elapsed().as_secs_f64());
    }
    Ok(report)
}
