//! Synthetic non-SD base EEG: 1/f noise plus an amplitude-modulated delta
//! oscillation, which puts the persistence-spectrum maximum near 1 Hz.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};

use super::EegTrace;
use crate::error::{Error, Result};
use crate::seed;

/// Knobs for [`synth_base_eeg_with`]. Defaults reproduce [`synth_base_eeg`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub duration_min: u32,
    pub sample_rate_hz: f64,
    pub seed: u64,
    pub delta_peak_hz: f64,
    /// RMS of the pink component, µV.
    pub pink_rms_uv: f64,
    /// Oscillation RMS as a multiple of the pink RMS.
    pub oscillation_ratio: f64,
    /// Standard deviation of the oscillation's amplitude envelope around 1.
    pub envelope_depth: f64,
    /// Correlation time of the envelope, seconds.
    pub envelope_corr_s: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            duration_min: 60,
            sample_rate_hz: 200.0,
            seed: 0,
            delta_peak_hz: 1.0,
            pink_rms_uv: 10.0,
            oscillation_ratio: 2.0,
            envelope_depth: 0.3,
            envelope_corr_s: 2.0,
        }
    }
}

/// Deterministic synthetic base EEG of `duration_min` minutes.
pub fn synth_base_eeg(
    duration_min: u32,
    sample_rate_hz: f64,
    seed: u64,
    delta_peak_hz: f64,
) -> Result<EegTrace> {
    synth_base_eeg_with(&SynthParams {
        duration_min,
        sample_rate_hz,
        seed,
        delta_peak_hz,
        ..SynthParams::default()
    })
}

pub fn synth_base_eeg_with(p: &SynthParams) -> Result<EegTrace> {
    if p.duration_min < 1 {
        return Err(Error::InvalidArgument("duration must be at least 1 min".into()));
    }
    if !(p.sample_rate_hz > 0.0) || !(p.delta_peak_hz > 0.0 && p.delta_peak_hz < p.sample_rate_hz / 2.0)
    {
        return Err(Error::InvalidArgument(format!(
            "bad rate/peak: fs={} peak={}",
            p.sample_rate_hz, p.delta_peak_hz
        )));
    }
    let n = (p.duration_min as f64 * 60.0 * p.sample_rate_hz).round() as usize;
    let mut rng = seed::rng(p.seed);

    let mut pink = pink_noise(n, &mut rng);
    scale_to_rms(&mut pink, p.pink_rms_uv);

    let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let a = (-1.0 / (p.envelope_corr_s * p.sample_rate_hz)).exp();
    let drive = (1.0 - a * a).sqrt();
    let mut u: f64 = rng.sample(StandardNormal);
    let w = std::f64::consts::TAU * p.delta_peak_hz / p.sample_rate_hz;
    let mut osc: Vec<f64> = (0..n)
        .map(|i| {
            let g: f64 = rng.sample(StandardNormal);
            u = a * u + drive * g;
            let env = (1.0 + p.envelope_depth * u).max(0.0);
            env * (w * i as f64 + phase).sin()
        })
        .collect();
    scale_to_rms(&mut osc, p.oscillation_ratio * p.pink_rms_uv);

    let mut samples: Vec<f64> = pink.iter().zip(&osc).map(|(a, b)| a + b).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    samples.iter_mut().for_each(|x| *x -= mean);
    EegTrace::new(samples, p.sample_rate_hz, 0.0, "synth")
}

/// Gaussian noise with a 1/f power spectrum (zero DC), shaped in the
/// frequency domain.
pub(crate) fn pink_noise<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex::new(0.0, 0.0);
    for k in 1..n {
        let f = k.min(n - k) as f64;
        buf[k] /= f.sqrt();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

fn scale_to_rms(x: &mut [f64], target: f64) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if rms > 0.0 {
        let g = target / rms;
        x.iter_mut().for_each(|v| *v *= g);
    }
}
