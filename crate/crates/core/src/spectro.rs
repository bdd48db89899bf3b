//! Short-time Fourier analysis on non-overlapping one-minute Hann frames:
//! the band-restricted spectrogram, the per-minute AC power series and the
//! persistence spectrum.

use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::eeg_io::EegTrace;
use crate::error::{Error, Result};

pub const FRAME_S: f64 = 60.0;
/// AC band over which the power series is summed.
pub const AC_BAND_HZ: (f64, f64) = (0.5, 45.0);
const BIN_EDGE_EPS: f64 = 1e-9;

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// DFT of the Hann-windowed `segment`; `window` must have the same length.
pub fn stft_frame(segment: &[f64], window: &[f64]) -> Result<Vec<Complex<f64>>> {
    if segment.len() != window.len() || segment.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "segment of {} samples for window of {}",
            segment.len(),
            window.len()
        )));
    }
    let mut buf: Vec<Complex<f64>> = segment
        .iter()
        .zip(window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    Ok(buf)
}

/// Reusable FFT plan and window for frames of one length.
pub struct FramePlan {
    window: Vec<f64>,
    window_energy: f64,
    fft: Arc<dyn Fft<f64>>,
    sample_rate_hz: f64,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl FramePlan {
    pub fn new(sample_rate_hz: f64) -> Self {
        let n = (FRAME_S * sample_rate_hz).round() as usize;
        let window = hann(n);
        let window_energy = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Self {
            window,
            window_energy,
            fft,
            sample_rate_hz,
            buf: vec![Complex::default(); n],
            scratch,
        }
    }

    pub fn frame_len(&self) -> usize {
        self.window.len()
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.frame_len() as f64
    }

    /// One-sided PSD `2|F_k|² / (N·Σw²)` (DC and Nyquist not doubled), so the
    /// bins sum to the window-weighted mean square of the segment.
    pub fn psd(&mut self, segment: &[f64], out: &mut Vec<f64>) {
        let n = self.frame_len();
        debug_assert_eq!(segment.len(), n);
        for ((b, x), w) in self.buf.iter_mut().zip(segment).zip(&self.window) {
            *b = Complex::new(x * w, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / (n as f64 * self.window_energy);
        out.clear();
        out.extend((0..=n / 2).map(|k| {
            let twice = k != 0 && 2 * k != n;
            let p = self.buf[k].norm_sqr() * norm;
            if twice {
                2.0 * p
            } else {
                p
            }
        }));
    }
}

/// Time × frequency power matrix, rows are frequency bands (low→high),
/// columns are minutes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    power: Vec<f64>,
    n_freq_bins: usize,
    n_time_bins: usize,
    pub time_bin_s: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    bin_counts: Vec<usize>,
}

impl Spectrogram {
    pub fn n_freq_bins(&self) -> usize {
        self.n_freq_bins
    }

    pub fn n_time_bins(&self) -> usize {
        self.n_time_bins
    }

    pub fn get(&self, freq: usize, time: usize) -> f64 {
        self.power[freq * self.n_time_bins + time]
    }

    pub fn row(&self, freq: usize) -> &[f64] {
        &self.power[freq * self.n_time_bins..(freq + 1) * self.n_time_bins]
    }

    pub fn column(&self, time: usize) -> Vec<f64> {
        (0..self.n_freq_bins).map(|f| self.get(f, time)).collect()
    }

    /// Number of raw FFT bins averaged into each band.
    pub fn bin_counts(&self) -> &[usize] {
        &self.bin_counts
    }

    /// Flat `[freq][time]` storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.power
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for f in 0..self.n_freq_bins {
            let row: Vec<String> = self.row(f).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// 8-bit binary PGM of log power, low frequencies at the bottom.
    pub fn to_pgm(&self) -> Vec<u8> {
        let logs: Vec<f64> = self.power.iter().map(|p| (p + 1e-12).log10()).collect();
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P5\n{} {}\n255\n", self.n_time_bins, self.n_freq_bins).into_bytes();
        for f in (0..self.n_freq_bins).rev() {
            for t in 0..self.n_time_bins {
                let v = (logs[f * self.n_time_bins + t] - lo) / span;
                out.push((v * 255.0).round() as u8);
            }
        }
        out
    }
}

/// Total AC-band power per minute.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub values: Vec<f64>,
    pub band_hz: (f64, f64),
}

/// Spectrogram band settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectroSpec {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub n_freq_bins: usize,
}

impl Default for SpectroSpec {
    fn default() -> Self {
        Self {
            band_low_hz: 0.5,
            band_high_hz: 1.85,
            n_freq_bins: 30,
        }
    }
}

fn n_frames(trace: &EegTrace, frame_len: usize) -> Result<usize> {
    let n = trace.len() / frame_len;
    if n == 0 {
        return Err(Error::TooShort {
            required_min: 1.0,
            actual_min: trace.duration_min(),
        });
    }
    Ok(n)
}

/// Band index for every raw bin inside `[low, high]`, as `(bin, band)`.
fn band_map(
    low: f64,
    high: f64,
    n_bands: usize,
    bin_hz: f64,
    n_raw: usize,
) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
    let width = (high - low) / n_bands as f64;
    let mut map = Vec::new();
    let mut counts = vec![0usize; n_bands];
    for k in 0..n_raw {
        let f = k as f64 * bin_hz;
        if f < low - BIN_EDGE_EPS || f > high + BIN_EDGE_EPS {
            continue;
        }
        let band = (((f - low) / width + BIN_EDGE_EPS).floor().max(0.0) as usize).min(n_bands - 1);
        counts[band] += 1;
        map.push((k, band));
    }
    if let Some(b) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!(
            "band {b} of {n_bands} over {low}-{high} Hz contains no FFT bin at {bin_hz:.5} Hz resolution"
        )));
    }
    Ok((map, counts))
}

fn check_band(low: f64, high: f64, n_bands: usize, sample_rate_hz: f64) -> Result<()> {
    if !(0.0 < low && low < high && high < sample_rate_hz / 2.0) || n_bands == 0 {
        return Err(Error::InvalidArgument(format!(
            "band {low}-{high} Hz / {n_bands} bins invalid below Nyquist {}",
            sample_rate_hz / 2.0
        )));
    }
    Ok(())
}

/// Spectrogram and AC power series from a single pass of FFTs.
pub fn spectral_features(trace: &EegTrace, spec: &SpectroSpec) -> Result<(Spectrogram, PowerSeries)> {
    let fs = trace.sample_rate_hz();
    check_band(spec.band_low_hz, spec.band_high_hz, spec.n_freq_bins, fs)?;
    check_band(AC_BAND_HZ.0, AC_BAND_HZ.1, 1, fs)?;
    let mut plan = FramePlan::new(fs);
    let frame_len = plan.frame_len();
    let frames = n_frames(trace, frame_len)?;
    let n_raw = frame_len / 2 + 1;
    let (map, counts) = band_map(
        spec.band_low_hz,
        spec.band_high_hz,
        spec.n_freq_bins,
        plan.bin_hz(),
        n_raw,
    )?;
    let (ac_lo, ac_hi) = ac_bin_range(plan.bin_hz(), n_raw);

    let nb = spec.n_freq_bins;
    let mut power = vec![0.0; nb * frames];
    let mut series = Vec::with_capacity(frames);
    let mut psd = Vec::with_capacity(n_raw);
    let mut band_sum = vec![0.0; nb];
    for t in 0..frames {
        plan.psd(&trace.samples()[t * frame_len..(t + 1) * frame_len], &mut psd);
        band_sum.iter_mut().for_each(|v| *v = 0.0);
        for &(k, b) in &map {
            band_sum[b] += psd[k];
        }
        for b in 0..nb {
            power[b * frames + t] = band_sum[b] / counts[b] as f64;
        }
        series.push(psd[ac_lo..=ac_hi].iter().sum());
    }
    Ok((
        Spectrogram {
            power,
            n_freq_bins: nb,
            n_time_bins: frames,
            time_bin_s: FRAME_S,
            band_low_hz: spec.band_low_hz,
            band_high_hz: spec.band_high_hz,
            bin_counts: counts,
        },
        PowerSeries {
            values: series,
            band_hz: AC_BAND_HZ,
        },
    ))
}

fn ac_bin_range(bin_hz: f64, n_raw: usize) -> (usize, usize) {
    let lo = ((AC_BAND_HZ.0 - BIN_EDGE_EPS) / bin_hz).ceil() as usize;
    let hi = (((AC_BAND_HZ.1 + BIN_EDGE_EPS) / bin_hz).floor() as usize).min(n_raw - 1);
    (lo, hi)
}

pub fn spectrogram(
    trace: &EegTrace,
    band_low_hz: f64,
    band_high_hz: f64,
    n_freq_bins: usize,
) -> Result<Spectrogram> {
    spectral_features(
        trace,
        &SpectroSpec {
            band_low_hz,
            band_high_hz,
            n_freq_bins,
        },
    )
    .map(|(s, _)| s)
}

/// Per-minute sum of PSD bins over 0.5–45 Hz.
pub fn power_series(trace: &EegTrace) -> Result<PowerSeries> {
    let fs = trace.sample_rate_hz();
    check_band(AC_BAND_HZ.0, AC_BAND_HZ.1, 1, fs)?;
    let mut plan = FramePlan::new(fs);
    let frame_len = plan.frame_len();
    let frames = n_frames(trace, frame_len)?;
    let (lo, hi) = ac_bin_range(plan.bin_hz(), frame_len / 2 + 1);
    let mut psd = Vec::new();
    let values = (0..frames)
        .map(|t| {
            plan.psd(&trace.samples()[t * frame_len..(t + 1) * frame_len], &mut psd);
            psd[lo..=hi].iter().sum()
        })
        .collect();
    Ok(PowerSeries {
        values,
        band_hz: AC_BAND_HZ,
    })
}

/// Occupancy histogram of per-frame band power over 1 Hz bins centred on
/// 0..=45 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceSpectrum {
    pub freqs_hz: Vec<f64>,
    /// Lower edges of the log10 power bins; bin 0 collects power below
    /// `power_floor` (including exact zeros).
    pub log_power_edges: Vec<f64>,
    pub power_floor: f64,
    /// `counts[freq][power_bin]`.
    pub counts: Vec<Vec<u32>>,
    pub mean_power: Vec<f64>,
    /// Frequency with the highest mean power.
    pub peak_frequency_hz: f64,
}

const PERSIST_MAX_HZ: usize = 45;
const PERSIST_LOG_MIN: f64 = -12.0;
const PERSIST_LOG_MAX: f64 = 6.0;
const PERSIST_LOG_STEP: f64 = 0.25;

pub fn persistence_spectrum(trace: &EegTrace) -> Result<PersistenceSpectrum> {
    if trace.duration_min() < 10.0 {
        return Err(Error::TooShort {
            required_min: 10.0,
            actual_min: trace.duration_min(),
        });
    }
    let fs = trace.sample_rate_hz();
    let mut plan = FramePlan::new(fs);
    let frame_len = plan.frame_len();
    let frames = n_frames(trace, frame_len)?;
    let n_freq = PERSIST_MAX_HZ + 1;
    let n_log = ((PERSIST_LOG_MAX - PERSIST_LOG_MIN) / PERSIST_LOG_STEP).round() as usize;
    let edges: Vec<f64> = (0..n_log)
        .map(|i| PERSIST_LOG_MIN + i as f64 * PERSIST_LOG_STEP)
        .collect();
    let floor = 10f64.powf(PERSIST_LOG_MIN);
    let mut counts = vec![vec![0u32; n_log + 1]; n_freq];
    let mut sums = vec![0.0; n_freq];
    let bin_hz = plan.bin_hz();
    let mut psd = Vec::new();
    let mut per_freq = vec![0.0; n_freq];
    for t in 0..frames {
        plan.psd(&trace.samples()[t * frame_len..(t + 1) * frame_len], &mut psd);
        per_freq.iter_mut().for_each(|v| *v = 0.0);
        for (k, p) in psd.iter().enumerate() {
            let f = k as f64 * bin_hz;
            let idx = (f + 0.5).floor() as usize;
            if idx < n_freq {
                per_freq[idx] += p;
            }
        }
        for (fi, &p) in per_freq.iter().enumerate() {
            sums[fi] += p;
            let bin = if p < floor {
                0
            } else {
                1 + (((p.log10() - PERSIST_LOG_MIN) / PERSIST_LOG_STEP).floor() as usize).min(n_log - 1)
            };
            counts[fi][bin] += 1;
        }
    }
    let mean_power: Vec<f64> = sums.iter().map(|s| s / frames as f64).collect();
    let peak = (0..n_freq)
        .max_by(|&a, &b| mean_power[a].total_cmp(&mean_power[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    Ok(PersistenceSpectrum {
        freqs_hz: (0..n_freq).map(|f| f as f64).collect(),
        log_power_edges: edges,
        power_floor: floor,
        counts,
        mean_power,
        peak_frequency_hz: peak as f64,
    })
}
