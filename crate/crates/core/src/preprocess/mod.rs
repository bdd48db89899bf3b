//! Signal conditioning applied before spectral analysis: AC-band bandpass,
//! artifact spike removal and per-trace normalization.

pub mod butterworth;

use serde::{Deserialize, Serialize};

use crate::eeg_io::EegTrace;
use crate::error::{Error, Result};
use butterworth::{Biquad, Kind};

/// AC-band filter settings. `order` applies to each band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandpassSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        Self {
            low_hz: 0.5,
            high_hz: 45.0,
            order: 4,
            zero_phase: true,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(0.0 < self.low_hz && self.low_hz < self.high_hz && self.high_hz < sample_rate_hz / 2.0)
        {
            return Err(Error::InvalidArgument(format!(
                "bandpass {}-{} Hz invalid at {} Hz sampling",
                self.low_hz, self.high_hz, sample_rate_hz
            )));
        }
        if self.order == 0 {
            return Err(Error::InvalidArgument("bandpass order must be positive".into()));
        }
        Ok(())
    }

    /// Highpass sections followed by lowpass sections.
    pub fn sections(&self, sample_rate_hz: f64) -> Result<Vec<Biquad>> {
        self.validate(sample_rate_hz)?;
        let mut s = butterworth::design(Kind::Highpass, self.order, self.low_hz, sample_rate_hz);
        s.extend(butterworth::design(
            Kind::Lowpass,
            self.order,
            self.high_hz,
            sample_rate_hz,
        ));
        Ok(s)
    }

    /// Amplitude response of the applied filter (squared when zero-phase,
    /// since the cascade runs twice).
    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> Result<f64> {
        let single: f64 = self
            .sections(sample_rate_hz)?
            .iter()
            .map(|b| b.magnitude(freq_hz, sample_rate_hz))
            .product();
        Ok(if self.zero_phase { single * single } else { single })
    }
}

pub fn bandpass(trace: &EegTrace, spec: &BandpassSpec) -> Result<EegTrace> {
    let sections = spec.sections(trace.sample_rate_hz())?;
    Ok(trace.with_samples(bandpass_samples(&sections, spec, trace.samples())))
}

pub(crate) fn bandpass_samples(sections: &[Biquad], spec: &BandpassSpec, x: &[f64]) -> Vec<f64> {
    if spec.zero_phase {
        butterworth::filtfilt(sections, x, 10 * spec.order)
    } else {
        let mut y = x.to_vec();
        for s in sections {
            let mut z1 = 0.0;
            let mut z2 = 0.0;
            for v in y.iter_mut() {
                let xin = *v;
                let out = s.b0 * xin + z1;
                z1 = s.b1 * xin - s.a1 * out + z2;
                z2 = s.b2 * xin - s.a2 * out;
                *v = out;
            }
        }
        y
    }
}

/// Spike-removal settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DespikeSpec {
    /// Threshold in units of the rolling median absolute deviation.
    pub k: f64,
    pub window_s: f64,
}

impl Default for DespikeSpec {
    fn default() -> Self {
        Self {
            k: 8.0,
            window_s: 10.0,
        }
    }
}

/// Robust statistics are refreshed once per hop, over a window centred on
/// the hop block.
const DESPIKE_HOP_S: f64 = 1.0;
const DESPIKE_MAX_PASSES: usize = 16;

/// Replaces samples deviating from the rolling median by more than
/// `k × MAD` with linear interpolation between the nearest kept neighbours.
/// Passes repeat until nothing is flagged, so the result is a fixed point.
pub fn despike(trace: &EegTrace, spec: &DespikeSpec) -> Result<EegTrace> {
    let fs = trace.sample_rate_hz();
    if !(spec.k > 0.0) || !(spec.window_s > 0.0) {
        return Err(Error::InvalidArgument(format!("bad despike settings {spec:?}")));
    }
    if trace.duration_s() < spec.window_s {
        return Err(Error::InvalidArgument(format!(
            "despike needs at least {} s of signal",
            spec.window_s
        )));
    }
    let window = ((spec.window_s * fs).round() as usize).max(1);
    let hop = ((DESPIKE_HOP_S * fs).round() as usize).clamp(1, window);
    let mut x = trace.samples().to_vec();
    let mut scratch = Vec::with_capacity(window);
    for _ in 0..DESPIKE_MAX_PASSES {
        let flags = flag_spikes(&x, window, hop, spec.k, &mut scratch);
        if !flags.iter().any(|&f| f) {
            break;
        }
        interpolate_flagged(&mut x, &flags);
    }
    Ok(trace.with_samples(x))
}

fn flag_spikes(x: &[f64], window: usize, hop: usize, k: f64, scratch: &mut Vec<f64>) -> Vec<bool> {
    let n = x.len();
    let mut flags = vec![false; n];
    let mut block = 0;
    while block < n {
        let block_end = (block + hop).min(n);
        let centre = (block + block_end) / 2;
        let lo = centre.saturating_sub(window / 2);
        let hi = (lo + window).min(n);
        let lo = hi.saturating_sub(window);

        scratch.clear();
        scratch.extend_from_slice(&x[lo..hi]);
        let med = median_in_place(scratch);
        scratch.iter_mut().for_each(|v| *v = (*v - med).abs());
        let mad = median_in_place(scratch);
        let limit = k * mad;
        for i in block..block_end {
            flags[i] = (x[i] - med).abs() > limit;
        }
        block = block_end;
    }
    flags
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, &mut upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn interpolate_flagged(x: &mut [f64], flags: &[bool]) {
    let n = x.len();
    let mut i = 0;
    while i < n {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && flags[i] {
            i += 1;
        }
        let left = start.checked_sub(1);
        let right = (i < n).then_some(i);
        match (left, right) {
            (Some(l), Some(r)) => {
                let (yl, yr) = (x[l], x[r]);
                let span = (r - l) as f64;
                for j in start..i {
                    let t = (j - l) as f64 / span;
                    x[j] = yl + t * (yr - yl);
                }
            }
            (Some(l), None) => {
                let v = x[l];
                x[start..i].iter_mut().for_each(|s| *s = v);
            }
            (None, Some(r)) => {
                let v = x[r];
                x[start..i].iter_mut().for_each(|s| *s = v);
            }
            (None, None) => {}
        }
    }
}

/// Zero-mean, unit-RMS rescaling.
pub fn normalize(trace: &EegTrace) -> Result<EegTrace> {
    normalize_samples(trace.samples()).map(|s| trace.with_samples(s))
}

pub(crate) fn normalize_samples(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let rms = (centred.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if !(rms > 0.0) || rms <= f64::EPSILON * mean.abs() {
        return Err(Error::Degenerate("cannot normalize a constant trace".into()));
    }
    Ok(centred.into_iter().map(|v| v / rms).collect())
}

/// Settings for the whole conditioning chain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSpec {
    pub bandpass: BandpassSpec,
    pub despike: DespikeSpec,
}

/// Bandpass, despike, normalize.
pub fn condition(trace: &EegTrace, spec: &PreprocessSpec) -> Result<EegTrace> {
    let filtered = bandpass(trace, &spec.bandpass)?;
    let clean = despike(&filtered, &spec.despike)?;
    normalize(&clean)
}
