//! EEG traces, SD label sets, their on-disk formats, and synthetic base EEG.

mod format;
mod synth;

pub use format::{read_labels, read_trace, sidecar_path, write_labels, write_trace, TraceFormat};
pub use synth::{synth_base_eeg, synth_base_eeg_with, SynthParams};

use crate::error::{Error, Result};

/// Uniformly sampled single-channel voltage series (microvolts).
#[derive(Debug, Clone, PartialEq)]
pub struct EegTrace {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    start_time_s: f64,
    channel_id: String,
}

impl EegTrace {
    pub fn new(
        samples: Vec<f64>,
        sample_rate_hz: f64,
        start_time_s: f64,
        channel_id: impl Into<String>,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("trace has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        if !start_time_s.is_finite() {
            return Err(Error::InvalidArgument("non-finite start time".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            start_time_s,
            channel_id: channel_id.into(),
        })
    }

    /// Same metadata, new samples. The caller keeps the invariants (only used
    /// by operations that produce finite output of the same length).
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|x| x.is_finite()));
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
            start_time_s: self.start_time_s,
            channel_id: self.channel_id.clone(),
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn channel_id(&self) -> &str {
        &self.channel_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn duration_min(&self) -> f64 {
        self.duration_s() / 60.0
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Samples `[start, end)` as a new trace with adjusted start time.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {start}..{end} out of range for {} samples",
                self.samples.len()
            )));
        }
        Ok(Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
            start_time_s: self.start_time_s + start as f64 / self.sample_rate_hz,
            channel_id: self.channel_id.clone(),
        })
    }
}

/// Ground-truth SD depression peaks, in minutes from trace start, with
/// optional onset/offset spans.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdLabelSet {
    peaks_min: Vec<f64>,
    spans_min: Option<Vec<(f64, f64)>>,
}

impl SdLabelSet {
    pub fn new(peaks_min: Vec<f64>, spans_min: Option<Vec<(f64, f64)>>) -> Result<Self> {
        if peaks_min.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite SD peak".into()));
        }
        if peaks_min.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "SD peaks must be strictly increasing".into(),
            ));
        }
        if let Some(spans) = &spans_min {
            if spans.len() != peaks_min.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} spans for {} peaks",
                    spans.len(),
                    peaks_min.len()
                )));
            }
            for (p, (s, e)) in peaks_min.iter().zip(spans) {
                if !(s <= p && p <= e) {
                    return Err(Error::InvalidArgument(format!(
                        "peak {p} outside its span [{s}, {e}]"
                    )));
                }
            }
        }
        Ok(Self {
            peaks_min,
            spans_min,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn peaks_min(&self) -> &[f64] {
        &self.peaks_min
    }

    pub fn spans_min(&self) -> Option<&[(f64, f64)]> {
        self.spans_min.as_deref()
    }

    pub fn len(&self) -> usize {
        self.peaks_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks_min.is_empty()
    }

    /// Checks every peak lies within `[0, duration_min]`.
    pub fn check_within(&self, duration_min: f64) -> Result<()> {
        match self
            .peaks_min
            .iter()
            .find(|&&p| p < 0.0 || p > duration_min)
        {
            Some(p) => Err(Error::InvalidArgument(format!(
                "SD peak {p} min outside trace of {duration_min} min"
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_traces() {
        assert!(EegTrace::new(vec![1.0], 0.0, 0.0, "c").is_err());
        assert!(EegTrace::new(vec![], 200.0, 0.0, "c").is_err());
        assert!(EegTrace::new(vec![f64::NAN], 200.0, 0.0, "c").is_err());
        let t = EegTrace::new(vec![0.0; 1000], 200.0, 0.0, "c").unwrap();
        assert_eq!(t.duration_s(), 5.0);
    }

    #[test]
    fn label_invariants() {
        assert!(SdLabelSet::new(vec![1.0, 1.0], None).is_err());
        assert!(SdLabelSet::new(vec![5.0], Some(vec![(6.0, 7.0)])).is_err());
        let l = SdLabelSet::new(vec![5.0, 9.0], Some(vec![(1.0, 6.0), (8.0, 9.5)])).unwrap();
        assert!(l.check_within(10.0).is_ok());
        assert!(l.check_within(8.0).is_err());
    }
}
