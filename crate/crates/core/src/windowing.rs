//! Thirty-minute sliding windows over the spectrogram and power series, one
//! per minute, with per-window normalization and binary labels.

use std::fs;
use std::path::Path;

use crate::eeg_io::SdLabelSet;
use crate::error::{Error, Position, Result};
use crate::spectro::{PowerSeries, Spectrogram};

/// Window length in minutes (and image width/height).
pub const WINDOW_MIN: usize = 30;
pub const HALF_WINDOW_MIN: usize = WINDOW_MIN / 2;
pub const IMAGE_LEN: usize = WINDOW_MIN * WINDOW_MIN;
pub const LOG_EPS: f64 = 1e-12;

const DATASET_MAGIC: &[u8; 4] = b"SDDS";
const DATASET_VERSION: u32 = 1;
const DATASET_HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 4 + 1 + 4 * IMAGE_LEN + 4 * WINDOW_MIN;

/// One model input: a normalized 30×30 spectrogram crop (`[freq][time]`,
/// row-major), a normalized 30-minute power crop, the centre minute and the
/// label.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub image: Vec<f32>,
    pub vector: Vec<f32>,
    pub center_min: u32,
    pub label: u8,
}

impl WindowSample {
    pub fn zeros(center_min: u32) -> Self {
        Self {
            image: vec![0.0; IMAGE_LEN],
            vector: vec![0.0; WINDOW_MIN],
            center_min,
            label: 0,
        }
    }
}

/// `1` iff some peak lies within ±15 min of `center_min`.
pub fn window_label(labels: &SdLabelSet, center_min: f64) -> u8 {
    labels
        .peaks_min()
        .iter()
        .any(|p| (p - center_min).abs() <= HALF_WINDOW_MIN as f64) as u8
}

/// Log-power min-max scaling to [0, 1]; a constant input maps to zeros.
pub fn normalize_image(raw: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = raw.iter().map(|v| (v + LOG_EPS).log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; raw.len()];
    }
    let span = hi - lo;
    logs.iter().map(|v| (v - lo) / span).collect()
}

/// z-score; a constant input maps to zeros.
pub fn normalize_vector(raw: &[f64]) -> Vec<f64> {
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) || sd <= 1e-12 * mean.abs() {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|v| (v - mean) / sd).collect()
}

/// Number of windows for a `minutes`-long spectrogram.
pub fn window_count(minutes: usize) -> usize {
    (minutes + 1).saturating_sub(WINDOW_MIN)
}

/// One sample per minute `t` in `[15, T-15]`, built from columns
/// `[t-15, t+15)`.
pub fn crop_windows(
    spec: &Spectrogram,
    power: &PowerSeries,
    labels: &SdLabelSet,
) -> Result<Vec<WindowSample>> {
    let t_len = spec.n_time_bins();
    if t_len < WINDOW_MIN {
        return Err(Error::TooShort {
            required_min: WINDOW_MIN as f64,
            actual_min: t_len as f64,
        });
    }
    if power.values.len() != t_len {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram has {t_len} minutes, power series {}",
            power.values.len()
        )));
    }
    if spec.n_freq_bins() != WINDOW_MIN {
        return Err(Error::ShapeMismatch(format!(
            "window images need {WINDOW_MIN} frequency bands, got {}",
            spec.n_freq_bins()
        )));
    }
    let mut out = Vec::with_capacity(window_count(t_len));
    let mut raw = vec![0.0; IMAGE_LEN];
    for center in HALF_WINDOW_MIN..=t_len - HALF_WINDOW_MIN {
        let first = center - HALF_WINDOW_MIN;
        for f in 0..WINDOW_MIN {
            raw[f * WINDOW_MIN..(f + 1) * WINDOW_MIN]
                .copy_from_slice(&spec.row(f)[first..first + WINDOW_MIN]);
        }
        let image = normalize_image(&raw).into_iter().map(|v| v as f32).collect();
        let vector = normalize_vector(&power.values[first..first + WINDOW_MIN])
            .into_iter()
            .map(|v| v as f32)
            .collect();
        out.push(WindowSample {
            image,
            vector,
            center_min: center as u32,
            label: window_label(labels, center as f64),
        });
    }
    Ok(out)
}

pub fn write_dataset(samples: &[WindowSample], path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(DATASET_HEADER_LEN + samples.len() * RECORD_LEN);
    bytes.extend_from_slice(DATASET_MAGIC);
    bytes.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        if s.image.len() != IMAGE_LEN || s.vector.len() != WINDOW_MIN {
            return Err(Error::ShapeMismatch(format!(
                "window at minute {} has image {} / vector {}",
                s.center_min,
                s.image.len(),
                s.vector.len()
            )));
        }
        bytes.extend_from_slice(&s.center_min.to_le_bytes());
        bytes.push(s.label);
        for v in s.image.iter().chain(&s.vector) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<WindowSample>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |at: usize, msg: &str| Error::parse(path, Position::Byte(at as u64), msg);
    if bytes.len() < DATASET_HEADER_LEN {
        return Err(bad(bytes.len(), "truncated header"));
    }
    if &bytes[..4] != DATASET_MAGIC {
        return Err(bad(0, "bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATASET_VERSION {
        return Err(bad(4, "unsupported version"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let expected = count
        .checked_mul(RECORD_LEN)
        .and_then(|n| n.checked_add(DATASET_HEADER_LEN))
        .ok_or_else(|| bad(8, "record count overflows"))?;
    if bytes.len() != expected {
        return Err(bad(bytes.len().min(expected), "length disagrees with record count"));
    }
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let mut out = Vec::with_capacity(count);
    for r in 0..count {
        let base = DATASET_HEADER_LEN + r * RECORD_LEN;
        let center_min = u32::from_le_bytes(bytes[base..base + 4].try_into().unwrap());
        let label = bytes[base + 4];
        if label > 1 {
            return Err(bad(base + 4, "label must be 0 or 1"));
        }
        let data = base + 5;
        let image: Vec<f32> = (0..IMAGE_LEN).map(|i| f32_at(data + 4 * i)).collect();
        let vdata = data + 4 * IMAGE_LEN;
        let vector: Vec<f32> = (0..WINDOW_MIN).map(|i| f32_at(vdata + 4 * i)).collect();
        if let Some(i) = image.iter().chain(&vector).position(|v| !v.is_finite()) {
            return Err(bad(data + 4 * i, "non-finite value"));
        }
        out.push(WindowSample {
            image,
            vector,
            center_min,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eeg_io::EegTrace;
    use crate::spectro::spectral_features;

    fn features(minutes: usize) -> (Spectrogram, PowerSeries) {
        let fs = 100.0;
        let n = minutes * 60 * fs as usize;
        let s: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (std::f64::consts::TAU * t).sin() * (1.0 + 0.3 * (t / 400.0).sin())
                    + 0.2 * (std::f64::consts::TAU * 1.37 * t).sin()
            })
            .collect();
        let trace = EegTrace::new(s, fs, 0.0, "w").unwrap();
        spectral_features(&trace, &Default::default()).unwrap()
    }

    #[test]
    fn counts_follow_boundary_arithmetic() {
        let (s, p) = features(30);
        let w = crop_windows(&s, &p, &SdLabelSet::empty()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].center_min, 15);
        let (s, p) = features(60);
        assert_eq!(crop_windows(&s, &p, &SdLabelSet::empty()).unwrap().len(), 31);
        let (s, p) = features(29);
        assert!(matches!(
            crop_windows(&s, &p, &SdLabelSet::empty()),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn label_dilation() {
        let (s, p) = features(90);
        let labels = SdLabelSet::new(vec![40.0], None).unwrap();
        let w = crop_windows(&s, &p, &labels).unwrap();
        for x in &w {
            let expect = (25..=55).contains(&x.center_min) as u8;
            assert_eq!(x.label, expect, "minute {}", x.center_min);
        }
    }

    #[test]
    fn image_normalization_cases() {
        assert!(normalize_image(&[3.0; 900]).iter().all(|&v| v == 0.0));
        let two: Vec<f64> = (0..900).map(|i| if i % 2 == 0 { 0.5 } else { 5.0 }).collect();
        let out = normalize_image(&two);
        for (i, v) in out.iter().enumerate() {
            let expect = if i % 2 == 0 { 0.0 } else { 1.0 };
            assert!((v - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn window_invariants() {
        let (s, p) = features(45);
        let w = crop_windows(&s, &p, &SdLabelSet::empty()).unwrap();
        for x in &w {
            assert!(x.image.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let m: f64 = x.vector.iter().map(|&v| v as f64).sum::<f64>() / 30.0;
            let var: f64 = x.vector.iter().map(|&v| (v as f64 - m).powi(2)).sum::<f64>() / 30.0;
            assert!(m.abs() < 1e-5 && (var - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn dataset_file_round_trip_and_rejections() {
        let (s, p) = features(40);
        let labels = SdLabelSet::new(vec![20.0], None).unwrap();
        let w = crop_windows(&s, &p, &labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sdds");
        write_dataset(&w, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"SDDS");
        assert_eq!(bytes.len(), 16 + w.len() * RECORD_LEN);
        assert_eq!(read_dataset(&path).unwrap(), w);

        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_dataset(&path).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&path, bad).unwrap();
        assert!(matches!(
            read_dataset(&path),
            Err(Error::Parse { position: Position::Byte(0), .. })
        ));
    }
}
