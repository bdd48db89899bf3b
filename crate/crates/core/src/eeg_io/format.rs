use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EegTrace, SdLabelSet};
use crate::error::{Error, Position, Result};

/// Relative tolerance between declared sample rate and CSV row spacing.
const RATE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    RawF32,
}

impl TraceFormat {
    /// `.csv` maps to CSV, anything else to rawf32.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::RawF32,
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TraceFormat::Csv),
            "rawf32" | "f32" | "raw" => Ok(TraceFormat::RawF32),
            other => Err(Error::InvalidArgument(format!("unknown trace format `{other}`"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    fs_hz: f64,
    channel: String,
    start_time_s: f64,
}

/// `<dir>/<stem>.meta.json` for a rawf32 file `<dir>/<stem>.<ext>`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn read_trace(path: &Path, format: TraceFormat) -> Result<EegTrace> {
    match format {
        TraceFormat::Csv => read_csv(path),
        TraceFormat::RawF32 => read_raw(path),
    }
}

/// Writes `trace`. rawf32 stores samples as `f32`, so traces whose samples are
/// not exactly representable lose precision; anything read from rawf32
/// round-trips bit-exactly.
pub fn write_trace(trace: &EegTrace, path: &Path, format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Csv => write_csv(trace, path),
        TraceFormat::RawF32 => write_raw(trace, path),
    }
}

fn read_csv(path: &Path) -> Result<EegTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, Position::Line(1), "empty file"))?;
    let (fs_hz, channel) = parse_csv_header(header)
        .map_err(|m| Error::parse(path, Position::Line(1), m))?;

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::parse(path, Position::Line(lineno), "expected 2 columns"));
        };
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, Position::Line(lineno), "bad timestamp"))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, Position::Line(lineno), "bad sample value"))?;
        if !t.is_finite() || !v.is_finite() {
            return Err(Error::parse(path, Position::Line(lineno), "non-finite value"));
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::parse(
                    path,
                    Position::Line(lineno),
                    "non-monotonic timestamp",
                ));
            }
            let dt: f64 = t - prev;
            let expected = 1.0 / fs_hz;
            if ((dt - expected) / expected).abs() > RATE_TOLERANCE {
                return Err(Error::parse(
                    path,
                    Position::Line(lineno),
                    format!("row spacing {dt} s disagrees with fs_hz={fs_hz}"),
                ));
            }
        }
        times.push(t);
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::parse(path, Position::Line(2), "no samples"));
    }
    EegTrace::new(samples, fs_hz, times[0], channel)
}

fn parse_csv_header(header: &str) -> std::result::Result<(f64, String), String> {
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if cols.len() != 4 || cols[0] != "time_s" || cols[1] != "value_uV" {
        return Err("header must be `time_s,value_uV,fs_hz=<float>,channel=<id>`".into());
    }
    let fs = cols[2]
        .strip_prefix("fs_hz=")
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|f| *f > 0.0 && f.is_finite())
        .ok_or("bad fs_hz field")?;
    let channel = cols[3].strip_prefix("channel=").ok_or("bad channel field")?;
    Ok((fs, channel.to_string()))
}

fn write_csv(trace: &EegTrace, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(trace.len() * 24 + 64);
    let _ = writeln!(
        out,
        "time_s,value_uV,fs_hz={},channel={}",
        trace.sample_rate_hz(),
        trace.channel_id()
    );
    let dt = 1.0 / trace.sample_rate_hz();
    for (i, v) in trace.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{}", trace.start_time_s() + i as f64 * dt, v);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_raw(path: &Path) -> Result<EegTrace> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        let tail = (bytes.len() - bytes.len() % 4) as u64;
        return Err(Error::parse(path, Position::Byte(tail), "truncated f32 sample"));
    }
    let meta_path = sidecar_path(path);
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Sidecar = serde_json::from_str(&meta_text).map_err(|e| {
        Error::parse(&meta_path, Position::Line(e.line()), e.to_string())
    })?;
    let mut samples = Vec::with_capacity(bytes.len() / 4);
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::parse(
                path,
                Position::Byte(i as u64 * 4),
                "non-finite sample",
            ));
        }
        samples.push(v as f64);
    }
    if samples.is_empty() {
        return Err(Error::parse(path, Position::Byte(0), "no samples"));
    }
    EegTrace::new(samples, meta.fs_hz, meta.start_time_s, meta.channel)
}

fn write_raw(trace: &EegTrace, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(trace.len() * 4);
    for &v in trace.samples() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = Sidecar {
        fs_hz: trace.sample_rate_hz(),
        channel: trace.channel_id().to_string(),
        start_time_s: trace.start_time_s(),
    };
    let meta_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))
}

pub fn read_labels(path: &Path) -> Result<SdLabelSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut peaks = Vec::new();
    let mut spans = Vec::new();
    let mut with_spans = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, Position::Line(lineno), "bad number"))?;
        let has_span = match fields.len() {
            1 => false,
            3 => true,
            _ => {
                return Err(Error::parse(
                    path,
                    Position::Line(lineno),
                    "expected `peak_min` or `peak_min,start_min,end_min`",
                ))
            }
        };
        if *with_spans.get_or_insert(has_span) != has_span {
            return Err(Error::parse(
                path,
                Position::Line(lineno),
                "spans must be given for all peaks or none",
            ));
        }
        peaks.push(fields[0]);
        if has_span {
            spans.push((fields[1], fields[2]));
        }
    }
    SdLabelSet::new(peaks, with_spans.unwrap_or(false).then_some(spans))
        .map_err(|e| Error::parse(path, Position::Line(0), e.to_string()))
}

pub fn write_labels(labels: &SdLabelSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    match labels.spans_min() {
        Some(spans) => {
            for (p, (s, e)) in labels.peaks_min().iter().zip(spans) {
                let _ = writeln!(out, "{p},{s},{e}");
            }
        }
        None => {
            for p in labels.peaks_min() {
                let _ = writeln!(out, "{p}");
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
