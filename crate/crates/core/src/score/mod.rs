//! Confidence scoring, per-minute and per-peak metrics, threshold sweeps and
//! evaluation tables.

mod matching;

pub use matching::match_within;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::detector::BinaryOutcomeSeries;
use crate::eeg_io::SdLabelSet;
use crate::error::{Error, Result};
use crate::windowing::{window_label, HALF_WINDOW_MIN, WINDOW_MIN};

/// Largest possible confidence score.
pub const MAX_SCORE: u32 = WINDOW_MIN as u32;
/// Default peak-matching tolerance, minutes.
pub const MATCH_TOLERANCE_MIN: f64 = 15.0;
const UNDEFINED: &str = "undefined";

/// 30-minute sliding sums of binary outcomes. `scores[j]` belongs to minute
/// `start_min + j` and sums outcomes for minutes `[t-15, t+14]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfidenceSeries {
    pub scores: Vec<u32>,
    pub start_min: u32,
}

impl ConfidenceSeries {
    pub fn minute(&self, index: usize) -> f64 {
        (self.start_min as usize + index) as f64
    }
}

pub fn confidence(outcomes: &BinaryOutcomeSeries) -> Result<ConfidenceSeries> {
    let v = &outcomes.values;
    if v.len() < WINDOW_MIN {
        return Err(Error::TooShort {
            required_min: WINDOW_MIN as f64,
            actual_min: v.len() as f64,
        });
    }
    let mut sum: u32 = v[..WINDOW_MIN].iter().map(|&b| b as u32).sum();
    let mut scores = Vec::with_capacity(v.len() - WINDOW_MIN + 1);
    scores.push(sum);
    for j in WINDOW_MIN..v.len() {
        sum = sum + v[j] as u32 - v[j - WINDOW_MIN] as u32;
        scores.push(sum);
    }
    Ok(ConfidenceSeries {
        scores,
        start_min: outcomes.start_min + HALF_WINDOW_MIN as u32,
    })
}

/// Triangle of height 30 at each peak, reaching 0 at ±15 min; overlapping
/// triangles combine by maximum. One value per minute `0..duration_min`.
pub fn expected_confidence(labels: &SdLabelSet, duration_min: usize) -> Result<Vec<f64>> {
    labels.check_within(duration_min as f64)?;
    let half = HALF_WINDOW_MIN as f64;
    Ok((0..duration_min)
        .map(|t| {
            labels
                .peaks_min()
                .iter()
                .map(|p| (MAX_SCORE as f64 * (1.0 - (t as f64 - p).abs() / half)).max(0.0))
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Confusion counts with the derived rates; a rate with a zero denominator
/// is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

pub(crate) fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl BinaryMetrics {
    pub fn from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self {
            tp,
            tn,
            fp,
            fn_,
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
        }
    }
}

pub fn binary_metrics(pred: &[u8], truth: &[u8]) -> Result<BinaryMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} truth values",
            pred.len(),
            truth.len()
        )));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(BinaryMetrics::from_counts(tp, tn, fp, fn_))
}

pub fn euclidean(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!("lengths {} and {}", u.len(), v.len())));
    }
    Ok(u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Per-minute truth aligned with `outcomes`.
pub fn truth_outcomes(labels: &SdLabelSet, outcomes: &BinaryOutcomeSeries) -> Vec<u8> {
    (0..outcomes.len())
        .map(|i| window_label(labels, (outcomes.start_min as usize + i) as f64))
        .collect()
}

/// Distance between the confidence series and the expected profile over the
/// minutes the series covers.
pub fn euclidean_to_expected(conf: &ConfidenceSeries, labels: &SdLabelSet) -> Result<f64> {
    let end = conf.start_min as usize + conf.scores.len();
    let expected = expected_confidence(labels, end.max(labels.peaks_min().last().map_or(0, |p| p.ceil() as usize + 1)))?;
    let scores: Vec<f64> = conf.scores.iter().map(|&s| s as f64).collect();
    euclidean(&scores, &expected[conf.start_min as usize..end])
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakReport {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    /// `(predicted_min, truth_min)`.
    pub matched: Vec<(f64, f64)>,
    pub sensitivity: Option<f64>,
}

/// Minutes of local maxima with score ≥ `threshold` and > 0. A plateau
/// counts once, at its leftmost minute, when both neighbours are lower.
pub fn find_peaks(conf: &ConfidenceSeries, threshold: f64) -> Vec<f64> {
    let s = &conf.scores;
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let left_lower = i == 0 || s[i - 1] < s[i];
        let right_lower = j + 1 == s.len() || s[j + 1] < s[i];
        if left_lower && right_lower && s[i] > 0 && s[i] as f64 >= threshold {
            peaks.push(conf.minute(i));
        }
        i = j + 1;
    }
    peaks
}

pub fn match_peaks(
    conf: &ConfidenceSeries,
    truth: &SdLabelSet,
    threshold: f64,
    tol_min: f64,
) -> PeakReport {
    let pred = find_peaks(conf, threshold);
    let t = truth.peaks_min();
    let pairs = match_within(&pred, t, tol_min);
    let tp = pairs.len();
    PeakReport {
        tp,
        fn_: t.len() - tp,
        fp: pred.len() - tp,
        matched: pairs.iter().map(|&(i, j)| (pred[i], t[j])).collect(),
        sensitivity: ratio(tp as u64, t.len() as u64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub sensitivity: Option<f64>,
}

pub fn threshold_sweep(
    conf: &ConfidenceSeries,
    truth: &SdLabelSet,
    thresholds: &[f64],
    tol_min: f64,
) -> Result<Vec<SweepRow>> {
    if let Some(t) = thresholds.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("threshold {t}")));
    }
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let r = match_peaks(conf, truth, threshold, tol_min);
            SweepRow { threshold, tp: r.tp, fn_: r.fn_, fp: r.fp, sensitivity: r.sensitivity }
        })
        .collect())
}

/// Integer thresholds `0..=30`.
pub fn default_thresholds() -> Vec<f64> {
    (0..=MAX_SCORE).map(f64::from).collect()
}

/// Adds per-recording counts into one pooled row per threshold.
pub fn pool_sweeps(sweeps: &[Vec<SweepRow>]) -> Vec<SweepRow> {
    let Some(first) = sweeps.first() else { return Vec::new() };
    first
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let (tp, fn_, fp) = sweeps.iter().fold((0, 0, 0), |a, s| (a.0 + s[k].tp, a.1 + s[k].fn_, a.2 + s[k].fp));
            SweepRow {
                threshold: row.threshold,
                tp,
                fn_,
                fp,
                sensitivity: ratio(tp as u64, (tp + fn_) as u64),
            }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:.4}"))
}

/// One evaluation-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_variant: String,
    pub stage5: BinaryMetrics,
    pub euclidean: Option<f64>,
    pub tp_peaks: usize,
    pub fn_peaks: usize,
    pub fp_peaks: usize,
    pub peak_sensitivity: Option<f64>,
}

pub const REPORT_HEADER: &str = "model_variant,stage5_sensitivity,stage5_specificity,stage5_accuracy,euclidean,tp_peaks,fn_peaks,fp_peaks,peak_sensitivity";

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.model_variant,
            cell(r.stage5.sensitivity),
            cell(r.stage5.specificity),
            cell(r.stage5.accuracy),
            cell(r.euclidean),
            r.tp_peaks,
            r.fn_peaks,
            r.fp_peaks,
            cell(r.peak_sensitivity)
        );
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow], hours: Option<f64>) -> String {
    let mut out = String::from("threshold,tp,fn,fp,sensitivity,fp_per_hour\n");
    for r in rows {
        let fph = hours.filter(|h| *h > 0.0).map(|h| r.fp as f64 / h);
        let _ = writeln!(out, "{},{},{},{},{},{}", r.threshold, r.tp, r.fn_, r.fp, cell(r.sensitivity), cell(fph));
    }
    out
}

/// `minute,score,expected` rows for plotting.
pub fn confidence_csv(conf: &ConfidenceSeries, labels: &SdLabelSet) -> Result<String> {
    let end = conf.start_min as usize + conf.scores.len();
    let expected = expected_confidence(labels, end.max(labels.peaks_min().last().map_or(0, |p| p.ceil() as usize + 1)))?;
    let mut out = String::from("minute,score,expected\n");
    for (i, s) in conf.scores.iter().enumerate() {
        let m = conf.start_min as usize + i;
        let _ = writeln!(out, "{m},{s},{}", expected[m]);
    }
    Ok(out)
}
