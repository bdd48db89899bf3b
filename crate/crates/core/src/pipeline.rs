//! The end-to-end experiment shared by the CLI and the acceptance tests:
//! simulate, extract windows, train each variant, evaluate per minute and
//! per peak, and check specificity on SD-free recordings.

use std::fs;
use std::path::Path;

use crate::config::RunConfig;
use crate::detector::{self, Architecture, BinaryOutcomeSeries, ModelParams, Network, TrainReport, Variant};
use crate::eeg_io::{read_labels, write_labels, EegTrace, SdLabelSet};
use crate::error::{Error, Result};
use crate::preprocess::{self, PreprocessSpec};
use crate::score::{self, BinaryMetrics, ConfidenceSeries, ReportRow, SweepRow};
use crate::seed::{self, Stream};
use crate::simulate::{self, DatasetSpec, Split};
use crate::spectro::{self, SpectroSpec};
use crate::windowing::{self, WindowSample};

/// Conditioning, spectral features and window crops of one trace.
pub fn extract_windows(
    trace: &EegTrace,
    labels: &SdLabelSet,
    pre: &PreprocessSpec,
    spectro: &SpectroSpec,
) -> Result<Vec<WindowSample>> {
    let clean = preprocess::condition(trace, pre)?;
    let (spec, power) = spectro::spectral_features(&clean, spectro)?;
    windowing::crop_windows(&spec, &power, labels)
}

/// Windows and labels of one simulated segment; the trace itself is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSegment {
    pub name: String,
    pub duration_min: f64,
    pub labels: SdLabelSet,
    pub windows: Vec<WindowSample>,
}

pub fn prepare_split(
    data: &DatasetSpec,
    pre: &PreprocessSpec,
    spectro: &SpectroSpec,
    split: Split,
    root_seed: u64,
) -> Result<Vec<PreparedSegment>> {
    simulate::plan_segments(data, split, root_seed)?
        .iter()
        .map(|plan| {
            let (trace, labels) = simulate::generate_segment(plan, data)?;
            Ok(PreparedSegment {
                name: plan.name(),
                duration_min: plan.duration_min as f64,
                windows: extract_windows(&trace, &labels, pre, spectro)?,
                labels,
            })
        })
        .collect()
}

/// `<dir>/<name>.sdds` and `<dir>/<name>_labels.txt`.
pub fn write_segment(dir: &Path, seg: &PreparedSegment) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    windowing::write_dataset(&seg.windows, &dir.join(format!("{}.sdds", seg.name)))?;
    write_labels(&seg.labels, &dir.join(format!("{}_labels.txt", seg.name)))
}

/// Every `*.sdds` in `dir` (sorted by name) with its label file. Segment
/// length is recovered from the window count.
pub fn read_segments(dir: &Path) -> Result<Vec<PreparedSegment>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "sdds") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no .sdds window files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let windows = windowing::read_dataset(p)?;
            let label_path = dir.join(format!("{name}_labels.txt"));
            let labels = if label_path.exists() { read_labels(&label_path)? } else { SdLabelSet::empty() };
            Ok(PreparedSegment {
                duration_min: (windows.len() + windowing::WINDOW_MIN - 1) as f64,
                name,
                labels,
                windows,
            })
        })
        .collect()
}

pub fn prepare_split_from(cfg: &RunConfig, split: Split) -> Result<Vec<PreparedSegment>> {
    prepare_split(&cfg.simulate, &cfg.preprocess, &cfg.spectro, split, cfg.run.seed)
}

/// Init seed and training seed of `variant` under `root_seed`.
pub fn model_seeds(root_seed: u64, variant: Variant) -> (u64, u64) {
    let k = variant as u64;
    (
        seed::child_seed(seed::stream_seed(root_seed, Stream::ModelInit), k),
        seed::child_seed(seed::stream_seed(root_seed, Stream::Training), k),
    )
}

pub fn train_variant(
    cfg: &RunConfig,
    variant: Variant,
    segments: &[PreparedSegment],
) -> Result<(ModelParams, TrainReport)> {
    let (init_seed, train_seed) = model_seeds(cfg.run.seed, variant);
    let mut model = Network::init(Architecture::declared(variant), init_seed)?;
    if variant == Variant::Dual {
        model = model.with_input_mask(cfg.model.input_mask);
    }
    let samples: Vec<WindowSample> = segments.iter().flat_map(|s| s.windows.iter().cloned()).collect();
    let report = detector::train(&mut model, &samples, &cfg.train, train_seed)?;
    Ok((model, report))
}

/// Outcomes and scores of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentResult {
    pub name: String,
    pub hours: f64,
    pub labels: SdLabelSet,
    pub outcomes: BinaryOutcomeSeries,
    pub confidence: ConfidenceSeries,
}

/// Pooled results of one model over a set of recordings.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub variant: String,
    pub hours: f64,
    pub segments: Vec<SegmentResult>,
    pub row: ReportRow,
    pub sweep: Vec<SweepRow>,
}

impl Evaluation {
    pub fn fp_per_hour(&self, row: &SweepRow) -> f64 {
        row.fp as f64 / self.hours
    }

    pub fn sweep_row(&self, threshold: f64) -> Option<&SweepRow> {
        self.sweep.iter().find(|r| r.threshold == threshold)
    }
}

pub fn evaluate(
    model: &ModelParams,
    variant: &str,
    segments: &[PreparedSegment],
    cfg: &RunConfig,
) -> Result<Evaluation> {
    let d = &cfg.detect;
    let thresholds = cfg.sweep_thresholds();
    let mut results = Vec::with_capacity(segments.len());
    let mut counts = (0, 0, 0, 0);
    let mut sq_dist = 0.0;
    let mut sweeps = Vec::with_capacity(segments.len());
    let (mut tp, mut fn_, mut fp) = (0, 0, 0);
    for seg in segments {
        let outcomes = detector::infer(model, &seg.windows, d.threshold)?;
        let truth = score::truth_outcomes(&seg.labels, &outcomes);
        let m = score::binary_metrics(&outcomes.values, &truth)?;
        counts = (counts.0 + m.tp, counts.1 + m.tn, counts.2 + m.fp, counts.3 + m.fn_);
        let conf = score::confidence(&outcomes)?;
        sq_dist += score::euclidean_to_expected(&conf, &seg.labels)?.powi(2);
        let peaks = score::match_peaks(&conf, &seg.labels, d.confidence_threshold, d.match_tolerance_min);
        tp += peaks.tp;
        fn_ += peaks.fn_;
        fp += peaks.fp;
        sweeps.push(score::threshold_sweep(&conf, &seg.labels, &thresholds, d.match_tolerance_min)?);
        results.push(SegmentResult {
            name: seg.name.clone(),
            hours: seg.duration_min / 60.0,
            labels: seg.labels.clone(),
            outcomes,
            confidence: conf,
        });
    }
    let hours = segments.iter().map(|s| s.duration_min / 60.0).sum();
    Ok(Evaluation {
        variant: variant.to_string(),
        hours,
        segments: results,
        row: ReportRow {
            model_variant: variant.to_string(),
            stage5: BinaryMetrics::from_counts(counts.0, counts.1, counts.2, counts.3),
            euclidean: (!segments.is_empty()).then(|| sq_dist.sqrt()),
            tp_peaks: tp,
            fn_peaks: fn_,
            fp_peaks: fp,
            peak_sensitivity: score::ratio(tp as u64, (tp + fn_) as u64),
        },
        sweep: score::pool_sweeps(&sweeps),
    })
}

/// Threshold with the highest peak sensitivity among those within
/// `max_fp_per_hour`; fewest false positives on ties.
pub fn choose_threshold(eval: &Evaluation, max_fp_per_hour: f64) -> Option<SweepRow> {
    eval.sweep
        .iter()
        .filter(|r| eval.fp_per_hour(r) <= max_fp_per_hour && r.sensitivity.is_some())
        .fold(None, |best: Option<SweepRow>, r| match best {
            Some(b) if b.sensitivity > r.sensitivity => Some(b),
            Some(b) if b.sensitivity == r.sensitivity && b.fp <= r.fp => Some(b),
            _ => Some(*r),
        })
}

/// Fewest false-positive peaks over thresholds reaching `sensitivity`;
/// `None` if no threshold reaches it.
pub fn fp_at_sensitivity(eval: &Evaluation, sensitivity: f64) -> Option<usize> {
    eval.sweep
        .iter()
        .filter(|r| r.sensitivity.is_some_and(|s| s >= sensitivity))
        .map(|r| r.fp)
        .min()
}

/// Everything one full run produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub models: Vec<(Variant, ModelParams, TrainReport)>,
    pub evaluations: Vec<Evaluation>,
    pub chosen: Option<SweepRow>,
    pub control: Option<Evaluation>,
}

impl ExperimentOutput {
    pub fn evaluation(&self, variant: Variant) -> Option<&Evaluation> {
        self.evaluations.iter().find(|e| e.variant == variant.name())
    }

    pub fn control_fp_per_hour(&self) -> Option<f64> {
        let (c, t) = (self.control.as_ref()?, self.chosen?);
        c.sweep_row(t.threshold).map(|r| c.fp_per_hour(r))
    }

    /// Checkpoints, outcome series, report and sweep tables.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
        };
        for (v, m, r) in &self.models {
            detector::save_checkpoint(m, &dir.join(format!("model-{}.sddm", v.name())))?;
            let losses: String = r.epoch_losses.iter().enumerate().map(|(i, l)| format!("{},{l}\n", i + 1)).collect();
            put(&format!("loss-{}.csv", v.name()), format!("epoch,loss\n{losses}").as_bytes())?;
        }
        let mut rows: Vec<ReportRow> = self.evaluations.iter().map(|e| e.row.clone()).collect();
        if let Some(c) = &self.control {
            rows.push(c.row.clone());
        }
        put("report.csv", score::report_csv(&rows).as_bytes())?;
        for e in self.evaluations.iter().chain(&self.control) {
            put(&format!("sweep-{}.csv", e.variant), score::sweep_csv(&e.sweep, Some(e.hours)).as_bytes())?;
            put(&format!("outcomes-{}.csv", e.variant), outcomes_csv(e).as_bytes())?;
        }
        if let Some(t) = self.chosen {
            let ctl = self.control_fp_per_hour().map_or("undefined".into(), |v| format!("{v:.4}"));
            let text = format!(
                "threshold,{}\nsensitivity,{}\nfp,{}\ncontrol_fp_per_hour,{ctl}\n",
                t.threshold,
                t.sensitivity.map_or("undefined".into(), |s| format!("{s:.4}")),
                t.fp
            );
            put("chosen-threshold.csv", text.as_bytes())?;
        }
        Ok(())
    }
}

fn outcomes_csv(e: &Evaluation) -> String {
    let mut out = String::from("segment,minute,probability,outcome\n");
    for s in &e.segments {
        for (i, (p, v)) in s.outcomes.probabilities.iter().zip(&s.outcomes.values).enumerate() {
            out.push_str(&format!("{},{},{p:e},{v}\n", s.name, s.outcomes.start_min as usize + i));
        }
    }
    out
}

/// Full run from `cfg`: the configured variant, the single-path ablations
/// when enabled, and the SD-free control when it has any hours.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let train = prepare_split_from(cfg, Split::Train)?;
    let test = prepare_split_from(cfg, Split::Test)?;
    let mut variants = vec![cfg.model.variant];
    if cfg.model.ablations {
        variants.extend(Variant::ALL.iter().copied().filter(|v| *v != cfg.model.variant));
    }
    let mut models = Vec::new();
    let mut evaluations = Vec::new();
    for v in variants {
        let (model, report) = train_variant(cfg, v, &train)?;
        evaluations.push(evaluate(&model, v.name(), &test, cfg)?);
        models.push((v, model, report));
    }
    drop(train);
    let chosen = choose_threshold(&evaluations[0], cfg.detect.max_fp_per_hour);
    let control = if cfg.simulate.control_hours > 0.0 {
        let segs = prepare_split_from(cfg, Split::Control)?;
        Some(evaluate(&models[0].1, "control", &segs, cfg)?)
    } else {
        None
    };
    Ok(ExperimentOutput { models, evaluations, chosen, control })
}
