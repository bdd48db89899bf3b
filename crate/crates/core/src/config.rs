//! Run configuration: one TOML file with a section per module. Every key has
//! a default and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::{InputMask, TrainConfig, Variant, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::preprocess::PreprocessSpec;
use crate::score::MATCH_TOLERANCE_MIN;
use crate::simulate::DatasetSpec;
use crate::spectro::SpectroSpec;

/// Environment variable consulted when no config path is given.
pub const CONFIG_ENV: &str = "SD_SENTINEL_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Root of every random stream.
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 20_240_601 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub variant: Variant,
    pub input_mask: InputMask,
    /// Also train and evaluate the single-path variants.
    pub ablations: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            variant: Variant::Dual,
            input_mask: InputMask::None,
            ablations: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectSection {
    /// Stage-5 probability threshold.
    pub threshold: f64,
    /// Confidence-score threshold for peak reporting.
    pub confidence_threshold: f64,
    pub match_tolerance_min: f64,
    /// Peak false positives per hour allowed when picking a threshold from
    /// a sweep.
    pub max_fp_per_hour: f64,
    /// Sweep thresholds; empty means every integer 0..=30.
    pub sweep: Vec<f64>,
}

impl Default for DetectSection {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            confidence_threshold: 15.0,
            match_tolerance_min: MATCH_TOLERANCE_MIN,
            max_fp_per_hour: 0.2,
            sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub hours: u32,
    pub sample_rate_hz: f64,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { hours: 10, sample_rate_hz: 200.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub preprocess: PreprocessSpec,
    pub spectro: SpectroSpec,
    pub simulate: DatasetSpec,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub detect: DetectSection,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// `explicit`, else `$SD_SENTINEL_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(env) {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        self.simulate.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.train.batch_size == 0 {
            return bad("train.batch_size must be positive");
        }
        if !(0.0..=1.0).contains(&self.detect.threshold) {
            return bad("detect.threshold must lie in [0, 1]");
        }
        if !(self.detect.match_tolerance_min >= 0.0) {
            return bad("detect.match_tolerance_min must be ≥ 0");
        }
        if !(self.bench.sample_rate_hz > 90.0) {
            return bad("bench.sample_rate_hz must exceed 90 Hz for the 45 Hz band edge");
        }
        if self.detect.sweep.iter().any(|t| !t.is_finite()) {
            return bad("detect.sweep holds a non-finite threshold");
        }
        Ok(())
    }

    pub fn sweep_thresholds(&self) -> Vec<f64> {
        if self.detect.sweep.is_empty() {
            crate::score::default_thresholds()
        } else {
            self.detect.sweep.clone()
        }
    }
}
