//! Dual-path CNN: construction, training, per-minute inference and
//! checkpoint files.

mod arch;
mod checkpoint;
mod model;
mod train;

pub use arch::{Architecture, InputMask, Variant};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION,
};
pub use model::{Forward, ModelParams, Network};
pub use train::{train, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::nn::PROB_CLAMP;
use crate::windowing::WindowSample;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Declared architecture for `variant`, initialized from `seed`.
pub fn build_model(variant: Variant, seed: u64) -> ModelParams {
    Network::init(Architecture::declared(variant), seed)
        .expect("declared architecture is valid")
}

/// Per-minute decisions aligned to window centres.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinaryOutcomeSeries {
    pub values: Vec<u8>,
    pub probabilities: Vec<f64>,
    /// Centre minute of the first entry.
    pub start_min: u32,
}

impl BinaryOutcomeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Re-thresholds the stored probabilities.
    pub fn with_threshold(&self, threshold: f64) -> Self {
        Self {
            values: self.probabilities.iter().map(|&p| (p >= threshold) as u8).collect(),
            probabilities: self.probabilities.clone(),
            start_min: self.start_min,
        }
    }
}

/// Probability of one window, clamped away from 0 and 1.
pub fn predict_sample(model: &ModelParams, sample: &WindowSample) -> Result<f64> {
    let p = model.forward_sample(sample)?.prob as f64;
    Ok(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
}

/// Stage-5 outcomes for consecutive windows; `value = probability ≥ threshold`.
pub fn infer(
    model: &ModelParams,
    samples: &[WindowSample],
    threshold: f64,
) -> Result<BinaryOutcomeSeries> {
    if threshold.is_nan() {
        return Err(Error::InvalidArgument("threshold is NaN".into()));
    }
    let Some(first) = samples.first() else {
        return Ok(BinaryOutcomeSeries::default());
    };
    if let Some(w) = samples.windows(2).find(|w| w[1].center_min != w[0].center_min + 1) {
        return Err(Error::InvalidArgument(format!(
            "window centres must be consecutive minutes; {} follows {}",
            w[1].center_min, w[0].center_min
        )));
    }
    let probabilities = samples
        .iter()
        .map(|s| predict_sample(model, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(BinaryOutcomeSeries {
        values: probabilities.iter().map(|&p| (p >= threshold) as u8).collect(),
        probabilities,
        start_min: first.center_min,
    })
}
