use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::Network;
use crate::error::{Error, Result};
use crate::nn::{self, Adam, AdamConfig, Real};
use crate::seed;
use crate::windowing::WindowSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(flatten)]
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 320,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean training BCE per epoch, accumulated during the epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
    pub warnings: Vec<String>,
}

/// Mini-batch Adam on mean BCE. Samples are reshuffled every epoch from
/// `seed`; the final short batch is kept.
pub fn train<T: Real>(
    model: &mut Network<T>,
    samples: &[WindowSample],
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut report = TrainReport::default();
    let positives = samples.iter().filter(|s| s.label == 1).count();
    if positives == 0 || positives == samples.len() {
        let msg = format!(
            "training set holds a single class ({} of {} positive); proceeding",
            positives,
            samples.len()
        );
        report.warnings.push(msg);
    }

    let mut adam = Adam::new(config.adam, model.params())?;
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grads = model.zero_grads();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.iter_mut().for_each(|g| g.fill(T::zero()));
            for &i in batch {
                let s = &samples[i];
                let fwd = model.forward_sample(s)?;
                let target = T::of_f64(s.label as f64);
                epoch_loss += nn::bce_loss(fwd.prob, target).as_f64();
                model.backward(&fwd, nn::bce_logit_grad(fwd.prob, target), &mut grads)?;
            }
            let scale = T::one() / T::of_f64(batch.len() as f64);
            for g in grads.iter_mut() {
                g.data_mut().iter_mut().for_each(|v| *v *= scale);
            }
            adam.step(model.params_mut(), &grads)?;
            report.steps += 1;
        }
        report.epoch_losses.push(epoch_loss / samples.len() as f64);
    }
    Ok(report)
}
