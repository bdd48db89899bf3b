use serde::{Deserialize, Serialize};

use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.5,
            beta2: 0.5,
            eps: 1e-8,
        }
    }
}

/// Adam optimizer state: first/second moments per parameter and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub config: AdamConfig,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub step: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, params: &[Tensor<T>]) -> Result<Self> {
        let ok = |b: f64| b > 0.0 && b < 1.0;
        if !(config.lr > 0.0) || !ok(config.beta1) || !ok(config.beta2) || !(config.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("bad Adam config {config:?}")));
        }
        Ok(Self {
            config,
            m: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            step: 0,
        })
    }

    /// One bias-corrected Adam update of `params` with `grads`.
    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} params / {} grads for optimizer of {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.len() != g.len() || p.len() != m.len() {
                return Err(Error::ShapeMismatch(format!(
                    "param {:?} vs grad {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.step += 1;
        let c = &self.config;
        let b1 = T::of_f64(c.beta1);
        let b2 = T::of_f64(c.beta2);
        let one = T::one();
        let corr1 = T::of_f64(1.0 - c.beta1.powi(self.step as i32));
        let corr2 = T::of_f64(1.0 - c.beta2.powi(self.step as i32));
        let lr = T::of_f64(c.lr);
        let eps = T::of_f64(c.eps);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
