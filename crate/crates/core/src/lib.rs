//! Spreading-depolarization (SD) detection in single-channel EEG.
//!
//! The pipeline turns a trace into one-minute Hann-window spectra, crops a
//! 30-minute frequency-restricted spectrogram image and a 30-minute AC power
//! vector around every minute, scores each window with a small dual-path CNN
//! and sums the per-minute binary outcomes into a 0–30 confidence score.
//!
//! ```text
//! EegTrace ─ preprocess::condition ─ spectro::spectral_features
//!          ─ windowing::crop_windows ─ detector::infer ─ score::confidence
//! ```
//!
//! [`simulate`] produces labelled SD-carrying traces for training and
//! evaluation, [`score`] holds the evaluation metrics, and [`bench`] measures
//! single-thread CPU latency.

pub mod error;
pub mod seed;
pub mod simulate;

pub mod bench;
pub mod config;
pub mod detector;
pub mod eeg_io;
pub mod nn;
pub mod pipeline;
pub mod preprocess;
pub mod score;
pub mod spectro;
pub mod windowing;

pub use eeg_io::{EegTrace, SdLabelSet};
pub use error::{Error, Result};
