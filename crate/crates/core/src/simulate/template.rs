use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear SD suppression profile: ramp 1→depth over `onset_min`,
/// hold `depth` for `trough_min`, ramp back to 1 over `recovery_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdTemplate {
    pub onset_min: f64,
    pub depth: f64,
    pub trough_min: f64,
    pub recovery_min: f64,
}

impl Default for SdTemplate {
    fn default() -> Self {
        Self {
            onset_min: 5.0,
            depth: 0.2,
            trough_min: 7.5,
            recovery_min: 10.0,
        }
    }
}

impl SdTemplate {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.depth > 0.0 && self.depth <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "trough depth {} outside (0, 1]",
                self.depth
            )));
        }
        if !(finite_nonneg(self.onset_min)
            && finite_nonneg(self.trough_min)
            && finite_nonneg(self.recovery_min))
            || self.duration_min() <= 0.0
        {
            return Err(Error::InvalidArgument(format!("bad template durations {self:?}")));
        }
        Ok(())
    }

    pub fn duration_min(&self) -> f64 {
        self.onset_min + self.trough_min + self.recovery_min
    }

    /// Offset of the trough centre (the labelled peak) from the profile start.
    pub fn peak_offset_min(&self) -> f64 {
        self.onset_min + self.trough_min / 2.0
    }

    /// Multiplier at `t_min` after the profile start; 1 outside the profile.
    pub fn value_at(&self, t_min: f64) -> f64 {
        let d = self.depth;
        let hold_end = self.onset_min + self.trough_min;
        if t_min <= 0.0 || t_min >= self.duration_min() {
            1.0
        } else if t_min < self.onset_min {
            1.0 - (1.0 - d) * t_min / self.onset_min
        } else if t_min <= hold_end {
            d
        } else {
            d + (1.0 - d) * (t_min - hold_end) / self.recovery_min
        }
    }

    /// Profile sampled once per second, both ends included.
    pub fn profile_per_second(&self) -> Vec<f64> {
        let n = (self.duration_min() * 60.0).ceil() as usize;
        (0..=n)
            .map(|s| self.value_at((s as f64 / 60.0).min(self.duration_min())))
            .collect()
    }
}

/// Ranges templates are drawn from, uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemplateRanges {
    pub onset_min: f64,
    pub depth: (f64, f64),
    pub trough_min: (f64, f64),
    pub recovery_min: f64,
}

impl Default for TemplateRanges {
    fn default() -> Self {
        Self {
            onset_min: 5.0,
            depth: (0.1, 0.3),
            trough_min: (5.0, 10.0),
            recovery_min: 10.0,
        }
    }
}

impl TemplateRanges {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(a, b): (f64, f64)| a <= b;
        if !ordered(self.depth) || !ordered(self.trough_min) {
            return Err(Error::InvalidArgument(format!("inverted template range {self:?}")));
        }
        self.draw_with(self.depth.0, self.trough_min.0).validate()?;
        self.draw_with(self.depth.1, self.trough_min.1).validate()
    }

    fn draw_with(&self, depth: f64, trough_min: f64) -> SdTemplate {
        SdTemplate {
            onset_min: self.onset_min,
            depth,
            trough_min,
            recovery_min: self.recovery_min,
        }
    }

    /// Longest template these ranges can produce.
    pub fn max_duration_min(&self) -> f64 {
        self.onset_min + self.trough_min.1 + self.recovery_min
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> SdTemplate {
        self.draw_with(uniform(rng, self.depth), uniform(rng, self.trough_min))
    }
}

pub(crate) fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
