//! Butterworth sections designed with the bilinear transform and applied
//! forward-backward.

use std::f64::consts::PI;

/// One second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// `|H(e^{jω})|` at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = self.b1 * s1 + self.b2 * s2;
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = self.a1 * s1 + self.a2 * s2;
        ((num_re * num_re + num_im * num_im) / (den_re * den_re + den_im * den_im)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Lowpass,
    Highpass,
}

/// Sections of an `order`-pole Butterworth filter with corner `cutoff_hz`.
pub fn design(kind: Kind, order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Vec<Biquad> {
    let k = (PI * cutoff_hz / sample_rate_hz).tan();
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for i in 0..order / 2 {
        let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.sin());
        let norm = 1.0 / (1.0 + k / q + k * k);
        let a1 = 2.0 * (k * k - 1.0) * norm;
        let a2 = (1.0 - k / q + k * k) * norm;
        let (b0, b1, b2) = match kind {
            Kind::Lowpass => (k * k * norm, 2.0 * k * k * norm, k * k * norm),
            Kind::Highpass => (norm, -2.0 * norm, norm),
        };
        sections.push(Biquad { b0, b1, b2, a1, a2 });
    }
    if order % 2 == 1 {
        let norm = 1.0 / (1.0 + k);
        let a1 = (k - 1.0) * norm;
        let (b0, b1) = match kind {
            Kind::Lowpass => (k * norm, k * norm),
            Kind::Highpass => (norm, -norm),
        };
        sections.push(Biquad { b0, b1, b2: 0.0, a1, a2: 0.0 });
    }
    sections
}

/// Runs the cascade over `x` in place, starting every section in the steady
/// state it would reach for a constant input equal to `x[0]`.
fn run_cascade(sections: &[Biquad], x: &mut [f64]) {
    let Some(&first) = x.first() else { return };
    let mut u = first;
    for s in sections {
        let g = s.dc_gain();
        let mut z1 = (g - s.b0) * u;
        let mut z2 = (s.b2 - s.a2 * g) * u;
        for v in x.iter_mut() {
            let xin = *v;
            let y = s.b0 * xin + z1;
            z1 = s.b1 * xin - s.a1 * y + z2;
            z2 = s.b2 * xin - s.a2 * y;
            *v = y;
        }
        u *= g;
    }
}

/// Zero-phase filtering with odd-reflection padding of `pad` samples per end.
pub fn filtfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = pad.min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (x0, xn) = (x[0], x[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x0 - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * xn - x[n - 1 - i]));

    run_cascade(sections, &mut ext);
    ext.reverse();
    run_cascade(sections, &mut ext);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_is_minus_3db() {
        for kind in [Kind::Lowpass, Kind::Highpass] {
            for order in 1..=6 {
                let s = design(kind, order, 10.0, 200.0);
                let mag: f64 = s.iter().map(|b| b.magnitude(10.0, 200.0)).product();
                assert!((mag - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "{kind:?} {order}");
            }
        }
    }

    #[test]
    fn constant_input_passes_lowpass_unchanged() {
        let s = design(Kind::Lowpass, 4, 5.0, 200.0);
        let y = filtfilt(&s, &vec![3.0; 500], 40);
        assert!(y.iter().all(|v| (v - 3.0).abs() < 1e-9));
        let hp = design(Kind::Highpass, 4, 0.5, 200.0);
        let y = filtfilt(&hp, &vec![3.0; 500], 40);
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }
}
