//! Shared oracles and checkers for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sd_sentinel::detector::{Architecture, InputMask, Network, Variant};
use sd_sentinel::nn::{self, bce_loss, Tensor};
use sd_sentinel::seed;

pub const FD_STEP: f64 = 1e-4;

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor<f64> {
    Tensor::new(shape.to_vec(), data).unwrap()
}

// Naive nested-loop oracles. Kernel size 3, zero padding 1.

pub fn conv2d_oracle(x: &[f64], cin: usize, h: usize, w: usize, k: &[f64], b: &[f64]) -> Vec<f64> {
    let cout = b.len();
    let mut out = vec![0.0; cout * h * w];
    for co in 0..cout {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = b[co];
                for ci in 0..cin {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let sy = y as isize + ky as isize - 1;
                            let sx = xx as isize + kx as isize - 1;
                            if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                continue;
                            }
                            acc += k[((co * cin + ci) * 3 + ky) * 3 + kx]
                                * x[(ci * h + sy as usize) * w + sx as usize];
                        }
                    }
                }
                out[(co * h + y) * w + xx] = acc;
            }
        }
    }
    out
}

pub fn conv1d_oracle(x: &[f64], cin: usize, l: usize, k: &[f64], b: &[f64]) -> Vec<f64> {
    let cout = b.len();
    let mut out = vec![0.0; cout * l];
    for co in 0..cout {
        for i in 0..l {
            let mut acc = b[co];
            for ci in 0..cin {
                for kx in 0..3 {
                    let s = i as isize + kx as isize - 1;
                    if s >= 0 && s < l as isize {
                        acc += k[(co * cin + ci) * 3 + kx] * x[ci * l + s as usize];
                    }
                }
            }
            out[co * l + i] = acc;
        }
    }
    out
}

pub fn maxpool2d_oracle(x: &[f64], c: usize, h: usize, w: usize, k: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for ch in 0..c {
        for oy in 0..h / k {
            for ox in 0..w / k {
                let mut m = f64::NEG_INFINITY;
                for dy in 0..k {
                    for dx in 0..k {
                        m = m.max(x[(ch * h + oy * k + dy) * w + ox * k + dx]);
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

pub fn maxpool1d_oracle(x: &[f64], c: usize, l: usize, k: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for ch in 0..c {
        for o in 0..l / k {
            out.push((0..k).map(|d| x[ch * l + o * k + d]).fold(f64::NEG_INFINITY, f64::max));
        }
    }
    out
}

pub fn dense_oracle(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..b.len())
        .map(|r| b[r] + (0..n).map(|c| w[r * n + c] * x[c]).sum::<f64>())
        .collect()
}

/// Direct O(N²) DFT.
pub fn dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let a = -std::f64::consts::TAU * (k * t % n) as f64 / n as f64;
                (re + v * a.cos(), im + v * a.sin())
            })
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6)
}

/// `(p95, max)` of a set of relative errors.
pub fn p95_max(mut errs: Vec<f64>) -> (f64, f64) {
    errs.sort_by(f64::total_cmp);
    (errs[errs.len() * 95 / 100], *errs.last().unwrap())
}

/// Central-difference check of `grad` against `f` around `x`, skipping
/// coordinates where `smooth` reports the stencil crossed a kink.
fn check_coords(
    x: &mut [f64],
    grad: &[f64],
    f: &dyn Fn(&[f64]) -> f64,
    smooth: &dyn Fn(&[f64], &[f64]) -> bool,
    errs: &mut Vec<f64>,
) {
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let up_x = x.to_vec();
        let up = f(x);
        x[i] = orig - FD_STEP;
        let down = f(x);
        let ok = smooth(&up_x, x);
        x[i] = orig;
        if ok {
            errs.push(rel_err(grad[i], (up - down) / (2.0 * FD_STEP)));
        }
    }
}

/// Relative gradient errors for every layer kernel on one random tiny shape.
/// Each layer is reduced to a scalar `Σ r·y` with random `r`.
pub fn layer_gradient_errors(rng: &mut ChaCha8Rng) -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();
    let always = |_: &[f64], _: &[f64]| true;

    // conv2d
    let (cin, cout, h, w) = (rng.random_range(1..3), rng.random_range(1..4), rng.random_range(2..6), rng.random_range(2..6));
    let mut x = rand_vec(rng, cin * h * w);
    let mut k = rand_vec(rng, cout * cin * 9);
    let mut b = rand_vec(rng, cout);
    let r = rand_vec(rng, cout * h * w);
    let dot = |y: &Tensor<f64>| y.data().iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
    let run = |x: &[f64], k: &[f64], b: &[f64]| {
        dot(&nn::conv2d_forward(&tensor(&[cin, h, w], x.to_vec()), &tensor(&[cout, cin, 3, 3], k.to_vec()), &tensor(&[cout], b.to_vec())).unwrap())
    };
    let g = nn::conv2d_backward(&tensor(&[cin, h, w], x.clone()), &tensor(&[cout, cin, 3, 3], k.clone()), &tensor(&[cout, h, w], r.clone()), true).unwrap();
    let mut e = Vec::new();
    let (k0, b0, x0) = (k.clone(), b.clone(), x.clone());
    check_coords(&mut x, g.input.as_ref().unwrap().data(), &|v| run(v, &k0, &b0), &always, &mut e);
    check_coords(&mut k, g.kernels.data(), &|v| run(&x0, v, &b0), &always, &mut e);
    check_coords(&mut b, g.bias.data(), &|v| run(&x0, &k0, v), &always, &mut e);
    out.extend(e.into_iter().map(|v| ("conv2d", v)));

    // conv1d
    let l = rng.random_range(2..10);
    let mut x = rand_vec(rng, cin * l);
    let mut k = rand_vec(rng, cout * cin * 3);
    let mut b = rand_vec(rng, cout);
    let r = rand_vec(rng, cout * l);
    let dot = |y: &Tensor<f64>| y.data().iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
    let run = |x: &[f64], k: &[f64], b: &[f64]| {
        dot(&nn::conv1d_forward(&tensor(&[cin, l], x.to_vec()), &tensor(&[cout, cin, 3], k.to_vec()), &tensor(&[cout], b.to_vec())).unwrap())
    };
    let g = nn::conv1d_backward(&tensor(&[cin, l], x.clone()), &tensor(&[cout, cin, 3], k.clone()), &tensor(&[cout, l], r.clone()), true).unwrap();
    let mut e = Vec::new();
    let (k0, b0, x0) = (k.clone(), b.clone(), x.clone());
    check_coords(&mut x, g.input.as_ref().unwrap().data(), &|v| run(v, &k0, &b0), &always, &mut e);
    check_coords(&mut k, g.kernels.data(), &|v| run(&x0, v, &b0), &always, &mut e);
    check_coords(&mut b, g.bias.data(), &|v| run(&x0, &k0, v), &always, &mut e);
    out.extend(e.into_iter().map(|v| ("conv1d", v)));

    // dense
    let (m, n) = (rng.random_range(1..5), rng.random_range(1..12));
    let mut x = rand_vec(rng, n);
    let mut wt = rand_vec(rng, m * n);
    let mut b = rand_vec(rng, m);
    let r = rand_vec(rng, m);
    let dot = |y: &Tensor<f64>| y.data().iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
    let run = |x: &[f64], wt: &[f64], b: &[f64]| {
        dot(&nn::dense_forward(&tensor(&[n], x.to_vec()), &tensor(&[m, n], wt.to_vec()), &tensor(&[m], b.to_vec())).unwrap())
    };
    let g = nn::dense_backward(&tensor(&[n], x.clone()), &tensor(&[m, n], wt.clone()), &tensor(&[m], r.clone())).unwrap();
    let mut e = Vec::new();
    let (w0, b0, x0) = (wt.clone(), b.clone(), x.clone());
    check_coords(&mut x, g.input.data(), &|v| run(v, &w0, &b0), &always, &mut e);
    check_coords(&mut wt, g.weights.data(), &|v| run(&x0, v, &b0), &always, &mut e);
    check_coords(&mut b, g.bias.data(), &|v| run(&x0, &w0, v), &always, &mut e);
    out.extend(e.into_iter().map(|v| ("dense", v)));

    // maxpool2d / maxpool1d; stencils that change the winner are skipped
    let (c, pk) = (rng.random_range(1..3), rng.random_range(1..4));
    let (h, w) = (pk * rng.random_range(1..4), pk * rng.random_range(1..4));
    let mut x = rand_vec(rng, c * h * w);
    let r = rand_vec(rng, c * (h / pk) * (w / pk));
    let pooled = nn::maxpool2d(&tensor(&[c, h, w], x.clone()), pk).unwrap();
    let gx = nn::maxpool_backward(&tensor(&[r.len()], r.clone()), &pooled.argmax, &[c, h, w]).unwrap();
    let arg = |v: &[f64]| nn::maxpool2d(&tensor(&[c, h, w], v.to_vec()), pk).unwrap().argmax;
    let f = |v: &[f64]| nn::maxpool2d(&tensor(&[c, h, w], v.to_vec()), pk).unwrap().output.data().iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
    let base = pooled.argmax.clone();
    let mut e = Vec::new();
    check_coords(&mut x, gx.data(), &f, &|u, d| arg(u) == base && arg(d) == base, &mut e);
    out.extend(e.into_iter().map(|v| ("maxpool2d", v)));

    let l = pk * rng.random_range(1..6);
    let mut x = rand_vec(rng, c * l);
    let r = rand_vec(rng, c * (l / pk));
    let pooled = nn::maxpool1d(&tensor(&[c, l], x.clone()), pk).unwrap();
    let gx = nn::maxpool_backward(&tensor(&[r.len()], r.clone()), &pooled.argmax, &[c, l]).unwrap();
    let arg = |v: &[f64]| nn::maxpool1d(&tensor(&[c, l], v.to_vec()), pk).unwrap().argmax;
    let f = |v: &[f64]| nn::maxpool1d(&tensor(&[c, l], v.to_vec()), pk).unwrap().output.data().iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
    let base = pooled.argmax.clone();
    let mut e = Vec::new();
    check_coords(&mut x, gx.data(), &f, &|u, d| arg(u) == base && arg(d) == base, &mut e);
    out.extend(e.into_iter().map(|v| ("maxpool1d", v)));

    // relu; stencils crossing zero are skipped
    let n = rng.random_range(1..20);
    let mut x = rand_vec(rng, n);
    let r = rand_vec(rng, n);
    let gx = nn::relu_backward(&tensor(&[n], x.clone()), &tensor(&[n], r.clone()));
    let f = |v: &[f64]| nn::relu(&tensor(&[n], v.to_vec())).data().iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
    let signs = |v: &[f64]| v.iter().map(|a| *a > 0.0).collect::<Vec<_>>();
    let base = signs(&x);
    let mut e = Vec::new();
    check_coords(&mut x, gx.data(), &f, &|u, d| signs(u) == base && signs(d) == base, &mut e);
    out.extend(e.into_iter().map(|v| ("relu", v)));

    // sigmoid + BCE through the logit
    let mut z = vec![rng.random_range(-4.0..4.0)];
    let t = f64::from(rng.random_range(0..2u8));
    let g = [nn::bce_logit_grad(nn::sigmoid(z[0]), t)];
    let mut e = Vec::new();
    check_coords(&mut z, &g, &|v| bce_loss(nn::sigmoid(v[0]), t), &always, &mut e);
    out.extend(e.into_iter().map(|v| ("sigmoid-bce", v)));
    out
}

pub fn tiny_arch(variant: Variant) -> Architecture {
    Architecture {
        variant,
        input_len: 8,
        image_channels: vec![2, 3],
        vector_channels: vec![2, 3],
        fusion_channels: 2,
        fusion_pool: 2,
    }
}

fn net_loss(net: &Network<f64>, image: &[f64], vector: &[f64], target: f64) -> (f64, Vec<usize>) {
    let fwd = net.forward(image, vector).unwrap();
    (bce_loss(fwd.prob, target), fwd.activation_pattern())
}

/// Relative errors of analytic against central-difference gradients for
/// every parameter of `net` whose stencil stays inside one smooth region.
pub fn network_gradient_errors(net: &mut Network<f64>, image: &[f64], vector: &[f64], target: f64) -> Vec<f64> {
    let fwd = net.forward(image, vector).unwrap();
    let pattern = fwd.activation_pattern();
    let mut grads = net.zero_grads();
    net.backward(&fwd, fwd.prob - target, &mut grads).unwrap();
    let mut errs = Vec::new();
    for (pi, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let orig = net.params()[pi].data()[i];
            net.params_mut()[pi].data_mut()[i] = orig + FD_STEP;
            let (up, p_up) = net_loss(net, image, vector, target);
            net.params_mut()[pi].data_mut()[i] = orig - FD_STEP;
            let (down, p_down) = net_loss(net, image, vector, target);
            net.params_mut()[pi].data_mut()[i] = orig;
            if p_up != pattern || p_down != pattern {
                continue;
            }
            errs.push(rel_err(g.data()[i], (up - down) / (2.0 * FD_STEP)));
        }
    }
    errs
}

/// Gradient errors over `trials` random tiny networks cycling through the
/// variants, with a zero-image ablation every fourth dual trial.
pub fn network_trials(trials: u64, seed0: u64) -> Vec<f64> {
    let mut all = Vec::new();
    for trial in 0..trials {
        let variant = Variant::ALL[trial as usize % 3];
        let mut net: Network<f64> = Network::init(tiny_arch(variant), seed0 + trial).unwrap();
        if trial % 4 == 3 && variant == Variant::Dual {
            net = net.with_input_mask(InputMask::ZeroImage);
        }
        assert!(net.param_count() <= 2000);
        let mut rng = seed::rng(seed0 + 100 + trial);
        // Zero biases put ReLU inputs exactly on the kink; move off it.
        for p in net.params_mut().iter_mut().filter(|p| p.shape().len() == 1) {
            p.data_mut().iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
        let image: Vec<f64> = (0..64).map(|_| rng.random()).collect();
        let vector: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        all.extend(network_gradient_errors(&mut net, &image, &vector, (trial % 2) as f64));
    }
    all
}

/// Worst absolute deviation of every forward kernel from its oracle over
/// `shapes` random small shapes.
pub fn kernel_oracle_deviation(shapes: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..shapes {
        let (cin, cout) = (rng.random_range(1..4), rng.random_range(1..5));
        let (h, w) = (rng.random_range(1..9), rng.random_range(1..9));
        let x = rand_vec(rng, cin * h * w);
        let k = rand_vec(rng, cout * cin * 9);
        let b = rand_vec(rng, cout);
        let y = nn::conv2d_forward(&tensor(&[cin, h, w], x.clone()), &tensor(&[cout, cin, 3, 3], k.clone()), &tensor(&[cout], b.clone())).unwrap();
        worst = worst.max(max_abs_diff(y.data(), &conv2d_oracle(&x, cin, h, w, &k, &b)));

        let l = rng.random_range(1..20);
        let x = rand_vec(rng, cin * l);
        let k = rand_vec(rng, cout * cin * 3);
        let y = nn::conv1d_forward(&tensor(&[cin, l], x.clone()), &tensor(&[cout, cin, 3], k.clone()), &tensor(&[cout], b.clone())).unwrap();
        worst = worst.max(max_abs_diff(y.data(), &conv1d_oracle(&x, cin, l, &k, &b)));

        let pk = rng.random_range(1..4);
        let (ph, pw) = (pk + rng.random_range(0..7), pk + rng.random_range(0..7));
        let x = rand_vec(rng, cout * ph * pw);
        let y = nn::maxpool2d(&tensor(&[cout, ph, pw], x.clone()), pk).unwrap();
        worst = worst.max(max_abs_diff(y.output.data(), &maxpool2d_oracle(&x, cout, ph, pw, pk)));

        let pl = pk + rng.random_range(0..12);
        let x = rand_vec(rng, cout * pl);
        let y = nn::maxpool1d(&tensor(&[cout, pl], x.clone()), pk).unwrap();
        worst = worst.max(max_abs_diff(y.output.data(), &maxpool1d_oracle(&x, cout, pl, pk)));

        let (m, n) = (rng.random_range(1..6), rng.random_range(1..30));
        let x = rand_vec(rng, n);
        let wt = rand_vec(rng, m * n);
        let b = rand_vec(rng, m);
        let y = nn::dense_forward(&tensor(&[n], x.clone()), &tensor(&[m, n], wt.clone()), &tensor(&[m], b.clone())).unwrap();
        worst = worst.max(max_abs_diff(y.data(), &dense_oracle(&x, &wt, &b)));
    }
    worst
}

/// Worst deviations found by the STFT checks.
#[derive(Debug, Default)]
pub struct StftReport {
    /// Relative Parseval error per frame.
    pub parseval: f64,
    /// Relative error of FFT bins against the direct DFT.
    pub dft: f64,
    /// Tones whose peak bin differs from the DFT's or from the tone bin.
    pub misplaced_tones: usize,
    pub tones: usize,
    /// Relative error of `S(c·x)` against `c²·S(x)`.
    pub scaling: f64,
}

pub fn stft_report(rng: &mut ChaCha8Rng) -> StftReport {
    use sd_sentinel::spectro::{hann, spectrogram, stft_frame};
    use sd_sentinel::EegTrace;

    let mut rep = StftReport::default();
    for &n in &[64usize, 300, 1200, 2048] {
        let win = hann(n);
        for _ in 0..5 {
            let x = rand_vec(rng, n);
            let f = stft_frame(&x, &win).unwrap();
            let time: f64 = x.iter().zip(&win).map(|(a, w)| (a * w).powi(2)).sum();
            let freq: f64 = f.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
            rep.parseval = rep.parseval.max((time - freq).abs() / time);

            let xw: Vec<f64> = x.iter().zip(&win).map(|(a, w)| a * w).collect();
            let oracle = dft(&xw);
            let scale = oracle.iter().map(|(r, i)| r.hypot(*i)).fold(0.0, f64::max);
            for (c, (r, i)) in f.iter().zip(&oracle) {
                rep.dft = rep.dft.max((c.re - r).hypot(c.im - i) / scale);
            }
        }
        // Tones centred on a bin.
        for _ in 0..4 {
            let bin = rng.random_range(2..n / 2 - 2);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let x: Vec<f64> = (0..n)
                .map(|t| (std::f64::consts::TAU * bin as f64 * t as f64 / n as f64 + phase).cos())
                .collect();
            let f = stft_frame(&x, &win).unwrap();
            let xw: Vec<f64> = x.iter().zip(&win).map(|(a, w)| a * w).collect();
            let oracle = dft(&xw);
            let argmax = |v: &mut dyn Iterator<Item = f64>| {
                v.take(n / 2 + 1).enumerate().fold((0, f64::MIN), |b, (i, p)| if p > b.1 { (i, p) } else { b }).0
            };
            let fast = argmax(&mut f.iter().map(|c| c.norm()));
            let slow = argmax(&mut oracle.iter().map(|(r, i)| r.hypot(*i)));
            rep.tones += 1;
            if fast != slow || fast != bin {
                rep.misplaced_tones += 1;
            }
        }
    }
    let fs = 100.0;
    let x = rand_vec(rng, (fs * 60.0 * 4.0) as usize);
    let trace = EegTrace::new(x.clone(), fs, 0.0, "t").unwrap();
    let base = spectrogram(&trace, 0.5, 1.85, 10).unwrap();
    for c in [0.01, 0.5, 3.0, 1e3] {
        let scaled = EegTrace::new(x.iter().map(|v| v * c).collect(), fs, 0.0, "t").unwrap();
        let s = spectrogram(&scaled, 0.5, 1.85, 10).unwrap();
        for (a, b) in s.as_slice().iter().zip(base.as_slice()) {
            rep.scaling = rep.scaling.max((a - c * c * b).abs() / (c * c * b).abs().max(f64::MIN_POSITIVE));
        }
    }
    rep
}

/// Normalized synthetic base trace.
pub fn normalized_base(duration_min: u32, fs: f64, seed: u64) -> sd_sentinel::EegTrace {
    let raw = sd_sentinel::eeg_io::synth_base_eeg(duration_min, fs, seed, 1.0).unwrap();
    sd_sentinel::preprocess::normalize(&raw).unwrap()
}

/// Largest deviation of an `α = β = 0` mix from the bandpassed base.
pub fn collapse_deviation(seed: u64) -> f64 {
    use sd_sentinel::preprocess::{bandpass, BandpassSpec};
    use sd_sentinel::simulate::{augment_sd, AugmentSpec, Placement, SdSource, SdTemplate};
    let base = normalized_base(60, 200.0, seed);
    let spec = AugmentSpec { alpha: 0.0, beta: 0.0, seed, placement: Placement::Peaks(vec![20.0, 41.5]), envelope_smoothing_s: 0.0 };
    let (mixed, labels) = augment_sd(&base, SdSource::Template(&SdTemplate::default()), &spec).unwrap();
    assert_eq!(labels.len(), 2);
    let expect = bandpass(&base, &BandpassSpec::default()).unwrap();
    max_abs_diff(mixed.samples(), expect.samples())
}

/// Trough RMS of the mix over trough RMS of the bandpassed base, for a
/// near-zero depth template; the analytic value is `1/(1+α)`.
pub fn trough_ratio(alpha: f64, seed: u64) -> f64 {
    use sd_sentinel::preprocess::{bandpass, BandpassSpec};
    use sd_sentinel::simulate::{augment_sd, AugmentSpec, Placement, SdSource, SdTemplate};
    let fs = 200.0;
    let base = normalized_base(60, fs, seed);
    let t = SdTemplate { onset_min: 2.0, depth: 1e-9, trough_min: 30.0, recovery_min: 2.0 };
    let peak = 30.0;
    let spec = AugmentSpec { alpha, beta: 0.0, seed, placement: Placement::Peaks(vec![peak]), envelope_smoothing_s: 0.0 };
    let (mixed, _) = augment_sd(&base, SdSource::Template(&t), &spec).unwrap();
    let reference = bandpass(&base, &BandpassSpec::default()).unwrap();
    // Trough interior, one minute clear of the ramps.
    let lo = ((peak - t.trough_min / 2.0 + 1.0) * 60.0 * fs) as usize;
    let hi = ((peak + t.trough_min / 2.0 - 1.0) * 60.0 * fs) as usize;
    let rms = |x: &[f64]| (x[lo..hi].iter().map(|v| v * v).sum::<f64>() / (hi - lo) as f64).sqrt();
    rms(mixed.samples()) / rms(reference.samples())
}

// Scoring oracles.

pub fn brute_counts(pred: &[u8], truth: &[u8]) -> [u64; 4] {
    let mut c = [0u64; 4];
    for i in 0..pred.len() {
        let k = match (pred[i] == 1, truth[i] == 1) {
            (true, true) => 0,
            (false, false) => 1,
            (true, false) => 2,
            (false, true) => 3,
        };
        c[k] += 1;
    }
    c
}

pub fn brute_sliding(v: &[u8]) -> Vec<u32> {
    (0..=v.len() - 30).map(|j| (j..j + 30).map(|i| v[i] as u32).sum()).collect()
}

/// Size of a maximum matching by exhaustive search over truth subsets.
pub fn brute_max_matching(pred: &[f64], truth: &[f64], tol: f64) -> usize {
    fn go(i: usize, used: u32, pred: &[f64], truth: &[f64], tol: f64) -> usize {
        if i == pred.len() {
            return 0;
        }
        let mut best = go(i + 1, used, pred, truth, tol);
        for (j, t) in truth.iter().enumerate() {
            if used & (1 << j) == 0 && (pred[i] - t).abs() <= tol {
                best = best.max(1 + go(i + 1, used | (1 << j), pred, truth, tol));
            }
        }
        best
    }
    go(0, 0, pred, truth, tol)
}

pub fn outcomes(values: Vec<u8>, start_min: u32) -> sd_sentinel::detector::BinaryOutcomeSeries {
    sd_sentinel::detector::BinaryOutcomeSeries {
        probabilities: values.iter().map(|&v| v as f64).collect(),
        values,
        start_min,
    }
}

/// Number of random instances where the confusion counts, rates or distance
/// differ from brute force.
pub fn metric_mismatches(instances: usize, rng: &mut ChaCha8Rng) -> usize {
    use sd_sentinel::score::{binary_metrics, euclidean};
    let mut bad = 0;
    for _ in 0..instances {
        let n = rng.random_range(0..200);
        let pred: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let truth: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let m = binary_metrics(&pred, &truth).unwrap();
        let [tp, tn, fp, fn_] = brute_counts(&pred, &truth);
        let rate = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        let ok = [m.tp, m.tn, m.fp, m.fn_] == [tp, tn, fp, fn_]
            && m.sensitivity == rate(tp, tp + fn_)
            && m.specificity == rate(tn, tn + fp)
            && m.accuracy == rate(tp + tn, n as u64);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..30.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..30.0)).collect();
        let mut acc = 0.0;
        for i in 0..n {
            acc += (u[i] - v[i]) * (u[i] - v[i]);
        }
        if !ok || euclidean(&u, &v).unwrap() != acc.sqrt() {
            bad += 1;
        }
    }
    bad
}

/// Confidence series of random outcomes that leave `[0, 30]` or differ from
/// the brute-force window sum.
pub fn confidence_mismatches(instances: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut bad = 0;
    for _ in 0..instances {
        let n = rng.random_range(30..300);
        let density = rng.random_range(0.0..1.0);
        let v: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(density))).collect();
        let start = rng.random_range(0..100);
        let c = sd_sentinel::score::confidence(&outcomes(v.clone(), start)).unwrap();
        if c.scores != brute_sliding(&v) || c.scores.iter().any(|&s| s > 30) || c.start_min != start + 15 {
            bad += 1;
        }
    }
    bad
}

/// Sum of the expected confidence profile around one isolated SD.
pub fn isolated_expected_sum(peak: f64, duration_min: usize) -> f64 {
    let labels = sd_sentinel::SdLabelSet::new(vec![peak], None).unwrap();
    sd_sentinel::score::expected_confidence(&labels, duration_min).unwrap().iter().sum()
}

/// Peak report built to carry the given counts through the real peak
/// finder and matcher.
pub fn peak_report_from_counts(tp: usize, fn_: usize, fp: usize) -> sd_sentinel::score::PeakReport {
    use sd_sentinel::score::{match_peaks, ConfidenceSeries};
    let n_truth = tp + fn_;
    let spacing = 100usize;
    let len = (n_truth + 1) * spacing;
    let mut scores = vec![0u32; len];
    let truth: Vec<f64> = (0..n_truth).map(|k| (spacing / 2 + k * spacing) as f64).collect();
    for t in truth.iter().take(tp) {
        scores[*t as usize + 3] = 25;
    }
    for k in 0..fp {
        scores[spacing + k * spacing % (n_truth * spacing)] = 20;
    }
    let conf = ConfidenceSeries { scores, start_min: 0 };
    let labels = sd_sentinel::SdLabelSet::new(truth, None).unwrap();
    match_peaks(&conf, &labels, 15.0, 15.0)
}
