//! Forward and backward kernels. Convolutions are cross-correlations with
//! kernel size 3, stride 1 and zero padding 1, so spatial size is preserved.

use super::{Real, Tensor};
use crate::error::{Error, Result};

const K: usize = 3;

fn expect_shape(name: &str, got: &[usize], want: &[usize]) -> Result<()> {
    if got != want {
        return Err(Error::ShapeMismatch(format!("{name}: expected {want:?}, got {got:?}")));
    }
    Ok(())
}

fn rank(name: &str, t: &[usize], r: usize) -> Result<()> {
    if t.len() != r {
        return Err(Error::ShapeMismatch(format!("{name}: expected rank {r}, got {t:?}")));
    }
    Ok(())
}

/// Valid output range `[lo, hi)` along an axis of length `n` for tap offset `d`.
#[inline]
fn tap_range(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d.max(0)).max(lo as isize) as usize;
    (lo, hi)
}

/// Parameter gradients of a convolution, plus the input gradient when
/// requested.
#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

/// `[C_in,H,W] ⋆ [C_out,C_in,3,3] + [C_out] → [C_out,H,W]`.
pub fn conv2d_forward<T: Real>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    rank("conv2d input", input.shape(), 3)?;
    rank("conv2d kernels", kernels.shape(), 4)?;
    let (cin, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let cout = kernels.shape()[0];
    expect_shape("conv2d kernels", kernels.shape(), &[cout, cin, K, K])?;
    expect_shape("conv2d bias", bias.shape(), &[cout])?;

    let plane = h * w;
    let x = input.data();
    let k = kernels.data();
    let mut out = vec![T::zero(); cout * plane];
    for co in 0..cout {
        let dst_plane = &mut out[co * plane..(co + 1) * plane];
        dst_plane.iter_mut().for_each(|v| *v = bias.data()[co]);
        for ci in 0..cin {
            let src_plane = &x[ci * plane..(ci + 1) * plane];
            for ky in 0..K {
                let dy = ky as isize - 1;
                let (y0, y1) = tap_range(h, dy);
                for kx in 0..K {
                    let dx = kx as isize - 1;
                    let (x0, x1) = tap_range(w, dx);
                    let wv = k[((co * cin + ci) * K + ky) * K + kx];
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let src = &src_plane[sy * w + (x0 as isize + dx) as usize..][..x1 - x0];
                        let dst = &mut dst_plane[y * w + x0..y * w + x1];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![cout, h, w], out)
}

pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
    need_input_grad: bool,
) -> Result<ConvGrads<T>> {
    rank("conv2d input", input.shape(), 3)?;
    let (cin, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let cout = kernels.shape().first().copied().unwrap_or(0);
    expect_shape("conv2d kernels", kernels.shape(), &[cout, cin, K, K])?;
    expect_shape("conv2d grad", grad_out.shape(), &[cout, h, w])?;

    let plane = h * w;
    let x = input.data();
    let k = kernels.data();
    let g = grad_out.data();
    let mut gk = vec![T::zero(); kernels.len()];
    let mut gb = vec![T::zero(); cout];
    let mut gx = need_input_grad.then(|| vec![T::zero(); input.len()]);
    for co in 0..cout {
        let g_plane = &g[co * plane..(co + 1) * plane];
        gb[co] = g_plane.iter().copied().sum();
        for ci in 0..cin {
            let x_plane = &x[ci * plane..(ci + 1) * plane];
            for ky in 0..K {
                let dy = ky as isize - 1;
                let (y0, y1) = tap_range(h, dy);
                for kx in 0..K {
                    let dx = kx as isize - 1;
                    let (x0, x1) = tap_range(w, dx);
                    let idx = ((co * cin + ci) * K + ky) * K + kx;
                    let wv = k[idx];
                    let mut acc = T::zero();
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let s0 = sy * w + (x0 as isize + dx) as usize;
                        let gr = &g_plane[y * w + x0..y * w + x1];
                        let xr = &x_plane[s0..s0 + (x1 - x0)];
                        for (&gv, &xv) in gr.iter().zip(xr) {
                            acc += gv * xv;
                        }
                        if let Some(gx) = gx.as_mut() {
                            let dst = &mut gx[ci * plane + s0..ci * plane + s0 + (x1 - x0)];
                            for (d, &gv) in dst.iter_mut().zip(gr) {
                                *d += wv * gv;
                            }
                        }
                    }
                    gk[idx] = acc;
                }
            }
        }
    }
    Ok(ConvGrads {
        input: gx.map(|d| Tensor::new(input.shape().to_vec(), d)).transpose()?,
        kernels: Tensor::new(kernels.shape().to_vec(), gk)?,
        bias: Tensor::new(vec![cout], gb)?,
    })
}

/// `[C_in,L] ⋆ [C_out,C_in,3] + [C_out] → [C_out,L]`.
pub fn conv1d_forward<T: Real>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    rank("conv1d input", input.shape(), 2)?;
    rank("conv1d kernels", kernels.shape(), 3)?;
    let (cin, l) = (input.shape()[0], input.shape()[1]);
    let cout = kernels.shape()[0];
    expect_shape("conv1d kernels", kernels.shape(), &[cout, cin, K])?;
    expect_shape("conv1d bias", bias.shape(), &[cout])?;

    let x = input.data();
    let k = kernels.data();
    let mut out = vec![T::zero(); cout * l];
    for co in 0..cout {
        let dst_row = &mut out[co * l..(co + 1) * l];
        dst_row.iter_mut().for_each(|v| *v = bias.data()[co]);
        for ci in 0..cin {
            let src_row = &x[ci * l..(ci + 1) * l];
            for kx in 0..K {
                let dx = kx as isize - 1;
                let (x0, x1) = tap_range(l, dx);
                let wv = k[(co * cin + ci) * K + kx];
                let src = &src_row[(x0 as isize + dx) as usize..][..x1 - x0];
                for (d, &s) in dst_row[x0..x1].iter_mut().zip(src) {
                    *d += wv * s;
                }
            }
        }
    }
    Tensor::new(vec![cout, l], out)
}

pub fn conv1d_backward<T: Real>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
    need_input_grad: bool,
) -> Result<ConvGrads<T>> {
    rank("conv1d input", input.shape(), 2)?;
    let (cin, l) = (input.shape()[0], input.shape()[1]);
    let cout = kernels.shape().first().copied().unwrap_or(0);
    expect_shape("conv1d kernels", kernels.shape(), &[cout, cin, K])?;
    expect_shape("conv1d grad", grad_out.shape(), &[cout, l])?;

    let x = input.data();
    let k = kernels.data();
    let g = grad_out.data();
    let mut gk = vec![T::zero(); kernels.len()];
    let mut gb = vec![T::zero(); cout];
    let mut gx = need_input_grad.then(|| vec![T::zero(); input.len()]);
    for co in 0..cout {
        let g_row = &g[co * l..(co + 1) * l];
        gb[co] = g_row.iter().copied().sum();
        for ci in 0..cin {
            let x_row = &x[ci * l..(ci + 1) * l];
            for kx in 0..K {
                let dx = kx as isize - 1;
                let (x0, x1) = tap_range(l, dx);
                let idx = (co * cin + ci) * K + kx;
                let s0 = (x0 as isize + dx) as usize;
                let gr = &g_row[x0..x1];
                gk[idx] = gr
                    .iter()
                    .zip(&x_row[s0..s0 + (x1 - x0)])
                    .map(|(&a, &b)| a * b)
                    .sum();
                if let Some(gx) = gx.as_mut() {
                    let wv = k[idx];
                    for (d, &gv) in gx[ci * l + s0..ci * l + s0 + (x1 - x0)].iter_mut().zip(gr) {
                        *d += wv * gv;
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: gx.map(|d| Tensor::new(input.shape().to_vec(), d)).transpose()?,
        kernels: Tensor::new(kernels.shape().to_vec(), gk)?,
        bias: Tensor::new(vec![cout], gb)?,
    })
}

/// Pooled output with the flat input index of each selected maximum.
#[derive(Debug, Clone)]
pub struct Pooled<T> {
    pub output: Tensor<T>,
    pub argmax: Vec<usize>,
}

/// Non-overlapping `k×k` max pooling over `[C,H,W]`; trailing rows/columns
/// that do not fill a window are dropped. Ties keep the first element.
pub fn maxpool2d<T: Real>(input: &Tensor<T>, k: usize) -> Result<Pooled<T>> {
    rank("maxpool2d input", input.shape(), 3)?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if k == 0 || h < k || w < k {
        return Err(Error::ShapeMismatch(format!("pool {k} over {h}x{w}")));
    }
    let (oh, ow) = (h / k, w / k);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = ch * h * w + oy * k * w + ox * k;
                for dy in 0..k {
                    for dx in 0..k {
                        let i = ch * h * w + (oy * k + dy) * w + ox * k + dx;
                        if x[i] > x[best] {
                            best = i;
                        }
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    Ok(Pooled {
        output: Tensor::new(vec![c, oh, ow], out)?,
        argmax: arg,
    })
}

/// Non-overlapping width-`k` max pooling over `[C,L]`.
pub fn maxpool1d<T: Real>(input: &Tensor<T>, k: usize) -> Result<Pooled<T>> {
    rank("maxpool1d input", input.shape(), 2)?;
    let (c, l) = (input.shape()[0], input.shape()[1]);
    if k == 0 || l < k {
        return Err(Error::ShapeMismatch(format!("pool {k} over length {l}")));
    }
    let ol = l / k;
    let x = input.data();
    let mut out = Vec::with_capacity(c * ol);
    let mut arg = Vec::with_capacity(c * ol);
    for ch in 0..c {
        for o in 0..ol {
            let mut best = ch * l + o * k;
            for i in best + 1..best + k {
                if x[i] > x[best] {
                    best = i;
                }
            }
            out.push(x[best]);
            arg.push(best);
        }
    }
    Ok(Pooled {
        output: Tensor::new(vec![c, ol], out)?,
        argmax: arg,
    })
}

/// Routes each output gradient to the input position that won the pool.
pub fn maxpool_backward<T: Real>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if grad_out.len() != argmax.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} pooled grads for {} argmax entries",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut gx = Tensor::zeros(input_shape);
    let n = gx.len();
    let d = gx.data_mut();
    for (&g, &i) in grad_out.data().iter().zip(argmax) {
        if i >= n {
            return Err(Error::ShapeMismatch(format!("argmax {i} outside input of {n}")));
        }
        d[i] += g;
    }
    Ok(gx)
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    Tensor::from_fn(x.shape(), |i| x.data()[i].max(T::zero()))
}

/// Gradient through ReLU; `pre` is the pre-activation.
pub fn relu_backward<T: Real>(pre: &Tensor<T>, grad: &Tensor<T>) -> Tensor<T> {
    Tensor::from_fn(pre.shape(), |i| {
        if pre.data()[i] > T::zero() {
            grad.data()[i]
        } else {
            T::zero()
        }
    })
}

/// Logistic function without overflow for large `|x|`.
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// `W x + b` with `W: [m, n]`; `input` is flattened.
pub fn dense_forward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    rank("dense weights", weights.shape(), 2)?;
    let (m, n) = (weights.shape()[0], weights.shape()[1]);
    if input.len() != n {
        return Err(Error::ShapeMismatch(format!("dense: {n} inputs expected, got {}", input.len())));
    }
    expect_shape("dense bias", bias.shape(), &[m])?;
    let w = weights.data();
    let x = input.data();
    let out = (0..m)
        .map(|r| {
            let mut acc = bias.data()[r];
            for (&a, &b) in w[r * n..(r + 1) * n].iter().zip(x) {
                acc += a * b;
            }
            acc
        })
        .collect();
    Tensor::new(vec![m], out)
}

pub fn dense_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    rank("dense weights", weights.shape(), 2)?;
    let (m, n) = (weights.shape()[0], weights.shape()[1]);
    if input.len() != n || grad_out.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "dense backward: input {} grad {} for weights {m}x{n}",
            input.len(),
            grad_out.len()
        )));
    }
    let w = weights.data();
    let x = input.data();
    let g = grad_out.data();
    let mut gw = vec![T::zero(); m * n];
    let mut gx = vec![T::zero(); n];
    for r in 0..m {
        for c in 0..n {
            gw[r * n + c] = g[r] * x[c];
            gx[c] += w[r * n + c] * g[r];
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(input.shape().to_vec(), gx)?,
        weights: Tensor::new(vec![m, n], gw)?,
        bias: Tensor::new(vec![m], g.to_vec())?,
    })
}
