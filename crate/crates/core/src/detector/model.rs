use rand::Rng;

use super::arch::{Architecture, InputMask};
use crate::error::{Error, Result};
use crate::nn::{self, Real, Tensor};
use crate::seed;
use crate::windowing::WindowSample;

/// Network weights with their architecture. `Network<f32>` is the production
/// model; `Network<f64>` is used for gradient checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    arch: Architecture,
    mask: InputMask,
    params: Vec<Tensor<T>>,
    generation: u64,
}

/// Production checkpoint type.
pub type ModelParams = Network<f32>;

struct BlockCache<T> {
    input: Tensor<T>,
    pre: Tensor<T>,
    argmax: Vec<usize>,
}

/// Activations recorded by [`Network::forward`] for the backward pass.
pub struct Forward<T> {
    generation: u64,
    image: Vec<BlockCache<T>>,
    vector: Vec<BlockCache<T>>,
    fusion: BlockCache<T>,
    head_input: Tensor<T>,
    pub logit: T,
    pub prob: T,
}

impl<T: Real> Forward<T> {
    /// ReLU on/off states and pooling winners of every block. Two inputs
    /// with equal patterns lie in the same piecewise-smooth region.
    pub fn activation_pattern(&self) -> Vec<usize> {
        let blocks = self.image.iter().chain(&self.vector).chain(std::iter::once(&self.fusion));
        blocks
            .flat_map(|b| {
                b.pre
                    .data()
                    .iter()
                    .map(|&v| (v > T::zero()) as usize)
                    .chain(b.argmax.iter().copied())
            })
            .collect()
    }
}

impl<T: Real> Network<T> {
    /// He-uniform weights, zero biases, drawn in declaration order from `seed`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::rng(seed);
        let shapes = arch.param_shapes();
        let params = shapes
            .iter()
            .map(|shape| {
                if shape.len() == 1 {
                    return Tensor::zeros(shape);
                }
                let fan_in: usize = shape[1..].iter().product();
                let limit = (6.0 / fan_in as f64).sqrt();
                Tensor::from_fn(shape, |_| T::of_f64(rng.random_range(-limit..limit)))
            })
            .collect();
        Ok(Self {
            arch,
            mask: InputMask::None,
            params,
            generation: 0,
        })
    }

    pub fn from_params(arch: Architecture, mask: InputMask, params: Vec<Tensor<T>>) -> Result<Self> {
        arch.validate()?;
        let shapes = arch.param_shapes();
        if shapes.len() != params.len()
            || shapes.iter().zip(&params).any(|(s, p)| s.as_slice() != p.shape())
        {
            return Err(Error::ShapeMismatch(
                "parameter tensors do not match the architecture".into(),
            ));
        }
        Ok(Self {
            arch,
            mask,
            params,
            generation: 0,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_mask(&self) -> InputMask {
        self.mask
    }

    pub fn with_input_mask(mut self, mask: InputMask) -> Self {
        self.mask = mask;
        self
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    /// Mutable access invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        self.generation += 1;
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            arch: self.arch.clone(),
            mask: self.mask,
            params: self.params.iter().map(Tensor::cast).collect(),
            generation: 0,
        }
    }

    pub fn zero_grads(&self) -> Vec<Tensor<T>> {
        self.params.iter().map(|p| Tensor::zeros(p.shape())).collect()
    }

    fn masked_inputs(&self, image: &[T], vector: &[T]) -> Result<(Tensor<T>, Tensor<T>)> {
        let l = self.arch.input_len;
        if image.len() != l * l || vector.len() != l {
            return Err(Error::ShapeMismatch(format!(
                "expected {}-value image and {l}-value vector, got {} and {}",
                l * l,
                image.len(),
                vector.len()
            )));
        }
        let mut img = Tensor::new(vec![1, l, l], image.to_vec())?;
        let mut vec = Tensor::new(vec![1, l], vector.to_vec())?;
        match self.mask {
            InputMask::None => {}
            InputMask::ZeroImage => img.fill(T::zero()),
            InputMask::ZeroVector => vec.fill(T::zero()),
        }
        Ok((img, vec))
    }

    /// Forward pass over `image` (`[freq][time]`, row-major) and `vector`,
    /// recording what backward needs.
    pub fn forward(&self, image: &[T], vector: &[T]) -> Result<Forward<T>> {
        let (img, vec) = self.masked_inputs(image, vector)?;
        let mut p = 0;
        let mut image_cache = Vec::with_capacity(self.arch.image_blocks());
        let mut fused = Vec::with_capacity(self.arch.fusion_len());

        let mut x = img;
        for _ in 0..self.arch.image_blocks() {
            let pre = nn::conv2d_forward(&x, &self.params[p], &self.params[p + 1])?;
            let pooled = nn::maxpool2d(&nn::relu(&pre), 2)?;
            image_cache.push(BlockCache {
                input: x,
                pre,
                argmax: pooled.argmax,
            });
            x = pooled.output;
            p += 2;
        }
        if self.arch.variant.uses_image() {
            fused.extend_from_slice(x.data());
        }

        let mut vector_cache = Vec::with_capacity(self.arch.vector_blocks());
        let mut x = vec;
        for _ in 0..self.arch.vector_blocks() {
            let pre = nn::conv1d_forward(&x, &self.params[p], &self.params[p + 1])?;
            let pooled = nn::maxpool1d(&nn::relu(&pre), 2)?;
            vector_cache.push(BlockCache {
                input: x,
                pre,
                argmax: pooled.argmax,
            });
            x = pooled.output;
            p += 2;
        }
        if self.arch.variant.uses_vector() {
            fused.extend_from_slice(x.data());
        }

        let fusion_in = Tensor::new(vec![1, fused.len()], fused)?;
        let pre = nn::conv1d_forward(&fusion_in, &self.params[p], &self.params[p + 1])?;
        let pooled = nn::maxpool1d(&nn::relu(&pre), self.arch.fusion_pool)?;
        let head_input = pooled.output;
        let fusion = BlockCache {
            input: fusion_in,
            pre,
            argmax: pooled.argmax,
        };
        p += 2;
        let logit = nn::dense_forward(&head_input, &self.params[p], &self.params[p + 1])?.data()[0];
        Ok(Forward {
            generation: self.generation,
            image: image_cache,
            vector: vector_cache,
            fusion,
            head_input,
            logit,
            prob: nn::sigmoid(logit),
        })
    }

    /// Accumulates `d loss / d params` into `grads`, given `d loss / d logit`.
    pub fn backward(&self, cache: &Forward<T>, dlogit: T, grads: &mut [Tensor<T>]) -> Result<()> {
        if cache.generation != self.generation {
            return Err(Error::InvalidArgument(
                "stale forward cache: parameters changed since the forward pass".into(),
            ));
        }
        if grads.len() != self.params.len() {
            return Err(Error::ShapeMismatch("gradient buffer does not match parameters".into()));
        }
        let n = self.params.len();
        let head_w = n - 2;
        let fusion_w = n - 4;

        let g_logit = Tensor::new(vec![1], vec![dlogit])?;
        let dense = nn::dense_backward(&cache.head_input, &self.params[head_w], &g_logit)?;
        accumulate(&mut grads[head_w], &dense.weights);
        accumulate(&mut grads[head_w + 1], &dense.bias);

        let g = nn::maxpool_backward(&dense.input, &cache.fusion.argmax, cache.fusion.pre.shape())?;
        let g = nn::relu_backward(&cache.fusion.pre, &g);
        let conv = nn::conv1d_backward(&cache.fusion.input, &self.params[fusion_w], &g, true)?;
        accumulate(&mut grads[fusion_w], &conv.kernels);
        accumulate(&mut grads[fusion_w + 1], &conv.bias);
        let g_fused = conv.input.expect("input gradient requested");
        let (g_img, g_vec) = g_fused.data().split_at(self.arch.image_features());

        let image_params = 2 * self.arch.image_blocks();
        if self.arch.variant.uses_image() {
            backprop_path(&cache.image, g_img, &self.params[..image_params], &mut grads[..image_params], true)?;
        }
        if self.arch.variant.uses_vector() {
            let range = image_params..image_params + 2 * self.arch.vector_blocks();
            backprop_path(&cache.vector, g_vec, &self.params[range.clone()], &mut grads[range], false)?;
        }
        Ok(())
    }

    /// Probability for one window; no cache is kept.
    pub fn predict(&self, image: &[T], vector: &[T]) -> Result<T> {
        self.forward(image, vector).map(|f| f.prob)
    }

    /// Input conversion from stored `f32` windows.
    pub fn forward_sample(&self, sample: &WindowSample) -> Result<Forward<T>> {
        let image: Vec<T> = sample.image.iter().map(|&v| T::of_f64(v as f64)).collect();
        let vector: Vec<T> = sample.vector.iter().map(|&v| T::of_f64(v as f64)).collect();
        self.forward(&image, &vector)
    }

    /// BCE loss of one sample and its parameter gradient.
    pub fn loss_and_grad(&self, sample: &WindowSample) -> Result<(T, Vec<Tensor<T>>)> {
        let fwd = self.forward_sample(sample)?;
        let target = T::of_f64(sample.label as f64);
        let mut grads = self.zero_grads();
        self.backward(&fwd, nn::bce_logit_grad(fwd.prob, target), &mut grads)?;
        Ok((nn::bce_loss(fwd.prob, target), grads))
    }
}

fn accumulate<T: Real>(dst: &mut Tensor<T>, src: &Tensor<T>) {
    for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

fn backprop_path<T: Real>(
    blocks: &[BlockCache<T>],
    grad_flat: &[T],
    params: &[Tensor<T>],
    grads: &mut [Tensor<T>],
    two_d: bool,
) -> Result<()> {
    let Some(last) = blocks.last() else { return Ok(()) };
    let pooled_shape: Vec<usize> = if two_d {
        let s = last.pre.shape();
        vec![s[0], s[1] / 2, s[2] / 2]
    } else {
        let s = last.pre.shape();
        vec![s[0], s[1] / 2]
    };
    let mut g = Tensor::new(pooled_shape, grad_flat.to_vec())?;
    for (i, block) in blocks.iter().enumerate().rev() {
        let gp = nn::maxpool_backward(&g, &block.argmax, block.pre.shape())?;
        let gr = nn::relu_backward(&block.pre, &gp);
        let conv = if two_d {
            nn::conv2d_backward(&block.input, &params[2 * i], &gr, i > 0)?
        } else {
            nn::conv1d_backward(&block.input, &params[2 * i], &gr, i > 0)?
        };
        accumulate(&mut grads[2 * i], &conv.kernels);
        accumulate(&mut grads[2 * i + 1], &conv.bias);
        if let Some(gi) = conv.input {
            g = gi;
        }
    }
    Ok(())
}
