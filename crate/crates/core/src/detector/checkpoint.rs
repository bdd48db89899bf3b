//! Checkpoint file: `SDDM`, u32 version, u32 descriptor word count, the
//! descriptor words, then every parameter as little-endian `f32` in
//! declaration order. All integers are little-endian.
//!
//! Descriptor: variant, input mask, input length, layer count, then per layer
//! `kind, out_channels, in_channels, kernel, pool` with kinds 1 = image
//! conv2d, 2 = vector conv1d, 3 = fusion conv1d, 4 = dense.

use std::fs;
use std::path::Path;

use super::arch::{Architecture, InputMask, Variant};
use super::model::ModelParams;
use crate::error::{Error, Result};
use crate::nn::Tensor;

const MAGIC: &[u8; 4] = b"SDDM";
pub const CHECKPOINT_VERSION: u32 = 1;

const KIND_IMAGE: u32 = 1;
const KIND_VECTOR: u32 = 2;
const KIND_FUSION: u32 = 3;
const KIND_DENSE: u32 = 4;

fn descriptor(model: &ModelParams) -> Vec<u32> {
    let arch = model.architecture();
    let mut layers = Vec::new();
    let mut cin = 1;
    for &c in &arch.image_channels[..arch.image_blocks()] {
        layers.push([KIND_IMAGE, c as u32, cin, 3, 2]);
        cin = c as u32;
    }
    cin = 1;
    for &c in &arch.vector_channels[..arch.vector_blocks()] {
        layers.push([KIND_VECTOR, c as u32, cin, 3, 2]);
        cin = c as u32;
    }
    layers.push([KIND_FUSION, arch.fusion_channels as u32, 1, 3, arch.fusion_pool as u32]);
    layers.push([KIND_DENSE, 1, arch.head_inputs() as u32, 1, 1]);

    let mut words = vec![
        arch.variant.code(),
        model.input_mask().code(),
        arch.input_len as u32,
        layers.len() as u32,
    ];
    words.extend(layers.into_iter().flatten());
    words
}

pub fn encode_checkpoint(model: &ModelParams) -> Vec<u8> {
    let words = descriptor(model);
    let mut out = Vec::with_capacity(12 + 4 * words.len() + 4 * model.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(words.len() as u32).to_le_bytes());
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for p in model.params() {
        for v in p.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl Reader<'_> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Checkpoint {
            offset: self.offset as u64,
            message: message.into(),
        })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.offset < n {
            return self.fail(format!(
                "truncated while reading {what}: need {n} bytes, {} left",
                self.bytes.len() - self.offset
            ));
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { bytes, offset: 0 };
    if r.take(4, "magic")? != MAGIC {
        r.offset = 0;
        return r.fail("not a model checkpoint (bad magic)");
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        r.offset -= 4;
        return r.fail(format!("unsupported checkpoint version {version}"));
    }
    let n_words = r.u32("descriptor length")? as usize;
    if n_words < 4 {
        return r.fail(format!("descriptor of {n_words} words is too short"));
    }
    let mut words = Vec::with_capacity(n_words.min(1024));
    for _ in 0..n_words {
        words.push(r.u32("descriptor")?);
    }
    let desc_end = r.offset;
    let bad = |m: String| Err(Error::Checkpoint { offset: desc_end as u64, message: m });

    let Some(variant) = Variant::from_code(words[0]) else {
        return bad(format!("unknown variant code {}", words[0]));
    };
    let Some(mask) = InputMask::from_code(words[1]) else {
        return bad(format!("unknown input mask code {}", words[1]));
    };
    let n_layers = words[3] as usize;
    if words.len() != 4 + 5 * n_layers {
        return bad(format!("{} descriptor words for {n_layers} layers", words.len()));
    }
    let mut arch = Architecture {
        variant,
        input_len: words[2] as usize,
        image_channels: Vec::new(),
        vector_channels: Vec::new(),
        fusion_channels: 0,
        fusion_pool: 0,
    };
    for layer in words[4..].chunks(5) {
        match layer[0] {
            KIND_IMAGE => arch.image_channels.push(layer[1] as usize),
            KIND_VECTOR => arch.vector_channels.push(layer[1] as usize),
            KIND_FUSION => {
                arch.fusion_channels = layer[1] as usize;
                arch.fusion_pool = layer[4] as usize;
            }
            KIND_DENSE => {}
            k => return bad(format!("unknown layer kind {k}")),
        }
    }
    if let Err(e) = arch.validate() {
        return bad(e.to_string());
    }
    // Re-encode from the rebuilt architecture and compare, which checks the
    // in-channel chain, kernels, pools and head width in one go.
    let shapes = arch.param_shapes();
    let probe = ModelParams::from_params(
        arch.clone(),
        mask,
        shapes.iter().map(|s| Tensor::zeros(s)).collect(),
    )?;
    if descriptor(&probe) != words {
        return bad("inconsistent layer dimensions".into());
    }

    let mut params = Vec::with_capacity(shapes.len());
    for shape in &shapes {
        let n: usize = shape.iter().product();
        let raw = r.take(4 * n, "parameters")?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        params.push(Tensor::new(shape.clone(), data)?);
    }
    if r.offset != bytes.len() {
        return r.fail(format!("{} trailing bytes", bytes.len() - r.offset));
    }
    ModelParams::from_params(arch, mask, params)
}

pub fn save_checkpoint(model: &ModelParams, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
