use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windowing::WINDOW_MIN;

/// Which input paths the network has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Dual,
    ImageOnly,
    VectorOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Dual, Variant::ImageOnly, Variant::VectorOnly];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dual => "dual",
            Variant::ImageOnly => "image-only",
            Variant::VectorOnly => "vector-only",
        }
    }

    pub fn uses_image(self) -> bool {
        self != Variant::VectorOnly
    }

    pub fn uses_vector(self) -> bool {
        self != Variant::ImageOnly
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            Variant::Dual => 0,
            Variant::ImageOnly => 1,
            Variant::VectorOnly => 2,
        }
    }

    pub(crate) fn from_code(c: u32) -> Option<Self> {
        Some(match c {
            0 => Variant::Dual,
            1 => Variant::ImageOnly,
            2 => Variant::VectorOnly,
            _ => return None,
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model variant `{s}`")))
    }
}

/// Zero-feed ablation of a dual-path network: one input is replaced by zeros
/// while the parameters stay in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMask {
    #[default]
    None,
    ZeroImage,
    ZeroVector,
}

impl InputMask {
    pub(crate) fn code(self) -> u32 {
        match self {
            InputMask::None => 0,
            InputMask::ZeroImage => 1,
            InputMask::ZeroVector => 2,
        }
    }

    pub(crate) fn from_code(c: u32) -> Option<Self> {
        Some(match c {
            0 => InputMask::None,
            1 => InputMask::ZeroImage,
            2 => InputMask::ZeroVector,
            _ => return None,
        })
    }
}

/// Layer dimensions of the network.
///
/// Image path: `conv2d(3×3, pad 1) → ReLU → maxpool 2×2` per block.
/// Vector path: `conv1d(3, pad 1) → ReLU → maxpool 2` per block.
/// Fusion: the flattened path outputs are concatenated into a 1-channel
/// sequence, then `conv1d → ReLU → maxpool(fusion_pool) → dense → sigmoid`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub variant: Variant,
    pub input_len: usize,
    pub image_channels: Vec<usize>,
    pub vector_channels: Vec<usize>,
    pub fusion_channels: usize,
    pub fusion_pool: usize,
}

impl Architecture {
    /// Image 1→8→16→32, vector 1→8→16→32, fusion 1→4 with pool 4.
    pub fn declared(variant: Variant) -> Self {
        Self {
            variant,
            input_len: WINDOW_MIN,
            image_channels: vec![8, 16, 32],
            vector_channels: vec![8, 16, 32],
            fusion_channels: 4,
            fusion_pool: 4,
        }
    }

    fn pooled_len(&self, blocks: usize) -> usize {
        (0..blocks).fold(self.input_len, |l, _| l / 2)
    }

    pub fn image_features(&self) -> usize {
        if !self.variant.uses_image() {
            return 0;
        }
        let side = self.pooled_len(self.image_channels.len());
        self.image_channels.last().copied().unwrap_or(1) * side * side
    }

    pub fn vector_features(&self) -> usize {
        if !self.variant.uses_vector() {
            return 0;
        }
        let len = self.pooled_len(self.vector_channels.len());
        self.vector_channels.last().copied().unwrap_or(1) * len
    }

    pub fn fusion_len(&self) -> usize {
        self.image_features() + self.vector_features()
    }

    pub fn head_inputs(&self) -> usize {
        self.fusion_channels * (self.fusion_len() / self.fusion_pool)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("architecture: {m}")));
        if self.input_len == 0 {
            return bad("empty input".into());
        }
        if self.variant.uses_image() && self.image_channels.is_empty() {
            return bad("image path needs at least one block".into());
        }
        if self.variant.uses_vector() && self.vector_channels.is_empty() {
            return bad("vector path needs at least one block".into());
        }
        let chans = self.image_channels.iter().chain(&self.vector_channels);
        if chans.copied().any(|c| c == 0) || self.fusion_channels == 0 || self.fusion_pool == 0 {
            return bad("zero channel count or pool".into());
        }
        let deepest = if self.variant.uses_image() { self.image_channels.len() } else { 0 }
            .max(if self.variant.uses_vector() { self.vector_channels.len() } else { 0 });
        if self.pooled_len(deepest) == 0 {
            return bad(format!("{} pooling stages exhaust input of {}", deepest, self.input_len));
        }
        if self.fusion_len() < self.fusion_pool {
            return bad("fusion pool wider than the fused sequence".into());
        }
        Ok(())
    }

    /// Parameter tensor shapes in declaration order: image blocks, vector
    /// blocks, fusion block, dense head; weight then bias for each.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        if self.variant.uses_image() {
            let mut cin = 1;
            for &c in &self.image_channels {
                shapes.push(vec![c, cin, 3, 3]);
                shapes.push(vec![c]);
                cin = c;
            }
        }
        if self.variant.uses_vector() {
            let mut cin = 1;
            for &c in &self.vector_channels {
                shapes.push(vec![c, cin, 3]);
                shapes.push(vec![c]);
                cin = c;
            }
        }
        shapes.push(vec![self.fusion_channels, 1, 3]);
        shapes.push(vec![self.fusion_channels]);
        shapes.push(vec![1, self.head_inputs()]);
        shapes.push(vec![1]);
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum()
    }

    pub(crate) fn image_blocks(&self) -> usize {
        if self.variant.uses_image() {
            self.image_channels.len()
        } else {
            0
        }
    }

    pub(crate) fn vector_blocks(&self) -> usize {
        if self.variant.uses_vector() {
            self.vector_channels.len()
        } else {
            0
        }
    }
}
