use serde::{Deserialize, Serialize};

use super::ModelError;

/// One TDNN block: a dilated 1-D convolution over frames, followed by ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub dilation: usize,
}

/// Network architecture. The published recipe fixes five blocks over 24 mel
/// bins, a 64-dim embedding, one sigmoid output neuron, and freezing of the
/// first two blocks; channel widths and the kernel/dilation schedule are
/// config-driven.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TdnnConfig {
    pub blocks: Vec<BlockSpec>,
    pub embed_dim: usize,
    pub frozen_blocks: usize,
}

impl Default for TdnnConfig {
    fn default() -> Self {
        Self::published_default()
    }
}

impl TdnnConfig {
    /// The full-size configuration: 5 blocks over 24 mel bins, 64-dim
    /// embedding, first two blocks frozen.
    pub fn published_default() -> Self {
        let widths = [(24, 128, 5, 1), (128, 128, 3, 2), (128, 128, 3, 3), (128, 128, 1, 1), (128, 384, 1, 1)];
        TdnnConfig {
            blocks: widths
                .iter()
                .map(|&(i, o, k, d)| BlockSpec {
                    in_channels: i,
                    out_channels: o,
                    kernel: k,
                    dilation: d,
                })
                .collect(),
            embed_dim: 64,
            frozen_blocks: 2,
        }
    }

    /// A reduced five-block network for CPU-scale training: same depth and
    /// embedding width, narrower channels.
    pub fn reduced(width: usize, final_width: usize) -> Self {
        let mut cfg = Self::published_default();
        for (i, b) in cfg.blocks.iter_mut().enumerate() {
            if i > 0 {
                b.in_channels = width;
            }
            b.out_channels = width;
        }
        cfg.blocks.last_mut().unwrap().out_channels = final_width;
        cfg
    }

    /// Structural validation for any block count (test configurations may
    /// be smaller than the published five-block network).
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.blocks.is_empty() {
            return Err(ModelError::BadConfig("no blocks".into()));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.in_channels == 0 || b.out_channels == 0 || b.kernel == 0 || b.dilation == 0 {
                return Err(ModelError::BadConfig(format!("block {} has a zero field", i + 1)));
            }
            if i > 0 && b.in_channels != self.blocks[i - 1].out_channels {
                return Err(ModelError::BadConfig(format!(
                    "block {} expects {} channels but block {} emits {}",
                    i + 1,
                    b.in_channels,
                    i,
                    self.blocks[i - 1].out_channels
                )));
            }
        }
        if self.embed_dim == 0 {
            return Err(ModelError::BadConfig("embed_dim must be positive".into()));
        }
        if self.frozen_blocks > self.blocks.len() {
            return Err(ModelError::BadConfig(format!(
                "frozen_blocks {} exceeds block count {}",
                self.frozen_blocks,
                self.blocks.len()
            )));
        }
        Ok(())
    }

    /// Additionally pins the published shape: exactly 5 blocks, 24 input
    /// mels, 64-dim embedding.
    pub fn validate_published_shape(&self) -> Result<(), ModelError> {
        self.validate()?;
        if self.blocks.len() != 5 {
            return Err(ModelError::BadConfig(format!(
                "published recipe uses 5 blocks, config has {}",
                self.blocks.len()
            )));
        }
        if self.blocks[0].in_channels != 24 {
            return Err(ModelError::BadConfig(format!(
                "first block must take 24 mel bins, config takes {}",
                self.blocks[0].in_channels
            )));
        }
        if self.embed_dim != 64 {
            return Err(ModelError::BadConfig(format!(
                "embedding must be 64-dim, config has {}",
                self.embed_dim
            )));
        }
        Ok(())
    }

    /// Frames consumed before the first pooled output exists:
    /// `1 + Σ (kernel − 1) × dilation`.
    pub fn receptive_field(&self) -> usize {
        1 + self
            .blocks
            .iter()
            .map(|b| (b.kernel - 1) * b.dilation)
            .sum::<usize>()
    }

    pub fn last_channels(&self) -> usize {
        self.blocks.last().map(|b| b.out_channels).unwrap_or(0)
    }

    /// Total trainable scalars:
    /// `Σ_blocks (out·in·k + out) + embed_dim·2·C_last + embed_dim + embed_dim + 1`.
    pub fn param_count(&self) -> usize {
        let conv: usize = self
            .blocks
            .iter()
            .map(|b| b.out_channels * b.in_channels * b.kernel + b.out_channels)
            .sum();
        let embed = self.embed_dim * 2 * self.last_channels() + self.embed_dim;
        let head = self.embed_dim + 1;
        conv + embed + head
    }
}
