use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TdnnConfig;
use super::tensor::Tensor;
use super::ModelError;
use crate::scalar::Scalar;

/// Named parameter tensors in canonical order (block1..N weight/bias, then
/// embed, then head) with a per-tensor freeze flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    frozen: Vec<bool>,
}

impl<T: Scalar> Parameters<T> {
    /// Expected (name, shape) directory for a config.
    pub fn shape_directory(cfg: &TdnnConfig) -> Vec<(String, Vec<usize>)> {
        let mut dir = Vec::new();
        for (i, b) in cfg.blocks.iter().enumerate() {
            dir.push((
                format!("block{}.weight", i + 1),
                vec![b.out_channels, b.in_channels, b.kernel],
            ));
            dir.push((format!("block{}.bias", i + 1), vec![b.out_channels]));
        }
        dir.push((
            "embed.weight".to_string(),
            vec![cfg.embed_dim, 2 * cfg.last_channels()],
        ));
        dir.push(("embed.bias".to_string(), vec![cfg.embed_dim]));
        dir.push(("head.weight".to_string(), vec![cfg.embed_dim]));
        dir.push(("head.bias".to_string(), vec![1]));
        dir
    }

    /// He-uniform initialization for weights (`±sqrt(6 / fan_in)`), zero
    /// biases. Draws are made in f64 so every precision sees the same
    /// numbers. The config's `frozen_blocks` are marked frozen.
    pub fn init(cfg: &TdnnConfig, seed: u64) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape) in Self::shape_directory(cfg) {
            let fan_in = match shape.len() {
                3 => shape[1] * shape[2],          // conv weight: in × kernel
                2 => shape[1],                     // linear weight
                1 if name.ends_with("weight") => shape[0], // head vector
                _ => 0,
            };
            let mut t = Tensor::<T>::zeros(&shape);
            if fan_in > 0 {
                let limit = (6.0 / fan_in as f64).sqrt();
                for v in &mut t.data {
                    *v = T::of_f64(rng.gen_range(-limit..limit));
                }
            }
            names.push(name);
            tensors.push(t);
        }
        let frozen = vec![false; names.len()];
        let mut params = Parameters {
            names,
            tensors,
            frozen,
        };
        apply_freeze(&mut params, cfg.frozen_blocks);
        Ok(params)
    }

    /// Zero tensors with the same directory (gradient accumulators).
    pub fn zeros_like(&self) -> Self {
        Parameters {
            names: self.names.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(&t.shape))
                .collect(),
            frozen: self.frozen.clone(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Parameters<U> {
        Parameters {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            frozen: self.frozen.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn tensor(&self, idx: usize) -> &Tensor<T> {
        &self.tensors[idx]
    }

    pub fn tensor_mut(&mut self, idx: usize) -> &mut Tensor<T> {
        &mut self.tensors[idx]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor<T>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn is_frozen(&self, idx: usize) -> bool {
        self.frozen[idx]
    }

    pub fn set_frozen(&mut self, idx: usize, frozen: bool) {
        self.frozen[idx] = frozen;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>, bool)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .zip(&self.frozen)
            .map(|((n, t), &f)| (n.as_str(), t, f))
    }

    /// Construct from raw parts (checkpoint loading); validates against the
    /// config's directory.
    pub fn from_parts(
        cfg: &TdnnConfig,
        names: Vec<String>,
        tensors: Vec<Tensor<T>>,
    ) -> Result<Self, ModelError> {
        let dir = Self::shape_directory(cfg);
        if names.len() != dir.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "expected {} tensors, got {}",
                dir.len(),
                names.len()
            )));
        }
        for ((name, tensor), (want_name, want_shape)) in names.iter().zip(&tensors).zip(&dir) {
            if name != want_name || &tensor.shape != want_shape {
                return Err(ModelError::ShapeMismatch(format!(
                    "tensor {name} {:?} does not match expected {want_name} {want_shape:?}",
                    tensor.shape
                )));
            }
        }
        let frozen = vec![false; names.len()];
        let mut params = Parameters {
            names,
            tensors,
            frozen,
        };
        apply_freeze(&mut params, cfg.frozen_blocks);
        Ok(params)
    }

    pub fn total_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// `self += scale × other`, tensor by tensor (gradient accumulation).
    pub fn add_scaled(&mut self, other: &Parameters<T>, scale: T) {
        debug_assert_eq!(self.len(), other.len());
        for idx in 0..self.tensors.len() {
            let src = &other.tensors[idx].data;
            for (slot, &v) in self.tensors[idx].data.iter_mut().zip(src) {
                *slot += scale * v;
            }
        }
    }
}

/// Marks blocks `1..=frozen_blocks` as frozen; everything else trainable.
/// The optimizer must leave frozen tensors bit-identical.
pub fn apply_freeze<T: Scalar>(params: &mut Parameters<T>, frozen_blocks: usize) {
    for idx in 0..params.len() {
        let name = params.name(idx).to_string();
        let frozen = name
            .strip_prefix("block")
            .and_then(|rest| rest.split('.').next())
            .and_then(|n| n.parse::<usize>().ok())
            .map(|block| block <= frozen_blocks)
            .unwrap_or(false);
        params.set_frozen(idx, frozen);
    }
}
