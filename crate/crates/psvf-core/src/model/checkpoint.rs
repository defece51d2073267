//! Checkpoint format: magic `PSVFCKPT`, version u32, length-prefixed JSON
//! header (config, tensor directory, training metadata), then raw
//! little-endian f32 tensor data in directory order. Round-trips bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TdnnConfig;
use super::params::Parameters;
use super::tensor::Tensor;
use super::ModelError;

const MAGIC: &[u8; 8] = b"PSVFCKPT";
const VERSION: u32 = 1;

/// Training provenance embedded in every checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TrainMeta {
    pub seed: u64,
    pub epoch: usize,
    pub fold: usize,
}

/// A trained (or initialized) model: config + f32 parameters + metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TdnnConfig,
    pub params: Parameters<f32>,
    pub meta: TrainMeta,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset into the data section, in f32 slots.
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: TdnnConfig,
    tensors: Vec<TensorEntry>,
    meta: TrainMeta,
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let mut entries = Vec::new();
    let mut offset = 0usize;
    for (name, tensor, _) in ckpt.params.iter() {
        entries.push(TensorEntry {
            name: name.to_string(),
            shape: tensor.shape.clone(),
            offset,
            len: tensor.numel(),
        });
        offset += tensor.numel();
    }
    let header = serde_json::to_vec(&Header {
        config: ckpt.config.clone(),
        tensors: entries,
        meta: ckpt.meta.clone(),
    })?;

    let mut out = fs::File::create(path)?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(offset * 4);
    for (_, tensor, _) in ckpt.params.iter() {
        for &v in &tensor.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, ModelError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let bad = |reason: &str| ModelError::BadCheckpoint {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    if bytes.len() < 20 || &bytes[0..8] != MAGIC {
        return Err(bad("missing PSVFCKPT magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(ModelError::VersionMismatch {
            got: version,
            want: VERSION,
        });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let data_start = 20 + header_len;
    if bytes.len() < data_start {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[20..data_start])?;
    header.config.validate()?;

    let total: usize = header.tensors.iter().map(|t| t.len).sum();
    if bytes.len() != data_start + total * 4 {
        return Err(bad("tensor data size does not match directory"));
    }
    let mut names = Vec::with_capacity(header.tensors.len());
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in &header.tensors {
        if entry.len != entry.shape.iter().product::<usize>() {
            return Err(bad("tensor length inconsistent with shape"));
        }
        let start = data_start + entry.offset * 4;
        let end = start + entry.len * 4;
        if end > bytes.len() {
            return Err(bad("tensor data out of bounds"));
        }
        let data: Vec<f32> = bytes[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        names.push(entry.name.clone());
        tensors.push(Tensor {
            shape: entry.shape.clone(),
            data,
        });
    }
    // Validates names and shapes against the embedded config.
    let params = Parameters::from_parts(&header.config, names, tensors)?;
    Ok(Checkpoint {
        config: header.config,
        params,
        meta: header.meta,
    })
}
