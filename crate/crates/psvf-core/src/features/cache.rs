//! On-disk feature cache: one file per segment holding the mel matrix as
//! little-endian f32, behind a small header (`PSVFMEL1`, frames, n_mels).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{FeatureError, MelConfig, MelSpec};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"PSVFMEL1";

pub fn save_melspec<T: Scalar>(path: &Path, mel: &MelSpec<T>) -> Result<(), FeatureError> {
    let mut out = fs::File::create(path)?;
    out.write_all(MAGIC)?;
    out.write_all(&(mel.frames as u32).to_le_bytes())?;
    out.write_all(&(mel.n_mels as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(mel.data.len() * 4);
    for &v in &mel.data {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn load_melspec<T: Scalar>(path: &Path, config: &MelConfig) -> Result<MelSpec<T>, FeatureError> {
    let bytes = fs::read(path)?;
    let err = |reason: &str| FeatureError::BadCache {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    if bytes.len() < 16 || &bytes[0..8] != MAGIC {
        return Err(err("missing PSVFMEL1 magic"));
    }
    let frames = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let n_mels = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if n_mels != config.n_mels {
        return Err(err("mel bin count does not match config"));
    }
    let want = 16 + frames * n_mels * 4;
    if bytes.len() != want {
        return Err(err("truncated or oversized payload"));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| T::of_f64(f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))))
        .collect();
    Ok(MelSpec {
        frames,
        n_mels,
        data,
        config: config.clone(),
    })
}
