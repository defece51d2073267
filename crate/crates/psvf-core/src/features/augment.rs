//! Training-time augmentations: resampling-based speed change and the
//! stem-versus-mix source draw. Randomness flows through per-task streams
//! derived from (seed, tag) so parallel featurization cannot reorder draws.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::resample::sinc_interpolate;
use super::{FeatureError, Waveform};
use crate::dataset::SegmentMeta;
use crate::scalar::Scalar;

/// Augmentation policy for training samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentPolicy {
    /// Speed factors drawn uniformly; 1.0 means unchanged.
    pub speed_factors: Vec<f64>,
    /// Probability of using the pre-separated vocal stem when present.
    pub stem_probability: f64,
    pub rng_seed: u64,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            speed_factors: vec![0.9, 1.0, 1.1],
            stem_probability: 0.5,
            rng_seed: 0,
        }
    }
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.speed_factors.is_empty()
            || self.speed_factors.iter().any(|&f| !f.is_finite() || f <= 0.0)
        {
            return Err(FeatureError::BadConfig(
                "speed factors must be positive and non-empty".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.stem_probability) {
            return Err(FeatureError::BadConfig(
                "stem probability must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Uniform draw from the factor set.
    pub fn draw_factor(&self, rng: &mut impl Rng) -> f64 {
        self.speed_factors[rng.gen_range(0..self.speed_factors.len())]
    }
}

/// Deterministic per-task RNG stream for (seed, tag); the tag is typically
/// a segment id, optionally suffixed with an epoch.
pub fn rng_stream(seed: u64, tag: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in tag.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&h.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Resampling-based speed change: duration and pitch both scale by
/// `factor`. Output length is `round(len / factor)`; the nominal sample
/// rate is unchanged. A factor of exactly 1.0 is the identity.
pub fn speed_perturb<T: Scalar>(w: &Waveform<T>, factor: f64) -> Waveform<T> {
    assert!(factor > 0.0, "speed factor must be positive");
    if factor == 1.0 {
        return w.clone();
    }
    let input: Vec<f64> = w.samples.iter().map(|&v| v.as_f64()).collect();
    let out_len = (input.len() as f64 / factor).round() as usize;
    let cutoff = (1.0 / factor).min(1.0) * 0.95;
    let out = sinc_interpolate(&input, out_len, factor, cutoff);
    Waveform {
        samples: out.into_iter().map(T::of_f64).collect(),
        sample_rate: w.sample_rate,
    }
}

/// Picks the audio source for a training segment: the vocal stem with
/// probability `stem_probability` when one exists, otherwise the mix.
pub fn choose_source<'a>(
    seg: &'a SegmentMeta,
    policy: &AugmentPolicy,
    rng: &mut impl Rng,
) -> Result<&'a str, FeatureError> {
    let audio = seg.audio_ref.as_deref().ok_or_else(|| FeatureError::MissingAudio {
        segment_id: seg.segment_id.clone(),
    })?;
    match seg.stem_ref.as_deref() {
        Some(stem) if rng.gen::<f64>() < policy.stem_probability => Ok(stem),
        _ => Ok(audio),
    }
}
