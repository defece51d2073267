//! Audio features: WAV loading, segment extraction, 24-bin log-mel
//! spectrograms, and the training-time augmentation transforms
//! (speed perturbation, vocal-stem source choice).

mod augment;
mod cache;
mod mel;
mod resample;
mod wav;

pub use augment::{choose_source, rng_stream, speed_perturb, AugmentPolicy};
pub use cache::{load_melspec, save_melspec};
pub use mel::{melspectrogram, MelConfig, MelExtractor, MelSpec};
pub use resample::resample;
pub use wav::{read_wav, write_wav_f32, write_wav_i16};

use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: unsupported format: {reason}")]
    UnsupportedFormat { path: String, reason: String },

    #[error("waveform too short: {len} samples, window needs {window}")]
    TooShort { len: usize, window: usize },

    #[error("segment start {start}s is beyond audio end ({len} samples at {rate} Hz)")]
    OutOfRange { start: f64, len: usize, rate: u32 },

    #[error("segment {segment_id} has no audio reference")]
    MissingAudio { segment_id: String },

    #[error("waveform rate {got} Hz does not match config rate {want} Hz")]
    RateMismatch { got: u32, want: u32 },

    #[error("bad mel config: {0}")]
    BadConfig(String),

    #[error("{path}: bad feature cache: {reason}")]
    BadCache { path: String, reason: String },
}

/// Mono waveform with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Scalar> Waveform<T> {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Loads a PCM WAV file (16-bit int or 32-bit float, any channel count and
/// rate), averages channels to mono, and resamples to `target_rate`.
pub fn load_audio<T: Scalar>(
    path: impl AsRef<Path>,
    target_rate: u32,
) -> Result<Waveform<T>, FeatureError> {
    let (samples, rate) = read_wav(path.as_ref())?;
    let samples = resample(&samples, rate, target_rate);
    Ok(Waveform {
        samples: samples.into_iter().map(T::of_f64).collect(),
        sample_rate: target_rate,
    })
}

/// Cuts `round(duration × rate)` samples starting at `start` seconds.
/// A short tail is zero-padded (with a stderr warning); a start beyond the
/// end is an error.
pub fn extract_segment<T: Scalar>(
    w: &Waveform<T>,
    start: f64,
    duration: f64,
) -> Result<Waveform<T>, FeatureError> {
    let rate = f64::from(w.sample_rate);
    let begin = (start * rate).round() as usize;
    if start < 0.0 || begin >= w.samples.len() {
        return Err(FeatureError::OutOfRange {
            start,
            len: w.samples.len(),
            rate: w.sample_rate,
        });
    }
    let n = (duration * rate).round() as usize;
    let end = begin + n;
    let mut samples = Vec::with_capacity(n);
    if end <= w.samples.len() {
        samples.extend_from_slice(&w.samples[begin..end]);
    } else {
        eprintln!(
            "warning: segment [{start}s, +{duration}s) runs {} samples past the audio end; zero-padding",
            end - w.samples.len()
        );
        samples.extend_from_slice(&w.samples[begin..]);
        samples.resize(n, T::zero());
    }
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_exact_slice() {
        let w = Waveform {
            samples: (0..80000).map(|i| i as f64).collect::<Vec<_>>(),
            sample_rate: 16000,
        };
        let seg = extract_segment(&w, 1.0, 3.0).unwrap();
        assert_eq!(seg.samples.len(), 48000);
        assert_eq!(seg.samples[0], 16000.0);
        assert_eq!(seg.samples[47999], 63999.0);
    }

    #[test]
    fn start_beyond_end_is_out_of_range() {
        let w = Waveform {
            samples: vec![0.0f64; 16000],
            sample_rate: 16000,
        };
        assert!(matches!(
            extract_segment(&w, 2.0, 1.0),
            Err(FeatureError::OutOfRange { .. })
        ));
    }

    #[test]
    fn short_tail_zero_pads() {
        let w = Waveform {
            samples: vec![1.0f64; 16000],
            sample_rate: 16000,
        };
        let seg = extract_segment(&w, 0.5, 1.0).unwrap();
        assert_eq!(seg.samples.len(), 16000);
        assert_eq!(seg.samples[7999], 1.0);
        assert_eq!(seg.samples[8000], 0.0);
    }

    #[test]
    fn duration_reports_seconds() {
        let w = Waveform {
            samples: vec![0.0f32; 48000],
            sample_rate: 16000,
        };
        assert!((w.duration_seconds() - 3.0).abs() < 1e-12);
    }
}
