//! Log-mel spectrogram extraction: 25 ms Hann frames, 10 ms hop, 512-point
//! FFT, 24 triangular filters on the HTK mel scale between 20 and 7600 Hz,
//! natural-log compression, optional per-segment mean normalization.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{FeatureError, Waveform};
use crate::scalar::Scalar;

/// Frontend configuration. Only the filter count is pinned by the model
/// contract (24 mel bins); the rest follows the conventional x-vector
/// frontend and stays config-exposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MelConfig {
    pub sample_rate: u32,
    /// Analysis window in samples (25 ms at 16 kHz).
    pub window: usize,
    /// Hop in samples (10 ms at 16 kHz).
    pub hop: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    /// Power floor before the log.
    pub log_floor: f64,
    /// Per-segment mean subtraction per mel bin.
    pub cmvn: bool,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            sample_rate: 16000,
            window: 400,
            hop: 160,
            fft_size: 512,
            n_mels: 24,
            f_min: 20.0,
            f_max: 7600.0,
            log_floor: 1e-10,
            cmvn: true,
        }
    }
}

impl MelConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.n_mels != 24 {
            return Err(FeatureError::BadConfig(format!(
                "n_mels is fixed at 24, got {}",
                self.n_mels
            )));
        }
        if self.window == 0 || self.hop == 0 || self.fft_size == 0 {
            return Err(FeatureError::BadConfig("zero-sized framing".into()));
        }
        if self.window > self.fft_size {
            return Err(FeatureError::BadConfig(format!(
                "window {} exceeds fft_size {}",
                self.window, self.fft_size
            )));
        }
        if self.f_max > f64::from(self.sample_rate) / 2.0 {
            return Err(FeatureError::BadConfig(format!(
                "f_max {} beyond Nyquist {}",
                self.f_max,
                self.sample_rate / 2
            )));
        }
        if self.f_min >= self.f_max || self.f_min < 0.0 {
            return Err(FeatureError::BadConfig("need 0 <= f_min < f_max".into()));
        }
        Ok(())
    }

    /// Frames produced for an `n`-sample input: `1 + (n - window) / hop`.
    pub fn frame_count(&self, n_samples: usize) -> Option<usize> {
        (n_samples >= self.window).then(|| 1 + (n_samples - self.window) / self.hop)
    }
}

/// Frames × mel-bins matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpec<T> {
    pub frames: usize,
    pub n_mels: usize,
    pub data: Vec<T>,
    pub config: MelConfig,
}

impl<T: Scalar> MelSpec<T> {
    pub fn frame(&self, i: usize) -> &[T] {
        &self.data[i * self.n_mels..(i + 1) * self.n_mels]
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filterbank rows over FFT bin center frequencies,
/// area-normalized so each row sums to 1.
fn filterbank(cfg: &MelConfig) -> Vec<Vec<(usize, f64)>> {
    let n_bins = cfg.fft_size / 2 + 1;
    let bin_hz = f64::from(cfg.sample_rate) / cfg.fft_size as f64;
    let lo = hz_to_mel(cfg.f_min);
    let hi = hz_to_mel(cfg.f_max);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let mut rows = Vec::with_capacity(cfg.n_mels);
    for m in 0..cfg.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for k in 0..n_bins {
            let f = k as f64 * bin_hz;
            let w = if f <= center {
                (f - left) / (center - left)
            } else {
                (right - f) / (right - center)
            };
            if w > 0.0 {
                row.push((k, w));
            }
        }
        let total: f64 = row.iter().map(|&(_, w)| w).sum();
        assert!(total > 0.0, "empty mel filter {m}; fft resolution too coarse");
        for entry in &mut row {
            entry.1 /= total;
        }
        rows.push(row);
    }
    rows
}

/// Reusable extractor: precomputed window, filterbank, and FFT plan.
pub struct MelExtractor<T: Scalar + FftNum> {
    config: MelConfig,
    hann: Vec<f64>,
    filters: Vec<Vec<(usize, f64)>>,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Scalar + FftNum> MelExtractor<T> {
    pub fn new(config: MelConfig) -> Result<Self, FeatureError> {
        config.validate()?;
        let hann: Vec<f64> = (0..config.window)
            .map(|n| {
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / config.window as f64).cos()
            })
            .collect();
        let filters = filterbank(&config);
        let fft = FftPlanner::<T>::new().plan_fft_forward(config.fft_size);
        Ok(MelExtractor {
            config,
            hann,
            filters,
            fft,
        })
    }

    pub fn config(&self) -> &MelConfig {
        &self.config
    }

    pub fn compute(&self, w: &Waveform<T>) -> Result<MelSpec<T>, FeatureError> {
        let cfg = &self.config;
        if w.sample_rate != cfg.sample_rate {
            return Err(FeatureError::RateMismatch {
                got: w.sample_rate,
                want: cfg.sample_rate,
            });
        }
        let frames = cfg.frame_count(w.samples.len()).ok_or(FeatureError::TooShort {
            len: w.samples.len(),
            window: cfg.window,
        })?;
        let n_bins = cfg.fft_size / 2 + 1;
        let mut data = vec![T::zero(); frames * cfg.n_mels];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); cfg.fft_size];
        let mut power = vec![0.0f64; n_bins];
        for frame in 0..frames {
            let start = frame * cfg.hop;
            for slot in buf.iter_mut() {
                *slot = Complex::new(T::zero(), T::zero());
            }
            for (n, window) in self.hann.iter().enumerate() {
                let v = w.samples[start + n].as_f64() * window;
                buf[n] = Complex::new(T::of_f64(v), T::zero());
            }
            self.fft.process(&mut buf);
            for (k, p) in power.iter_mut().enumerate() {
                let c = buf[k];
                let (re, im) = (c.re.as_f64(), c.im.as_f64());
                *p = re * re + im * im;
            }
            let out = &mut data[frame * cfg.n_mels..(frame + 1) * cfg.n_mels];
            for (m, row) in self.filters.iter().enumerate() {
                let energy: f64 = row.iter().map(|&(k, w)| power[k] * w).sum();
                out[m] = T::of_f64(energy.max(cfg.log_floor).ln());
            }
        }
        if cfg.cmvn {
            for m in 0..cfg.n_mels {
                let mut mean = 0.0f64;
                for frame in 0..frames {
                    mean += data[frame * cfg.n_mels + m].as_f64();
                }
                mean /= frames as f64;
                let mean = T::of_f64(mean);
                for frame in 0..frames {
                    data[frame * cfg.n_mels + m] -= mean;
                }
            }
        }
        Ok(MelSpec {
            frames,
            n_mels: cfg.n_mels,
            data,
            config: cfg.clone(),
        })
    }

    /// Center frequency brackets (left, right) of each filter, for tests
    /// that locate a tone's expected bin.
    pub fn filter_ranges(&self) -> Vec<(f64, f64)> {
        let lo = hz_to_mel(self.config.f_min);
        let hi = hz_to_mel(self.config.f_max);
        let edge = |i: usize| mel_to_hz(lo + (hi - lo) * i as f64 / (self.config.n_mels + 1) as f64);
        (0..self.config.n_mels).map(|m| (edge(m), edge(m + 2))).collect()
    }
}

/// One-shot extraction; builds the extractor internally.
pub fn melspectrogram<T: Scalar + FftNum>(
    w: &Waveform<T>,
    cfg: &MelConfig,
) -> Result<MelSpec<T>, FeatureError> {
    MelExtractor::new(cfg.clone())?.compute(w)
}
