//! Survey analytics and automatic prediction of perceived singing-voice
//! femininity (PSVF).
//!
//! The crate has two halves that share a dataset model:
//!
//! * [`dataset`] + [`analytics`] ingest Likert survey responses, apply the
//!   validity filters, aggregate per-segment PSVF scores, and compute
//!   Average Correspondence (AC) and Unsure-rate cross-tabulations.
//! * [`features`] + [`model`] + [`train`] turn 3-second vocal segments into
//!   24-bin log-mel features and train a TDNN x-vector regressor with a
//!   single sigmoid output in `[0, 1]` under song-grouped 5-fold
//!   cross-validation, evaluated by MAE.
//!
//! Numeric code is generic over the scalar type (`f32` for training, `f64`
//! for gradient verification); see [`scalar::Scalar`] and the aliases below.

pub mod analytics;
pub mod dataset;
pub mod features;
pub mod golden;
pub mod model;
pub mod scalar;
pub mod synth;
pub mod train;

pub use scalar::Scalar;

/// Mel spectrogram in training precision.
pub type MelSpec32 = features::MelSpec<f32>;
/// Mel spectrogram in verification precision.
pub type MelSpec64 = features::MelSpec<f64>;
/// Model parameters in training precision.
pub type Parameters32 = model::Parameters<f32>;
/// Model parameters in verification precision (gradient checks).
pub type Parameters64 = model::Parameters<f64>;
