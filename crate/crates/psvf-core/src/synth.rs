//! Synthetic evaluation corpus: harmonic "songs" whose class is encoded in
//! the fundamental frequency. Low-pitched songs (near 120 Hz) carry a unit
//! target of 0.1, high-pitched ones (near 220 Hz) 0.9, with survey
//! responses constructed to produce exactly those targets through the
//! normal scoring path. Used by the end-to-end training check and as demo
//! input for the CLI.

use std::path::Path;

use rand::Rng;

use crate::dataset::{
    Gender, Language, ParticipantAgeGroup, ParticipantMeta, Response, SegmentMeta, SingerAgeGroup,
    SingerSex, SurveyDataset,
};
use crate::features::{rng_stream, write_wav_i16, FeatureError};

/// Corpus shape: `n_songs` songs × 6 segments of `segment_seconds` each.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_songs: usize,
    pub segment_seconds: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_songs: 200,
            segment_seconds: 3.0,
            sample_rate: 16000,
            seed: 7,
        }
    }
}

/// Likert pattern whose mean rescales to exactly 0.1 (low) or 0.9 (high).
fn response_pattern(high: bool) -> [i8; 5] {
    if high {
        [2, 2, 1, 1, 2]
    } else {
        [-2, -2, -1, -1, -2]
    }
}

/// A short melody of harmonic notes around `f0`. Note changes and
/// attack/release envelopes keep the mel trajectory non-stationary, as sung
/// phrases are; a statically held tone would be erased by per-segment mean
/// normalization.
fn harmonic_segment(f0: f64, noise: f64, rate: u32, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let note_len = rate as usize * 6 / 10; // 600 ms notes
    let mut out = vec![0.0f64; n];
    let mut start = 0usize;
    while start < n {
        let end = (start + note_len).min(n);
        // Up to ±2 semitones around the segment fundamental.
        let note_f0 = f0 * 2f64.powf(rng.gen_range(-2.0..2.0) / 12.0);
        let phases: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let len = end - start;
        let attack = (rate as usize / 20).min(len / 4).max(1); // 50 ms
        let release = (rate as usize / 10).min(len / 4).max(1); // 100 ms
        for i in 0..len {
            let t = i as f64 / f64::from(rate);
            let mut v = 0.0;
            for (h, &phase) in phases.iter().enumerate() {
                let k = (h + 1) as f64;
                v += (0.5 / k) * (std::f64::consts::TAU * note_f0 * k * t + phase).sin();
            }
            let env = if i < attack {
                i as f64 / attack as f64
            } else if i + release > len {
                (len - i) as f64 / release as f64
            } else {
                1.0
            };
            out[start + i] = v * env;
        }
        start = end;
    }
    for v in &mut out {
        *v += noise * rng.gen_range(-1.0..1.0);
    }
    let peak = out.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-9);
    let gain = 0.7 / peak;
    for v in &mut out {
        *v *= gain;
    }
    out
}

/// Writes `dir/audio/*.wav` plus canonical survey files so the corpus runs
/// through the normal ingest → score → featurize → train pipeline.
/// Deterministic for a fixed spec.
pub fn generate_corpus(dir: &Path, spec: &SynthSpec) -> Result<SurveyDataset, FeatureError> {
    let audio_dir = dir.join("audio");
    std::fs::create_dir_all(&audio_dir)?;
    let n = (spec.segment_seconds * f64::from(spec.sample_rate)).round() as usize;

    let participants: Vec<ParticipantMeta> = (0..5)
        .map(|i| ParticipantMeta {
            participant_id: format!("p{i}"),
            gender: if i % 2 == 0 { Gender::Female } else { Gender::Male },
            age_group: ParticipantAgeGroup::A20_34,
            languages: [Language::En].into_iter().collect(),
            reported_difficulty: false,
        })
        .collect();

    let mut segments = Vec::new();
    let mut responses = Vec::new();
    for song in 0..spec.n_songs {
        let high = song % 2 == 1;
        let mut song_rng = rng_stream(spec.seed, &format!("song{song}"));
        let base = if high { 220.0 } else { 120.0 };
        let f0_song = base * song_rng.gen_range(0.92..1.08);
        for k in 0..6usize {
            let seg_idx = song * 6 + k;
            let seg_id = format!("seg{seg_idx:04}");
            let mut rng = rng_stream(spec.seed, &seg_id);
            let f0 = f0_song * rng.gen_range(0.99..1.01);
            let noise = rng.gen_range(0.01..0.05);
            let samples = harmonic_segment(f0, noise, spec.sample_rate, n, &mut rng);
            let rel = format!("audio/{seg_id}.wav");
            write_wav_i16(&dir.join(&rel), &samples, spec.sample_rate)?;
            segments.push(SegmentMeta {
                segment_id: seg_id.clone(),
                song_id: format!("song{song:03}"),
                singer_sex: if high { SingerSex::Female } else { SingerSex::Male },
                singer_age_group: SingerAgeGroup::A20_34,
                language: Language::En,
                start_time: 0.0,
                duration: spec.segment_seconds,
                audio_ref: Some(rel),
                stem_ref: None,
            });
            for (i, v) in response_pattern(high).iter().enumerate() {
                responses.push(Response {
                    participant_id: format!("p{i}"),
                    segment_id: seg_id.clone(),
                    likert: *v,
                    recognized_singer: false,
                });
            }
        }
    }
    let dataset = SurveyDataset::new(segments, participants, responses)
        .expect("synthetic corpus is internally consistent");
    crate::dataset::write_canonical(&dataset, dir).map_err(|e| {
        FeatureError::Io(std::io::Error::other(e.to_string()))
    })?;
    Ok(dataset)
}
