//! Command implementations. Each `run_*` function is the library form of a
//! CLI subcommand: callable from tests, wrapped by `main` for exit codes.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use psvf_core::analytics::{
    build_report, render_report, AnalyticsReport, ParticipantDim, ReportFormat, SingerDim,
};
use psvf_core::dataset::{
    all_scores, ingest, write_canonical, ColumnMap, DatasetPaths, SurveyDataset,
};
use psvf_core::features::{
    extract_segment, load_audio, load_melspec, melspectrogram, save_melspec, speed_perturb,
    MelConfig, MelExtractor, Waveform,
};
use psvf_core::model::{forward, load_checkpoint, save_checkpoint, Checkpoint};
use psvf_core::train::{
    cross_validate, CvSummary, EpochLog, MemoryFeatureStore, TrainOutcome,
};

use crate::config::RunConfig;

/// Counts printed by `ingest`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestReport {
    pub segments: usize,
    pub raw_participants: usize,
    pub raw_responses: usize,
    pub valid_participants: usize,
    pub valid_responses: usize,
}

fn load_column_map(path: Option<&Path>) -> Result<ColumnMap> {
    match path {
        Some(p) => ColumnMap::from_file(p)
            .with_context(|| format!("cannot load column map {}", p.display())),
        None => Ok(ColumnMap::identity()),
    }
}

/// Reads a dataset directory (canonical names, optional column map).
pub fn load_dataset(dir: &Path, column_map: Option<&Path>) -> Result<SurveyDataset> {
    let paths = DatasetPaths::in_dir(dir);
    let map = load_column_map(column_map)?;
    ingest(&paths, &map).with_context(|| format!("ingesting {}", dir.display()))
}

/// `ingest`: validate, write the canonical copy, report pre/post-filter counts.
pub fn run_ingest(
    segments: &Path,
    participants: &Path,
    responses: &Path,
    column_map: Option<&Path>,
    out: &Path,
) -> Result<IngestReport> {
    let paths = DatasetPaths {
        segments: segments.to_path_buf(),
        participants: participants.to_path_buf(),
        responses: responses.to_path_buf(),
    };
    let map = load_column_map(column_map)?;
    let dataset = ingest(&paths, &map)?;
    let filtered = dataset.filter_valid();
    fs::create_dir_all(out)?;
    write_canonical(&dataset, out)?;
    Ok(IngestReport {
        segments: dataset.segments().len(),
        raw_participants: dataset.participants().len(),
        raw_responses: dataset.responses().len(),
        valid_participants: filtered.participants().len(),
        valid_responses: filtered.responses().len(),
    })
}

/// `analyze`: filter, build the report, and emit the requested formats.
/// Returns the report and the written file paths.
pub fn run_analyze(
    cfg: &RunConfig,
    dims: Option<(ParticipantDim, SingerDim)>,
    formats: &[ReportFormat],
    out: &Path,
) -> Result<(AnalyticsReport, Vec<PathBuf>)> {
    let dataset = load_dataset(&cfg.data.dir, cfg.data.column_map.as_deref())?.filter_valid();
    let report = build_report(&dataset, &cfg.analytics.options(), dims);
    fs::create_dir_all(out)?;
    cfg.stamp(out)?;
    let mut written = Vec::new();
    for format in formats {
        let (name, bytes) = match format {
            ReportFormat::Markdown => ("report.md", render_report(&report, *format)?),
            ReportFormat::Json => ("report.json", render_report(&report, *format)?),
            ReportFormat::Csv => ("report.csv", render_report(&report, *format)?),
        };
        let path = out.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
    }
    Ok((report, written))
}

/// Cache file name for one (segment, source, factor) variant. The factor
/// uses round-trip float formatting so the loader recovers the exact value.
pub fn cache_file_name(segment_id: &str, use_stem: bool, factor: f64) -> String {
    format!(
        "{segment_id}__{}__x{factor}.mel",
        if use_stem { "stem" } else { "mix" }
    )
}

fn parse_cache_name(name: &str) -> Option<(String, bool, f64)> {
    let stem = name.strip_suffix(".mel")?;
    let mut parts = stem.split("__");
    let seg = parts.next()?.to_string();
    let source = parts.next()?;
    let factor = parts.next()?.strip_prefix('x')?.parse::<f64>().ok()?;
    if parts.next().is_some() {
        return None;
    }
    match source {
        "mix" => Some((seg, false, factor)),
        "stem" => Some((seg, true, factor)),
        _ => None,
    }
}

/// `featurize`: compute and cache log-mel features for every segment, for
/// the original speed and (optionally) every augmentation variant.
/// Returns the number of cache files written.
pub fn run_featurize(cfg: &RunConfig, cache_dir: &Path, augment: bool) -> Result<usize> {
    cfg.mel.validate()?;
    cfg.train.augment.validate()?;
    let dataset = load_dataset(&cfg.data.dir, cfg.data.column_map.as_deref())?;
    let audio_base = cfg.audio_base();
    fs::create_dir_all(cache_dir)?;
    let extractor = MelExtractor::<f32>::new(cfg.mel.clone())?;

    let mut factors: BTreeSet<u64> = BTreeSet::new();
    factors.insert(1.0f64.to_bits());
    if augment {
        for &f in &cfg.train.augment.speed_factors {
            factors.insert(f.to_bits());
        }
    }

    let mut wave_cache: HashMap<PathBuf, Waveform<f32>> = HashMap::new();
    let mut written = 0usize;
    for seg in dataset.segments() {
        let sources: Vec<(bool, &str)> = [
            seg.audio_ref.as_deref().map(|p| (false, p)),
            seg.stem_ref.as_deref().map(|p| (true, p)),
        ]
        .into_iter()
        .flatten()
        .collect();
        for (use_stem, rel) in sources {
            let path = audio_base.join(rel);
            if !wave_cache.contains_key(&path) {
                let wave = load_audio::<f32>(&path, cfg.mel.sample_rate)
                    .with_context(|| format!("loading {}", path.display()))?;
                wave_cache.insert(path.clone(), wave);
            }
            let wave = &wave_cache[&path];
            let cut = extract_segment(wave, seg.start_time, seg.duration)?;
            for &bits in &factors {
                let factor = f64::from_bits(bits);
                let target = cache_dir.join(cache_file_name(&seg.segment_id, use_stem, factor));
                if target.exists() {
                    continue;
                }
                let varied = speed_perturb(&cut, factor);
                let mel = extractor.compute(&varied)?;
                save_melspec(&target, &mel)?;
                written += 1;
            }
        }
    }
    Ok(written)
}

/// Loads a feature cache directory into memory for training.
pub fn load_feature_store(cache_dir: &Path, mel: &MelConfig) -> Result<MemoryFeatureStore> {
    let mut store = MemoryFeatureStore::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(cache_dir)
        .with_context(|| format!("reading feature cache {}", cache_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some((seg, use_stem, factor)) = parse_cache_name(name) else {
            continue;
        };
        let mel_spec = load_melspec::<f32>(&path, mel)?;
        store.insert(&seg, factor, use_stem, mel_spec);
    }
    if store.is_empty() {
        bail!(
            "feature cache {} holds no usable features; run `psvf featurize` first",
            cache_dir.display()
        );
    }
    Ok(store)
}

fn write_train_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_l1", "val_l1", "lr", "wall_seconds"])?;
    for row in log {
        w.write_record([
            row.epoch.to_string(),
            format!("{}", row.train_l1),
            row.val_l1.map(|v| v.to_string()).unwrap_or_default(),
            format!("{}", row.learning_rate),
            format!("{}", row.wall_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `train`: song-grouped k-fold cross-validation over the cached features.
/// Writes per-fold checkpoints and logs plus `summary.json`.
pub fn run_train(cfg: &RunConfig, cache_dir: &Path, out: &Path, k: usize) -> Result<CvSummary> {
    let dataset = load_dataset(&cfg.data.dir, cfg.data.column_map.as_deref())?.filter_valid();
    let scores = all_scores(&dataset);
    if scores.is_empty() {
        bail!("no segment has a valid response; nothing to train on");
    }
    let store = load_feature_store(cache_dir, &cfg.mel)?;
    fs::create_dir_all(out)?;
    cfg.stamp(out)?;
    let (summary, outcomes) =
        cross_validate(&dataset, &scores, &cfg.model, &cfg.train, &store, k)?;
    for outcome in &outcomes {
        let TrainOutcome {
            checkpoint,
            metrics,
            log,
        } = outcome;
        save_checkpoint(checkpoint, out.join(format!("fold{}.ckpt", metrics.fold)))?;
        write_train_log(&out.join(format!("fold{}_log.csv", metrics.fold)), log)?;
        eprintln!(
            "fold {}: train {} / test {} segments, best epoch {}, test MAE {:.4}",
            metrics.fold,
            metrics.train_segments,
            metrics.test_segments,
            metrics.best_epoch,
            metrics.test_mae
        );
    }
    fs::write(
        out.join("summary.json"),
        serde_json::to_vec_pretty(&summary)?,
    )?;
    Ok(summary)
}

/// One scored input file.
#[derive(Debug, Clone)]
pub struct FilePrediction {
    pub path: PathBuf,
    pub mean_score: f64,
    pub windows: Vec<(f64, f64)>,
    pub mean_embedding: Option<Vec<f32>>,
}

fn wav_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "wav").unwrap_or(false))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("no .wav files under {}", input.display());
        }
        Ok(files)
    } else if input.exists() {
        Ok(vec![input.to_path_buf()])
    } else {
        bail!(
            "input {} not found",
            input.display()
        );
    }
}

/// Scores one waveform with the published fixed-segment semantics extended
/// to arbitrary lengths: 3-second windows hopped by 1.5 seconds, reported
/// per window and as the per-file mean.
/// (mean score, per-window (start, score) pairs, optional mean embedding).
type ScoredWindows = (f64, Vec<(f64, f64)>, Option<Vec<f32>>);

fn score_waveform(
    wave: &Waveform<f32>,
    ckpt: &Checkpoint,
    mel_cfg: &MelConfig,
    want_embedding: bool,
) -> Result<ScoredWindows> {
    let rate = f64::from(wave.sample_rate);
    let window = (3.0 * rate).round() as usize;
    let hop = (1.5 * rate).round() as usize;
    let mut starts = Vec::new();
    if wave.samples.len() <= window {
        starts.push(0usize);
    } else {
        let mut s = 0usize;
        while s + window <= wave.samples.len() {
            starts.push(s);
            s += hop;
        }
    }
    let mut windows = Vec::with_capacity(starts.len());
    let mut embedding_sum: Option<Vec<f64>> = None;
    for s in starts {
        let end = (s + window).min(wave.samples.len());
        let cut = Waveform {
            samples: wave.samples[s..end].to_vec(),
            sample_rate: wave.sample_rate,
        };
        let mel = melspectrogram(&cut, mel_cfg)?;
        let out = forward(&mel, &ckpt.params, &ckpt.config, false)?;
        windows.push((s as f64 / rate, f64::from(out.score)));
        if want_embedding {
            let sum = embedding_sum.get_or_insert_with(|| vec![0.0; out.embedding.len()]);
            for (slot, &e) in sum.iter_mut().zip(&out.embedding) {
                *slot += f64::from(e);
            }
        }
    }
    let mean = windows.iter().map(|&(_, v)| v).sum::<f64>() / windows.len() as f64;
    let mean_embedding = embedding_sum.map(|sum| {
        let n = windows.len() as f64;
        sum.into_iter().map(|v| (v / n) as f32).collect()
    });
    Ok((mean, windows, mean_embedding))
}

/// `predict`: score WAV files with a trained checkpoint. Writes
/// `predictions.csv` (per file) and `windows.csv` (per 3-second window).
pub fn run_predict(
    cfg: &RunConfig,
    checkpoint: &Path,
    input: &Path,
    out: &Path,
    embeddings: bool,
) -> Result<Vec<FilePrediction>> {
    let ckpt = load_checkpoint(checkpoint)?;
    let files = wav_inputs(input)?;
    let mut predictions = Vec::with_capacity(files.len());
    for path in files {
        let wave = load_audio::<f32>(&path, cfg.mel.sample_rate)
            .with_context(|| format!("loading {}", path.display()))?;
        let (mean_score, windows, mean_embedding) =
            score_waveform(&wave, &ckpt, &cfg.mel, embeddings)?;
        predictions.push(FilePrediction {
            path,
            mean_score,
            windows,
            mean_embedding,
        });
    }

    fs::create_dir_all(out)?;
    cfg.stamp(out)?;
    let mut w = csv::Writer::from_path(out.join("predictions.csv"))?;
    let mut header = vec![
        "path".to_string(),
        "mean_score".to_string(),
        "n_windows".to_string(),
        "scoring".to_string(),
    ];
    if embeddings {
        header.extend((0..64).map(|i| format!("emb{i}")));
    }
    w.write_record(&header)?;
    for p in &predictions {
        let mut row = vec![
            p.path.display().to_string(),
            format!("{}", p.mean_score),
            p.windows.len().to_string(),
            "windowed-3.0s-hop-1.5s".to_string(),
        ];
        if let Some(emb) = &p.mean_embedding {
            row.extend(emb.iter().map(|v| format!("{v}")));
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("windows.csv"))?;
    w.write_record(["path", "window_start_s", "score"])?;
    for p in &predictions {
        for &(start, score) in &p.windows {
            w.write_record([
                p.path.display().to_string(),
                format!("{start}"),
                format!("{score}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(predictions)
}

/// `report`: re-render a saved JSON analytics report.
pub fn run_report(report_path: &Path, format: ReportFormat, out: &Path) -> Result<PathBuf> {
    let bytes = fs::read(report_path)
        .with_context(|| format!("cannot read report {}", report_path.display()))?;
    let report: AnalyticsReport = serde_json::from_slice(&bytes)?;
    let rendered = render_report(&report, format)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, rendered)?;
    Ok(out.to_path_buf())
}

/// `synth --kind survey`: write the surrogate survey dataset.
pub fn run_synth_survey(out: &Path) -> Result<IngestReport> {
    let dataset = psvf_core::golden::surrogate_survey();
    fs::create_dir_all(out)?;
    write_canonical(&dataset, out)?;
    let filtered = dataset.filter_valid();
    Ok(IngestReport {
        segments: dataset.segments().len(),
        raw_participants: dataset.participants().len(),
        raw_responses: dataset.responses().len(),
        valid_participants: filtered.participants().len(),
        valid_responses: filtered.responses().len(),
    })
}

/// `synth --kind audio`: write the harmonic synthetic corpus.
pub fn run_synth_audio(out: &Path, n_songs: usize, seed: u64) -> Result<usize> {
    let spec = psvf_core::synth::SynthSpec {
        n_songs,
        seed,
        ..Default::default()
    };
    let dataset = psvf_core::synth::generate_corpus(out, &spec)?;
    Ok(dataset.segments().len())
}

/// Parses `--dims <participant> <singer>`.
pub fn parse_dims(participant: &str, singer: &str) -> Result<(ParticipantDim, SingerDim)> {
    let p = match participant.to_ascii_lowercase().as_str() {
        "gender" => ParticipantDim::Gender,
        "age" | "age_group" => ParticipantDim::AgeGroup,
        "language" | "lang" => ParticipantDim::Language,
        other => bail!("unknown participant dimension {other:?}"),
    };
    let s = match singer.to_ascii_lowercase().as_str() {
        "sex" => SingerDim::Sex,
        "age" | "age_group" => SingerDim::AgeGroup,
        "language" | "lang" => SingerDim::Language,
        other => bail!("unknown singer dimension {other:?}"),
    };
    Ok((p, s))
}
