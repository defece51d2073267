use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::folds::{make_folds, split_fold, FoldPlan};
use super::TrainError;
use crate::dataset::{SegmentScore, SurveyDataset};
use crate::features::{rng_stream, AugmentPolicy, MelSpec};
use crate::model::{
    backward, forward, l1_grad, Checkpoint, Parameters, TdnnConfig, TrainMeta,
};

/// Optimization and schedule knobs. The loss (L1), the optimizer family
/// (Adam), and song-grouped folding are fixed by the recipe; the numeric
/// values here are artifact defaults, logged into every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stop patience, in epochs without validation improvement.
    pub patience: usize,
    pub seed: u64,
    /// Fraction of training songs carved out for validation.
    pub validation_fraction: f64,
    pub augment: AugmentPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            validation_fraction: 0.1,
            augment: AugmentPolicy::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !self.learning_rate.is_finite()
            || self.learning_rate < 0.0
            || !self.epsilon.is_finite()
            || self.epsilon <= 0.0
        {
            return Err(TrainError::BadConfig("bad optimizer constants".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(TrainError::BadConfig("betas must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(TrainError::BadConfig("batch size and epochs must be positive".into()));
        }
        if self.patience == 0 || self.patience > self.max_epochs {
            return Err(TrainError::BadConfig(
                "patience must be in 1..=max_epochs".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(TrainError::BadConfig(
                "validation_fraction must lie in [0, 1)".into(),
            ));
        }
        self.augment.validate()?;
        Ok(())
    }
}

/// Supplies mel features per (segment, speed factor, stem flag). Factor 1.0
/// without stem must always be available: that variant serves validation,
/// test, and prediction.
pub trait FeatureStore {
    fn features(&self, segment_id: &str, factor: f64, use_stem: bool)
        -> Result<MelSpec<f32>, TrainError>;
    fn has_stem(&self, segment_id: &str) -> bool;
}

/// In-memory store, used by tests and by the CLI after featurization.
#[derive(Default)]
pub struct MemoryFeatureStore {
    map: HashMap<(String, u64, bool), MelSpec<f32>>,
    stems: std::collections::HashSet<String>,
}

impl MemoryFeatureStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, segment_id: &str, factor: f64, use_stem: bool, mel: MelSpec<f32>) {
        if use_stem {
            self.stems.insert(segment_id.to_string());
        }
        self.map
            .insert((segment_id.to_string(), factor.to_bits(), use_stem), mel);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl FeatureStore for MemoryFeatureStore {
    fn features(
        &self,
        segment_id: &str,
        factor: f64,
        use_stem: bool,
    ) -> Result<MelSpec<f32>, TrainError> {
        self.map
            .get(&(segment_id.to_string(), factor.to_bits(), use_stem))
            .cloned()
            .ok_or_else(|| TrainError::MissingFeatures {
                segment_id: segment_id.to_string(),
                factor,
                use_stem,
            })
    }

    fn has_stem(&self, segment_id: &str) -> bool {
        self.stems.contains(segment_id)
    }
}

/// One line of the per-fold training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_l1: f64,
    pub val_l1: Option<f64>,
    pub learning_rate: f64,
    pub wall_seconds: f64,
}

/// Per-fold result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_mae: f64,
    pub train_segments: usize,
    pub test_segments: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
}

/// Everything `train_fold` produces.
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub metrics: FoldMetrics,
    pub log: Vec<EpochLog>,
}

/// Mean absolute error between two equal-length sequences.
pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64, TrainError> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(TrainError::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

fn evaluate(
    params: &Parameters<f32>,
    cfg: &TdnnConfig,
    store: &dyn FeatureStore,
    set: &[(String, f64)],
) -> Result<f64, TrainError> {
    let mut preds = Vec::with_capacity(set.len());
    let mut targets = Vec::with_capacity(set.len());
    for (seg, target) in set {
        let mel = store.features(seg, 1.0, false)?;
        let out = forward(&mel, params, cfg, false)?;
        preds.push(f64::from(out.score));
        targets.push(*target);
    }
    mae(&preds, &targets)
}

fn with_targets(ids: &[String], targets: &HashMap<&str, f64>) -> Vec<(String, f64)> {
    ids.iter()
        .filter_map(|id| targets.get(id.as_str()).map(|&t| (id.clone(), t)))
        .collect()
}

/// Parameter-initialization seed for one fold of a run.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_add((fold as u64).wrapping_mul(0x9E3779B97F4A7C15))
}

/// Trains one fold: Adam on batched L1 with per-epoch augmentation draws,
/// early stopping on validation L1 (train L1 when no validation split),
/// returning the best-validation checkpoint, its test MAE, and the log.
pub fn train_fold(
    dataset: &SurveyDataset,
    scores: &[SegmentScore],
    plan: &FoldPlan,
    fold: usize,
    model_cfg: &TdnnConfig,
    train_cfg: &TrainConfig,
    store: &dyn FeatureStore,
) -> Result<TrainOutcome, TrainError> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    let split = split_fold(dataset, plan, fold, train_cfg.validation_fraction)?;
    let targets: HashMap<&str, f64> = scores
        .iter()
        .map(|s| (s.segment_id.as_str(), s.unit_score))
        .collect();
    let train_set = with_targets(&split.train, &targets);
    let val_set = with_targets(&split.validation, &targets);
    let test_set = with_targets(&split.test, &targets);
    if train_set.is_empty() || test_set.is_empty() {
        return Err(TrainError::BadConfig(
            "fold leaves an empty train or test set".into(),
        ));
    }

    let mut params = Parameters::<f32>::init(model_cfg, fold_seed(train_cfg.seed, fold))?;
    let mut opt = Adam::<f32>::new(
        train_cfg.learning_rate,
        train_cfg.beta1,
        train_cfg.beta2,
        train_cfg.epsilon,
    );

    let mut best_params = params.clone();
    let mut best_metric = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut stale = 0usize;
    let mut log = Vec::new();
    let mut epochs_run = 0usize;

    for epoch in 1..=train_cfg.max_epochs {
        let start = Instant::now();
        epochs_run = epoch;
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut rng_stream(
            train_cfg.seed,
            &format!("shuffle:f{fold}:e{epoch}"),
        ));

        let mut abs_sum = 0.0f64;
        for chunk in order.chunks(train_cfg.batch_size) {
            let batch_scale = 1.0 / chunk.len() as f64;
            let mut total_grads = params.zeros_like();
            for &idx in chunk {
                let (seg, target) = &train_set[idx];
                let mut draw = rng_stream(
                    train_cfg.augment.rng_seed,
                    &format!("augment:f{fold}:e{epoch}:{seg}"),
                );
                let factor = train_cfg.augment.draw_factor(&mut draw);
                let use_stem = store.has_stem(seg)
                    && draw.gen::<f64>() < train_cfg.augment.stem_probability;
                let mel = store.features(seg, factor, use_stem)?;
                let out = forward(&mel, &params, model_cfg, true)?;
                let pred = f64::from(out.score);
                if !pred.is_finite() {
                    return Err(TrainError::NonFiniteLoss { fold, epoch });
                }
                abs_sum += (pred - target).abs();
                let d_score = l1_grad(out.score, *target as f32) * batch_scale as f32;
                let grads = backward(&out, d_score, &params, model_cfg)?;
                total_grads.add_scaled(&grads, 1.0);
            }
            opt.step(&mut params, &total_grads);
        }
        let train_l1 = abs_sum / train_set.len() as f64;
        if !train_l1.is_finite() {
            return Err(TrainError::NonFiniteLoss { fold, epoch });
        }

        let val_l1 = if val_set.is_empty() {
            None
        } else {
            Some(evaluate(&params, model_cfg, store, &val_set)?)
        };
        log.push(EpochLog {
            epoch,
            train_l1,
            val_l1,
            learning_rate: train_cfg.learning_rate,
            wall_seconds: start.elapsed().as_secs_f64(),
        });

        let metric = val_l1.unwrap_or(train_l1);
        if metric < best_metric {
            best_metric = metric;
            best_params = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= train_cfg.patience {
                break;
            }
        }
    }

    let test_mae = evaluate(&best_params, model_cfg, store, &test_set)?;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            config: model_cfg.clone(),
            params: best_params,
            meta: TrainMeta {
                seed: train_cfg.seed,
                epoch: best_epoch,
                fold,
            },
        },
        metrics: FoldMetrics {
            fold,
            test_mae,
            train_segments: train_set.len(),
            test_segments: test_set.len(),
            epochs_run,
            best_epoch,
        },
        log,
    })
}

/// Cross-validation summary: per-fold metrics plus the mean and population
/// standard deviation of test MAE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: Vec<FoldMetrics>,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub seed: u64,
}

impl CvSummary {
    pub fn from_metrics(folds: Vec<FoldMetrics>, seed: u64) -> Self {
        let n = folds.len() as f64;
        let mean = folds.iter().map(|f| f.test_mae).sum::<f64>() / n;
        let var = folds
            .iter()
            .map(|f| (f.test_mae - mean).powi(2))
            .sum::<f64>()
            / n;
        CvSummary {
            folds,
            mean_mae: mean,
            std_mae: var.sqrt(),
            seed,
        }
    }
}

/// Full song-grouped k-fold run. Folds train sequentially; outcomes carry
/// one checkpoint per fold.
pub fn cross_validate(
    dataset: &SurveyDataset,
    scores: &[SegmentScore],
    model_cfg: &TdnnConfig,
    train_cfg: &TrainConfig,
    store: &dyn FeatureStore,
    k: usize,
) -> Result<(CvSummary, Vec<TrainOutcome>), TrainError> {
    let plan = make_folds(&dataset.song_ids(), k, train_cfg.seed)?;
    let mut outcomes = Vec::with_capacity(k);
    for fold in 0..k {
        outcomes.push(train_fold(
            dataset, scores, &plan, fold, model_cfg, train_cfg, store,
        )?);
    }
    let metrics = outcomes.iter().map(|o| o.metrics.clone()).collect();
    Ok((CvSummary::from_metrics(metrics, train_cfg.seed), outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        Gender, Language, ParticipantAgeGroup, ParticipantMeta, Response, SegmentMeta,
        SingerAgeGroup, SingerSex,
    };
    use crate::features::MelConfig;
    use crate::model::gradcheck::tiny_config;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `n_songs` one-segment songs with alternating targets 0.1 / 0.9 and
    /// random 25×24 "features" per segment.
    fn tiny_fixture(n_songs: usize) -> (SurveyDataset, Vec<SegmentScore>, MemoryFeatureStore) {
        let mut segments = Vec::new();
        let mut responses = Vec::new();
        let participants: Vec<ParticipantMeta> = (0..5)
            .map(|i| ParticipantMeta {
                participant_id: format!("p{i}"),
                gender: Gender::Female,
                age_group: ParticipantAgeGroup::A20_34,
                languages: Default::default(),
                reported_difficulty: false,
            })
            .collect();
        let mut store = MemoryFeatureStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for song in 0..n_songs {
            let seg_id = format!("s{song:03}");
            segments.push(SegmentMeta {
                segment_id: seg_id.clone(),
                song_id: format!("song{song:03}"),
                singer_sex: SingerSex::Female,
                singer_age_group: SingerAgeGroup::A20_34,
                language: Language::En,
                start_time: 0.0,
                duration: 3.0,
                audio_ref: None,
                stem_ref: None,
            });
            // Likert pattern giving unit 0.1 (mean -1.6) or 0.9 (mean 1.6).
            let pattern: [i8; 5] = if song % 2 == 0 {
                [-2, -2, -1, -1, -2]
            } else {
                [2, 2, 1, 1, 2]
            };
            for (i, v) in pattern.iter().enumerate() {
                responses.push(Response {
                    participant_id: format!("p{i}"),
                    segment_id: seg_id.clone(),
                    likert: *v,
                    recognized_singer: false,
                });
            }
            // Class-dependent features with noise so the task is learnable.
            let base: f32 = if song % 2 == 0 { -0.8 } else { 0.8 };
            for &factor in &[0.9, 1.0, 1.1] {
                let data: Vec<f32> = (0..25 * 24)
                    .map(|j| base * ((j % 24) as f32 / 24.0) + rng.gen_range(-0.3..0.3))
                    .collect();
                store.insert(
                    &seg_id,
                    factor,
                    false,
                    MelSpec {
                        frames: 25,
                        n_mels: 24,
                        data,
                        config: MelConfig::default(),
                    },
                );
            }
        }
        let ds = SurveyDataset::new(segments, participants, responses).unwrap();
        let scores = crate::dataset::all_scores(&ds);
        (ds, scores, store)
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), 0.0);
        assert!((mae(&[0.5], &[0.6]).unwrap() - 0.1).abs() < 1e-12);
        assert!((mae(&[0.0, 1.0, 1.0], &[1.0, 1.0, 0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(mae(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn cv_summary_statistics() {
        let folds: Vec<FoldMetrics> = [0.09, 0.10, 0.10, 0.11, 0.10]
            .iter()
            .enumerate()
            .map(|(i, &m)| FoldMetrics {
                fold: i,
                test_mae: m,
                train_segments: 0,
                test_segments: 0,
                epochs_run: 0,
                best_epoch: 0,
            })
            .collect();
        let summary = CvSummary::from_metrics(folds, 0);
        assert!((summary.mean_mae - 0.10).abs() < 1e-12);
        assert!((summary.std_mae - 0.00632455532).abs() < 1e-9);

        let constant: Vec<FoldMetrics> = (0..5)
            .map(|i| FoldMetrics {
                fold: i,
                test_mae: 0.1,
                train_segments: 0,
                test_segments: 0,
                epochs_run: 0,
                best_epoch: 0,
            })
            .collect();
        let summary = CvSummary::from_metrics(constant, 0);
        assert!((summary.mean_mae - 0.1).abs() < 1e-15);
        assert_eq!(summary.std_mae, 0.0);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let (ds, scores, store) = tiny_fixture(10);
        let plan = make_folds(&ds.song_ids(), 5, 1).unwrap();
        let cfg = tiny_config();
        let train_cfg = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 4,
            patience: 4,
            batch_size: 4,
            validation_fraction: 0.0,
            augment: AugmentPolicy {
                speed_factors: vec![1.0],
                stem_probability: 0.0,
                rng_seed: 0,
            },
            ..Default::default()
        };
        let out = train_fold(&ds, &scores, &plan, 0, &cfg, &train_cfg, &store).unwrap();
        let reference = Parameters::<f32>::init(&cfg, train_cfg.seed).unwrap();
        assert_eq!(out.checkpoint.params, reference);
        let losses: Vec<f64> = out.log.iter().map(|l| l.train_l1).collect();
        assert!(losses.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    }

    #[test]
    fn overfits_sixteen_segments_without_freezing() {
        let (ds, scores, store) = tiny_fixture(20);
        let plan = make_folds(&ds.song_ids(), 5, 1).unwrap();
        let cfg = tiny_config();
        let train_cfg = TrainConfig {
            learning_rate: 3e-3,
            max_epochs: 500,
            patience: 500,
            batch_size: 8,
            validation_fraction: 0.0,
            augment: AugmentPolicy {
                speed_factors: vec![1.0],
                stem_probability: 0.0,
                rng_seed: 0,
            },
            ..Default::default()
        };
        let out = train_fold(&ds, &scores, &plan, 0, &cfg, &train_cfg, &store).unwrap();
        assert_eq!(out.metrics.train_segments, 16);
        let best_train = out.log.iter().map(|l| l.train_l1).fold(f64::INFINITY, f64::min);
        assert!(
            best_train < 0.02,
            "capacity check: best train L1 {best_train} after {} epochs",
            out.metrics.epochs_run
        );
    }

    #[test]
    fn deterministic_loss_trajectory() {
        let (ds, scores, store) = tiny_fixture(10);
        let plan = make_folds(&ds.song_ids(), 5, 1).unwrap();
        let cfg = tiny_config();
        let train_cfg = TrainConfig {
            max_epochs: 3,
            patience: 3,
            batch_size: 4,
            ..Default::default()
        };
        let a = train_fold(&ds, &scores, &plan, 0, &cfg, &train_cfg, &store).unwrap();
        let b = train_fold(&ds, &scores, &plan, 0, &cfg, &train_cfg, &store).unwrap();
        let trajectory =
            |log: &[EpochLog]| -> Vec<(usize, f64, Option<f64>)> {
                log.iter().map(|l| (l.epoch, l.train_l1, l.val_l1)).collect()
            };
        assert_eq!(trajectory(&a.log), trajectory(&b.log));
        assert_eq!(a.checkpoint.params, b.checkpoint.params);
    }

    #[test]
    fn early_stop_returns_best_validation_checkpoint() {
        let (ds, scores, store) = tiny_fixture(20);
        let plan = make_folds(&ds.song_ids(), 5, 1).unwrap();
        let cfg = tiny_config();
        let train_cfg = TrainConfig {
            max_epochs: 30,
            patience: 3,
            batch_size: 8,
            validation_fraction: 0.2,
            ..Default::default()
        };
        let out = train_fold(&ds, &scores, &plan, 1, &cfg, &train_cfg, &store).unwrap();
        let best_logged = out
            .log
            .iter()
            .filter_map(|l| l.val_l1)
            .fold(f64::INFINITY, f64::min);
        let best_epoch_val = out.log[out.metrics.best_epoch - 1].val_l1.unwrap();
        assert!(best_epoch_val <= best_logged + 1e-15);
    }
}
