//! Training harness: song-grouped 5-fold cross-validation, Adam, the
//! epoch loop with early stopping on validation L1, and MAE evaluation.

mod adam;
mod folds;
mod trainer;

pub use adam::Adam;
pub use folds::{make_folds, split_fold, FoldPlan, FoldSplit};
pub use trainer::{
    cross_validate, fold_seed, mae, train_fold, CvSummary, EpochLog, FeatureStore, FoldMetrics,
    MemoryFeatureStore, TrainConfig, TrainOutcome,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("need at least {need} songs for {need}-fold cross-validation, got {got}")]
    TooFewSongs { got: usize, need: usize },

    #[error("fold {fold} out of range for k = {k}")]
    BadFold { fold: usize, k: usize },

    #[error("no features available for segment {segment_id} (factor {factor}, stem {use_stem})")]
    MissingFeatures {
        segment_id: String,
        factor: f64,
        use_stem: bool,
    },

    #[error("non-finite loss at fold {fold}, epoch {epoch}; aborting")]
    NonFiniteLoss { fold: usize, epoch: usize },

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("bad train config: {0}")]
    BadConfig(String),

    #[error("{0}")]
    Model(#[from] crate::model::ModelError),

    #[error("{0}")]
    Feature(#[from] crate::features::FeatureError),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}
