use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::dataset::SurveyDataset;

/// Song-grouped fold assignment: every segment of a song shares its fold,
/// so near-duplicate audio never leaks across train/test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn songs_in_fold(&self, fold: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(s, _)| s.as_str())
            .collect()
    }
}

/// Uniform random song assignment under `seed`, balanced to within one
/// song per fold. Deterministic for a fixed seed.
pub fn make_folds(songs: &[String], k: usize, seed: u64) -> Result<FoldPlan, TrainError> {
    let mut unique: Vec<String> = songs.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() < k {
        return Err(TrainError::TooFewSongs {
            got: unique.len(),
            need: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unique.shuffle(&mut rng);
    let assignments = unique
        .into_iter()
        .enumerate()
        .map(|(i, song)| (song, i % k))
        .collect();
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Segment-id sets for one fold: test = the fold's songs; validation is
/// carved from the remaining songs (by song, `validation_fraction` of
/// them); train is the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

pub fn split_fold(
    dataset: &SurveyDataset,
    plan: &FoldPlan,
    fold: usize,
    validation_fraction: f64,
) -> Result<FoldSplit, TrainError> {
    if fold >= plan.k {
        return Err(TrainError::BadFold { fold, k: plan.k });
    }
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(TrainError::BadConfig(format!(
            "validation_fraction {validation_fraction} outside [0, 1)"
        )));
    }
    let mut pool: Vec<&str> = plan
        .assignments
        .iter()
        .filter(|(_, &f)| f != fold)
        .map(|(s, _)| s.as_str())
        .collect();
    let n_val = (pool.len() as f64 * validation_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ (fold as u64).wrapping_mul(0x9E3779B97F4A7C15));
    pool.shuffle(&mut rng);
    let val_songs: std::collections::HashSet<&str> = pool[..n_val].iter().copied().collect();

    let mut split = FoldSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for seg in dataset.segments() {
        match plan.assignments.get(&seg.song_id) {
            Some(&f) if f == fold => split.test.push(seg.segment_id.clone()),
            Some(_) if val_songs.contains(seg.song_id.as_str()) => {
                split.validation.push(seg.segment_id.clone())
            }
            Some(_) => split.train.push(seg.segment_id.clone()),
            None => {}
        }
    }
    split.train.sort();
    split.validation.sort();
    split.test.sort();
    Ok(split)
}
