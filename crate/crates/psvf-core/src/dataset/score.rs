use serde::{Deserialize, Serialize};

use super::types::SurveyDataset;
use super::DatasetError;

/// Per-segment PSVF aggregate: the raw Likert mean and its `[0, 1]`
/// rescaling used as the regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub segment_id: String,
    pub n_responses: usize,
    /// Arithmetic mean of the Likert values, in `[-2, 2]`.
    pub mean_psvf: f64,
    /// `(mean_psvf + 2) / 4`, in `[0, 1]`.
    pub unit_score: f64,
}

/// Mean PSVF for one segment. `NoResponses` when the (filtered) dataset has
/// none for it: such segments are excluded from analytics and training.
pub fn segment_mean(dataset: &SurveyDataset, segment_id: &str) -> Result<SegmentScore, DatasetError> {
    if dataset.segment(segment_id).is_none() {
        return Err(DatasetError::UnknownSegment {
            segment_id: segment_id.to_string(),
        });
    }
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for r in dataset.responses_for_segment(segment_id) {
        sum += f64::from(r.likert);
        n += 1;
    }
    if n == 0 {
        return Err(DatasetError::NoResponses {
            segment_id: segment_id.to_string(),
        });
    }
    let mean_psvf = sum / n as f64;
    Ok(SegmentScore {
        segment_id: segment_id.to_string(),
        n_responses: n,
        mean_psvf,
        unit_score: (mean_psvf + 2.0) / 4.0,
    })
}

/// One score per segment with at least one response, ordered by segment_id.
pub fn all_scores(dataset: &SurveyDataset) -> Vec<SegmentScore> {
    let mut ids: Vec<&str> = dataset
        .segments()
        .iter()
        .map(|s| s.segment_id.as_str())
        .collect();
    ids.sort_unstable();
    ids.iter()
        .filter_map(|id| segment_mean(dataset, id).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Gender, Language, ParticipantAgeGroup, ParticipantMeta, Response, SegmentMeta, SingerAgeGroup, SingerSex};
    use std::collections::BTreeSet;

    fn dataset_with_likerts(likerts: &[i8]) -> SurveyDataset {
        let seg = SegmentMeta {
            segment_id: "s1".into(),
            song_id: "a".into(),
            singer_sex: SingerSex::Female,
            singer_age_group: SingerAgeGroup::A20_34,
            language: Language::En,
            start_time: 0.0,
            duration: 3.0,
            audio_ref: None,
            stem_ref: None,
        };
        let participants: Vec<_> = (0..likerts.len())
            .map(|i| ParticipantMeta {
                participant_id: format!("p{i}"),
                gender: Gender::Female,
                age_group: ParticipantAgeGroup::A20_34,
                languages: BTreeSet::new(),
                reported_difficulty: false,
            })
            .collect();
        let responses: Vec<_> = likerts
            .iter()
            .enumerate()
            .map(|(i, &v)| Response {
                participant_id: format!("p{i}"),
                segment_id: "s1".into(),
                likert: v,
                recognized_singer: false,
            })
            .collect();
        SurveyDataset::new(vec![seg], participants, responses).unwrap()
    }

    #[test]
    fn constant_twos_give_unit_one() {
        let s = segment_mean(&dataset_with_likerts(&[2, 2, 2]), "s1").unwrap();
        assert_eq!(s.mean_psvf, 2.0);
        assert_eq!(s.unit_score, 1.0);
        assert_eq!(s.n_responses, 3);
    }

    #[test]
    fn symmetric_pair_gives_midpoint() {
        let s = segment_mean(&dataset_with_likerts(&[-2, 2]), "s1").unwrap();
        assert_eq!(s.mean_psvf, 0.0);
        assert_eq!(s.unit_score, 0.5);
    }

    #[test]
    fn hand_summed_example() {
        let s = segment_mean(&dataset_with_likerts(&[1, 0, -1, 2, 2]), "s1").unwrap();
        assert!((s.mean_psvf - 0.8).abs() < 1e-12);
        assert!((s.unit_score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_responses_is_error() {
        let ds = dataset_with_likerts(&[]);
        assert!(matches!(
            segment_mean(&ds, "s1"),
            Err(DatasetError::NoResponses { .. })
        ));
        assert!(all_scores(&ds).is_empty());
    }

    #[test]
    fn all_scores_matches_segment_mean_and_sorts() {
        let ds = dataset_with_likerts(&[1, 1]);
        let scores = all_scores(&ds);
        assert_eq!(scores.len(), 1);
        assert_eq!(scores[0], segment_mean(&ds, "s1").unwrap());
    }
}
