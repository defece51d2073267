use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    Gender, Language, ParticipantAgeGroup, ParticipantMeta, SegmentMeta, SingerAgeGroup,
    SingerSex, SurveyDataset,
};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("subgroup {key} has no qualifying segments")]
    EmptySubgroup { key: String },

    #[error("invalid subgroup key: {0}")]
    InvalidKey(String),

    #[error("unsupported report format {0:?}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Participant-side dimension of a cross-tabulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantDim {
    Gender,
    AgeGroup,
    Language,
}

/// Singer-side dimension of a cross-tabulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingerDim {
    Sex,
    AgeGroup,
    Language,
}

/// A concrete participant subgroup value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantValue {
    Gender(Gender),
    AgeGroup(ParticipantAgeGroup),
    Language(Language),
}

impl ParticipantValue {
    pub fn matches(&self, p: &ParticipantMeta) -> bool {
        match self {
            ParticipantValue::Gender(g) => p.gender == *g,
            ParticipantValue::AgeGroup(a) => p.age_group == *a,
            ParticipantValue::Language(l) => p.languages.contains(l),
        }
    }

    /// All values of one dimension, in presentation order.
    pub fn values_of(dim: ParticipantDim) -> Vec<ParticipantValue> {
        match dim {
            ParticipantDim::Gender => Gender::ALL.iter().copied().map(ParticipantValue::Gender).collect(),
            ParticipantDim::AgeGroup => ParticipantAgeGroup::ALL
                .iter()
                .copied()
                .map(ParticipantValue::AgeGroup)
                .collect(),
            ParticipantDim::Language => Language::ALL
                .iter()
                .copied()
                .map(ParticipantValue::Language)
                .collect(),
        }
    }
}

impl fmt::Display for ParticipantValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParticipantValue::Gender(g) => write!(f, "{g}"),
            ParticipantValue::AgeGroup(a) => write!(f, "{a}"),
            ParticipantValue::Language(l) => write!(f, "{l}"),
        }
    }
}

/// A concrete singer subgroup value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingerValue {
    Sex(SingerSex),
    AgeGroup(SingerAgeGroup),
    Language(Language),
}

impl SingerValue {
    pub fn matches(&self, s: &SegmentMeta) -> bool {
        match self {
            SingerValue::Sex(v) => s.singer_sex == *v,
            SingerValue::AgeGroup(v) => s.singer_age_group == *v,
            SingerValue::Language(v) => s.language == *v,
        }
    }

    pub fn values_of(dim: SingerDim) -> Vec<SingerValue> {
        match dim {
            SingerDim::Sex => SingerSex::ALL.iter().copied().map(SingerValue::Sex).collect(),
            SingerDim::AgeGroup => SingerAgeGroup::ALL
                .iter()
                .copied()
                .map(SingerValue::AgeGroup)
                .collect(),
            SingerDim::Language => Language::ALL
                .iter()
                .copied()
                .map(SingerValue::Language)
                .collect(),
        }
    }
}

impl fmt::Display for SingerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingerValue::Sex(v) => write!(f, "{v}"),
            SingerValue::AgeGroup(v) => write!(f, "{v}"),
            SingerValue::Language(v) => write!(f, "{v}"),
        }
    }
}

/// Subgroup selector: at least one side must be set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupKey {
    pub participant: Option<ParticipantValue>,
    pub singer: Option<SingerValue>,
}

impl SubgroupKey {
    pub fn singer(value: SingerValue) -> Self {
        SubgroupKey {
            participant: None,
            singer: Some(value),
        }
    }

    pub fn cross(participant: ParticipantValue, singer: SingerValue) -> Self {
        SubgroupKey {
            participant: Some(participant),
            singer: Some(singer),
        }
    }

    fn validate(&self) -> Result<(), AnalyticsError> {
        if self.participant.is_none() && self.singer.is_none() {
            return Err(AnalyticsError::InvalidKey("no dimension set".into()));
        }
        Ok(())
    }

    fn label(&self) -> String {
        let p = self
            .participant
            .map(|v| format!("participants:{v}"))
            .unwrap_or_default();
        let s = self.singer.map(|v| format!("singers:{v}")).unwrap_or_default();
        match (p.is_empty(), s.is_empty()) {
            (false, false) => format!("({p} × {s})"),
            (false, true) => format!("({p})"),
            _ => format!("({s})"),
        }
    }
}

/// Behavior knobs that exist to reconcile ambiguous presentation choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[derive(Default)]
pub struct AnalyticsOptions {
    /// A segment mean of exactly 0: aligned with neither sex (default) or
    /// with both.
    pub tie_counts_as_aligned: bool,
    /// Unsure interval: strict `|mean| < 0.5` (default) or inclusive
    /// endpoints.
    pub unsure_inclusive: bool,
}


/// Average-correspondence value for one subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACResult {
    pub key: SubgroupKey,
    pub n_segments: usize,
    /// 100 × aligned / n_segments.
    pub ac_percent: f64,
}

/// Unsure rate for one singer subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnsureResult {
    pub key: SubgroupKey,
    pub n_segments: usize,
    /// 100 × |{segments with |mean| inside the unsure interval}| / n_segments.
    pub unsure_percent: f64,
}

/// Whether a mean PSVF agrees in sign with the singer's sex
/// (positive ↔ feminine). A mean of exactly 0 aligns with neither.
pub fn sex_alignment(mean_psvf: f64, singer_sex: SingerSex) -> bool {
    if mean_psvf > 0.0 {
        singer_sex == SingerSex::Female
    } else if mean_psvf < 0.0 {
        singer_sex == SingerSex::Male
    } else {
        false
    }
}

fn aligned_with(mean_psvf: f64, sex: SingerSex, opts: &AnalyticsOptions) -> bool {
    if mean_psvf == 0.0 {
        opts.tie_counts_as_aligned
    } else {
        sex_alignment(mean_psvf, sex)
    }
}

/// Segment mean over responses from a restricted participant set.
/// `None` when the subgroup left no responses on the segment.
fn subgroup_mean(
    dataset: &SurveyDataset,
    segment_id: &str,
    participants: Option<&HashSet<&str>>,
) -> Option<f64> {
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for r in dataset.responses_for_segment(segment_id) {
        if let Some(set) = participants {
            if !set.contains(r.participant_id.as_str()) {
                continue;
            }
        }
        sum += f64::from(r.likert);
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn participant_set(
    dataset: &SurveyDataset,
    value: ParticipantValue,
) -> HashSet<&str> {
    dataset
        .participants()
        .iter()
        .filter(|p| value.matches(p))
        .map(|p| p.participant_id.as_str())
        .collect()
}

/// AC for one subgroup. When a participant side is set, segment means are
/// recomputed from that subgroup's responses only; segments without a
/// qualifying response drop out of the denominator.
pub fn average_correspondence(
    dataset: &SurveyDataset,
    key: SubgroupKey,
    opts: &AnalyticsOptions,
) -> Result<ACResult, AnalyticsError> {
    key.validate()?;
    let set = key.participant.map(|v| participant_set(dataset, v));
    let mut n = 0usize;
    let mut aligned = 0usize;
    for seg in dataset.segments() {
        if let Some(sv) = key.singer {
            if !sv.matches(seg) {
                continue;
            }
        }
        let Some(mean) = subgroup_mean(dataset, &seg.segment_id, set.as_ref()) else {
            continue;
        };
        n += 1;
        if aligned_with(mean, seg.singer_sex, opts) {
            aligned += 1;
        }
    }
    if n == 0 {
        return Err(AnalyticsError::EmptySubgroup { key: key.label() });
    }
    Ok(ACResult {
        key,
        n_segments: n,
        ac_percent: 100.0 * aligned as f64 / n as f64,
    })
}

/// Unsure rate for one singer subgroup: fraction of segments whose mean over
/// all valid responses falls in the neutral interval around 0.
pub fn unsure_fraction(
    dataset: &SurveyDataset,
    key: SubgroupKey,
    opts: &AnalyticsOptions,
) -> Result<UnsureResult, AnalyticsError> {
    key.validate()?;
    if key.participant.is_some() {
        return Err(AnalyticsError::InvalidKey(
            "unsure_fraction takes singer dimensions only".into(),
        ));
    }
    let mut n = 0usize;
    let mut unsure = 0usize;
    for seg in dataset.segments() {
        if let Some(sv) = key.singer {
            if !sv.matches(seg) {
                continue;
            }
        }
        let Some(mean) = subgroup_mean(dataset, &seg.segment_id, None) else {
            continue;
        };
        n += 1;
        let inside = if opts.unsure_inclusive {
            mean.abs() <= 0.5
        } else {
            mean.abs() < 0.5
        };
        if inside {
            unsure += 1;
        }
    }
    if n == 0 {
        return Err(AnalyticsError::EmptySubgroup { key: key.label() });
    }
    Ok(UnsureResult {
        key,
        n_segments: n,
        unsure_percent: 100.0 * unsure as f64 / n as f64,
    })
}

/// One AC cross-tabulation: participant subgroups × singer subgroups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTab {
    pub participant_dim: ParticipantDim,
    pub singer_dim: SingerDim,
    pub participant_values: Vec<ParticipantValue>,
    pub singer_values: Vec<SingerValue>,
    /// Participants in each participant subgroup (post-filter membership).
    pub participant_counts: Vec<usize>,
    /// `cells[p][s]`; `None` where the pair has no qualifying segments.
    pub cells: Vec<Vec<Option<ACResult>>>,
}

impl CrossTab {
    /// Participant rows with a value in every singer column. Rows with any
    /// gap are left out of rendered tables (partial coverage is not
    /// comparable across columns), matching the published presentation.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.participant_values.len())
            .filter(|&p| self.cells[p].iter().all(|c| c.is_some()))
            .collect()
    }
}

/// Full cross-tabulation over two dimensions. Cells without qualifying
/// participants or segments are absent rather than zero.
pub fn crosstab(
    dataset: &SurveyDataset,
    participant_dim: ParticipantDim,
    singer_dim: SingerDim,
    opts: &AnalyticsOptions,
) -> CrossTab {
    let participant_values = ParticipantValue::values_of(participant_dim);
    let singer_values = SingerValue::values_of(singer_dim);
    let participant_counts = participant_values
        .iter()
        .map(|v| dataset.participants().iter().filter(|p| v.matches(p)).count())
        .collect();
    let cells = participant_values
        .iter()
        .map(|&pv| {
            singer_values
                .iter()
                .map(|&sv| average_correspondence(dataset, SubgroupKey::cross(pv, sv), opts).ok())
                .collect()
        })
        .collect();
    CrossTab {
        participant_dim,
        singer_dim,
        participant_values,
        singer_values,
        participant_counts,
        cells,
    }
}
