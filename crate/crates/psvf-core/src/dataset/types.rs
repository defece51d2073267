use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;

/// Biological sex of the lead singer, as annotated in the source catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingerSex {
    Female,
    Male,
}

impl SingerSex {
    pub const ALL: [SingerSex; 2] = [SingerSex::Female, SingerSex::Male];
}

impl fmt::Display for SingerSex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingerSex::Female => "female",
            SingerSex::Male => "male",
        })
    }
}

impl FromStr for SingerSex {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" | "f" => Ok(SingerSex::Female),
            "male" | "m" => Ok(SingerSex::Male),
            other => Err(format!("unknown singer sex {other:?}")),
        }
    }
}

/// Singer age groups (the catalog uses 50-64).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SingerAgeGroup {
    #[serde(rename = "20-34")]
    A20_34,
    #[serde(rename = "35-49")]
    A35_49,
    #[serde(rename = "50-64")]
    A50_64,
    #[serde(rename = "65+")]
    A65Plus,
}

impl SingerAgeGroup {
    pub const ALL: [SingerAgeGroup; 4] = [
        SingerAgeGroup::A20_34,
        SingerAgeGroup::A35_49,
        SingerAgeGroup::A50_64,
        SingerAgeGroup::A65Plus,
    ];
}

impl fmt::Display for SingerAgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingerAgeGroup::A20_34 => "20-34",
            SingerAgeGroup::A35_49 => "35-49",
            SingerAgeGroup::A50_64 => "50-64",
            SingerAgeGroup::A65Plus => "65+",
        })
    }
}

impl FromStr for SingerAgeGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "20-34" => Ok(SingerAgeGroup::A20_34),
            "35-49" => Ok(SingerAgeGroup::A35_49),
            "50-64" => Ok(SingerAgeGroup::A50_64),
            "65+" => Ok(SingerAgeGroup::A65Plus),
            other => Err(format!("unknown singer age group {other:?}")),
        }
    }
}

/// Participant age groups (the survey form used 50-65).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParticipantAgeGroup {
    #[serde(rename = "20-34")]
    A20_34,
    #[serde(rename = "35-49")]
    A35_49,
    #[serde(rename = "50-65")]
    A50_65,
    #[serde(rename = "65+")]
    A65Plus,
}

impl ParticipantAgeGroup {
    pub const ALL: [ParticipantAgeGroup; 4] = [
        ParticipantAgeGroup::A20_34,
        ParticipantAgeGroup::A35_49,
        ParticipantAgeGroup::A50_65,
        ParticipantAgeGroup::A65Plus,
    ];
}

impl fmt::Display for ParticipantAgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParticipantAgeGroup::A20_34 => "20-34",
            ParticipantAgeGroup::A35_49 => "35-49",
            ParticipantAgeGroup::A50_65 => "50-65",
            ParticipantAgeGroup::A65Plus => "65+",
        })
    }
}

impl FromStr for ParticipantAgeGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "20-34" => Ok(ParticipantAgeGroup::A20_34),
            "35-49" => Ok(ParticipantAgeGroup::A35_49),
            "50-65" => Ok(ParticipantAgeGroup::A50_65),
            "65+" => Ok(ParticipantAgeGroup::A65Plus),
            other => Err(format!("unknown participant age group {other:?}")),
        }
    }
}

/// Track / participant languages: French, English, Spanish, Mandarin, German.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Fr,
    En,
    Sp,
    Man,
    Ge,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::Fr,
        Language::En,
        Language::Sp,
        Language::Man,
        Language::Ge,
    ];
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Fr => "fr",
            Language::En => "en",
            Language::Sp => "sp",
            Language::Man => "man",
            Language::Ge => "ge",
        })
    }
}

impl FromStr for Language {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fr" => Ok(Language::Fr),
            "en" => Ok(Language::En),
            "sp" => Ok(Language::Sp),
            "man" => Ok(Language::Man),
            "ge" => Ok(Language::Ge),
            other => Err(format!("unknown language {other:?}")),
        }
    }
}

/// Participant gender as reported on the survey form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    /// "other / unspecified" on the form.
    Other,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Female, Gender::Male, Gender::Other];
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Other => "other",
        })
    }
}

impl FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" | "f" => Ok(Gender::Female),
            "male" | "m" => Ok(Gender::Male),
            "other" | "other/unspecified" | "unspecified" | "" => Ok(Gender::Other),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

/// Maps a Likert answer to its integer value in `-2..=2`.
///
/// Accepts the five canonical labels (case-insensitive, trimmed) plus an
/// integer fast-path; anything else is `UnknownLabel` so vocabulary drift
/// fails loudly.
pub fn parse_likert(label: &str) -> Result<i8, DatasetError> {
    let trimmed = label.trim();
    if let Ok(v) = trimmed.parse::<i8>() {
        if (-2..=2).contains(&v) {
            return Ok(v);
        }
        return Err(DatasetError::UnknownLabel {
            label: label.to_string(),
        });
    }
    match trimmed.to_ascii_lowercase().as_str() {
        "definitely feminine" => Ok(2),
        "rather feminine" => Ok(1),
        "i don't know" => Ok(0),
        "rather masculine" => Ok(-1),
        "definitely masculine" => Ok(-2),
        _ => Err(DatasetError::UnknownLabel {
            label: label.to_string(),
        }),
    }
}

/// One 3-second vocal segment drawn from a song.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub segment_id: String,
    pub song_id: String,
    pub singer_sex: SingerSex,
    pub singer_age_group: SingerAgeGroup,
    pub language: Language,
    pub start_time: f64,
    pub duration: f64,
    pub audio_ref: Option<String>,
    pub stem_ref: Option<String>,
}

/// One survey participant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantMeta {
    pub participant_id: String,
    pub gender: Gender,
    pub age_group: ParticipantAgeGroup,
    /// May be empty (unspecified on the form).
    pub languages: BTreeSet<Language>,
    pub reported_difficulty: bool,
}

/// One Likert answer by one participant on one segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub participant_id: String,
    pub segment_id: String,
    /// Integer in `-2..=2`; positive is feminine.
    pub likert: i8,
    pub recognized_singer: bool,
}

/// The full survey: segments, participants, and responses with referential
/// integrity. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDataset {
    segments: Vec<SegmentMeta>,
    participants: Vec<ParticipantMeta>,
    responses: Vec<Response>,
    segment_index: HashMap<String, usize>,
    participant_index: HashMap<String, usize>,
    /// Response indices per segment, in input order.
    responses_by_segment: HashMap<String, Vec<usize>>,
}

impl SurveyDataset {
    /// Builds a dataset, enforcing every type invariant: unique ids, resolvable
    /// foreign keys, at most 6 segments per song, likert range, duration > 0.
    pub fn new(
        segments: Vec<SegmentMeta>,
        participants: Vec<ParticipantMeta>,
        responses: Vec<Response>,
    ) -> Result<Self, DatasetError> {
        let mut segment_index = HashMap::with_capacity(segments.len());
        let mut per_song: HashMap<&str, usize> = HashMap::new();
        for (i, seg) in segments.iter().enumerate() {
            if segment_index.insert(seg.segment_id.clone(), i).is_some() {
                return Err(DatasetError::DuplicateId {
                    kind: "segment",
                    id: seg.segment_id.clone(),
                });
            }
            if !seg.duration.is_finite() || seg.duration <= 0.0 {
                return Err(DatasetError::BadDuration {
                    segment_id: seg.segment_id.clone(),
                    duration: seg.duration,
                });
            }
            *per_song.entry(seg.song_id.as_str()).or_insert(0) += 1;
        }
        for (song, count) in per_song {
            if count > 6 {
                return Err(DatasetError::TooManySegments {
                    song_id: song.to_string(),
                    count,
                });
            }
        }

        let mut participant_index = HashMap::with_capacity(participants.len());
        for (i, p) in participants.iter().enumerate() {
            if participant_index
                .insert(p.participant_id.clone(), i)
                .is_some()
            {
                return Err(DatasetError::DuplicateId {
                    kind: "participant",
                    id: p.participant_id.clone(),
                });
            }
        }

        let mut seen_pairs: HashSet<(usize, usize)> = HashSet::with_capacity(responses.len());
        let mut responses_by_segment: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, r) in responses.iter().enumerate() {
            if !(-2..=2).contains(&r.likert) {
                return Err(DatasetError::UnknownLabel {
                    label: r.likert.to_string(),
                });
            }
            let pi = *participant_index.get(&r.participant_id).ok_or_else(|| {
                DatasetError::DanglingForeignKey {
                    kind: "participant",
                    id: r.participant_id.clone(),
                }
            })?;
            let si = *segment_index.get(&r.segment_id).ok_or_else(|| {
                DatasetError::DanglingForeignKey {
                    kind: "segment",
                    id: r.segment_id.clone(),
                }
            })?;
            if !seen_pairs.insert((pi, si)) {
                return Err(DatasetError::DuplicateResponse {
                    participant: r.participant_id.clone(),
                    segment: r.segment_id.clone(),
                });
            }
            responses_by_segment
                .entry(r.segment_id.clone())
                .or_default()
                .push(i);
        }

        Ok(SurveyDataset {
            segments,
            participants,
            responses,
            segment_index,
            participant_index,
            responses_by_segment,
        })
    }

    pub fn segments(&self) -> &[SegmentMeta] {
        &self.segments
    }

    pub fn participants(&self) -> &[ParticipantMeta] {
        &self.participants
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn segment(&self, segment_id: &str) -> Option<&SegmentMeta> {
        self.segment_index.get(segment_id).map(|&i| &self.segments[i])
    }

    pub fn participant(&self, participant_id: &str) -> Option<&ParticipantMeta> {
        self.participant_index
            .get(participant_id)
            .map(|&i| &self.participants[i])
    }

    /// Responses for one segment, in input order.
    pub fn responses_for_segment(&self, segment_id: &str) -> impl Iterator<Item = &Response> {
        self.responses_by_segment
            .get(segment_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.responses[i])
    }

    /// Distinct song ids in first-appearance order.
    pub fn song_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for seg in &self.segments {
            if seen.insert(seg.song_id.as_str()) {
                out.push(seg.song_id.clone());
            }
        }
        out
    }

    /// Drops responses flagged `recognized_singer` and participants flagged
    /// `reported_difficulty` (together with all of their responses). Segments
    /// are retained even if left without responses. Idempotent.
    pub fn filter_valid(&self) -> SurveyDataset {
        let excluded: HashSet<&str> = self
            .participants
            .iter()
            .filter(|p| p.reported_difficulty)
            .map(|p| p.participant_id.as_str())
            .collect();
        let participants: Vec<ParticipantMeta> = self
            .participants
            .iter()
            .filter(|p| !p.reported_difficulty)
            .cloned()
            .collect();
        let responses: Vec<Response> = self
            .responses
            .iter()
            .filter(|r| !r.recognized_singer && !excluded.contains(r.participant_id.as_str()))
            .cloned()
            .collect();
        SurveyDataset::new(self.segments.clone(), participants, responses)
            .expect("filtering preserves integrity")
    }
}
