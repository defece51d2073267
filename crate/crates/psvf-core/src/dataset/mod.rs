//! Survey dataset: segments, participants, Likert responses.
//!
//! Ingests delimited files (canonical schema or a `column_map`-adapted
//! foreign schema), enforces referential integrity, applies the validity
//! filters (singer recognized, reported difficulty), and aggregates
//! responses into per-segment PSVF scores.

mod error;
mod ingest;
mod score;
mod types;

pub use error::DatasetError;
pub use ingest::{ingest, write_canonical, ColumnMap, DatasetPaths};
pub use score::{all_scores, segment_mean, SegmentScore};
pub use types::{
    parse_likert, Gender, Language, ParticipantAgeGroup, ParticipantMeta, Response, SegmentMeta,
    SingerAgeGroup, SingerSex, SurveyDataset,
};
