use thiserror::Error;

/// Errors raised while parsing, validating, or aggregating survey data.
#[derive(Debug, Error)]
pub enum DatasetError {
    /// A Likert answer that is not one of the five canonical labels or an
    /// integer in `-2..=2`.
    #[error("unknown likert label: {label:?}")]
    UnknownLabel { label: String },

    #[error("{file}: row {row}, column {column:?}: {reason}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("{file}: missing required column {column:?}")]
    MissingColumn { file: String, column: String },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("duplicate response for (participant {participant:?}, segment {segment:?})")]
    DuplicateResponse { participant: String, segment: String },

    #[error("response references unknown {kind} {id:?}")]
    DanglingForeignKey { kind: &'static str, id: String },

    #[error("song {song_id:?} has {count} segments (at most 6 allowed)")]
    TooManySegments { song_id: String, count: usize },

    #[error("segment {segment_id:?} has non-positive duration {duration}")]
    BadDuration { segment_id: String, duration: f64 },

    #[error("segment {segment_id:?} has no valid responses")]
    NoResponses { segment_id: String },

    #[error("unknown segment {segment_id:?}")]
    UnknownSegment { segment_id: String },

    #[error("bad column_map line {line}: {reason}")]
    BadColumnMap { line: usize, reason: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
