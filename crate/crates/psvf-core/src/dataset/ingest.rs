use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::types::{
    parse_likert, Gender, Language, ParticipantAgeGroup, ParticipantMeta, Response, SegmentMeta,
    SingerAgeGroup, SingerSex, SurveyDataset,
};
use super::DatasetError;

/// Locations of the three survey files.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub segments: PathBuf,
    pub participants: PathBuf,
    pub responses: PathBuf,
}

impl DatasetPaths {
    /// Canonical file names under one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            segments: dir.join("segments.csv"),
            participants: dir.join("participants.csv"),
            responses: dir.join("responses.csv"),
        }
    }
}

/// Maps canonical field names to source column names, per file.
///
/// The canonical schema needs no map; a foreign layout is adapted with a
/// small key-value file of `[section]` blocks:
///
/// ```text
/// [segments]
/// segment_id = "SegID"
/// singer_sex = "sex"
/// ```
///
/// Unmapped fields fall back to their canonical names.
#[derive(Debug, Clone, Default)]
pub struct ColumnMap {
    map: HashMap<(String, String), String>,
}

impl ColumnMap {
    /// Identity map: every canonical field reads from its own name.
    pub fn identity() -> Self {
        ColumnMap::default()
    }

    /// Parses the `[file] canonical = "source"` format. Quotes are optional.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut map = HashMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| DatasetError::BadColumnMap {
                line: lineno + 1,
                reason: "expected `field = column`".into(),
            })?;
            if section.is_empty() {
                return Err(DatasetError::BadColumnMap {
                    line: lineno + 1,
                    reason: "field mapping before any [file] section".into(),
                });
            }
            let value = value.trim().trim_matches('"').to_string();
            map.insert((section.clone(), key.trim().to_string()), value);
        }
        Ok(ColumnMap { map })
    }

    /// Loads a column map from a file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn source(&self, file: &str, canonical: &str) -> String {
        self.map
            .get(&(file.to_string(), canonical.to_string()))
            .cloned()
            .unwrap_or_else(|| canonical.to_string())
    }
}

struct Sheet {
    file: String,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Sheet {
    fn read(path: &Path) -> Result<Self, DatasetError> {
        let file = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => {
                    DatasetError::Io(std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!("cannot open {file}"),
                    ))
                }
                _ => DatasetError::Csv(e),
            })?;
        let headers = reader
            .headers()?
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>();
        let rows = reader.records().collect::<Result<Vec<_>, _>>()?;
        Ok(Sheet { file, headers, rows })
    }

    fn column(&self, name: &str) -> Result<usize, DatasetError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn {
                file: self.file.clone(),
                column: name.to_string(),
            })
    }

    fn get<'a>(&self, row: &'a csv::StringRecord, idx: usize) -> &'a str {
        row.get(idx).unwrap_or("")
    }
}

fn parse_err(sheet: &Sheet, row: usize, column: &str, reason: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        file: sheet.file.clone(),
        row: row + 2, // header is row 1
        column: column.to_string(),
        reason: reason.into(),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" | "" => Ok(false),
        other => Err(format!("expected 0/1 boolean, got {other:?}")),
    }
}

fn opt_path(s: &str) -> Option<String> {
    let t = s.trim();
    if t.is_empty() {
        None
    } else {
        Some(t.to_string())
    }
}

/// Reads the three survey files into a validated [`SurveyDataset`].
///
/// Raw rows are preserved: `recognized_singer` and `reported_difficulty`
/// flags pass through unfiltered so `filter_valid` stays a separate step.
pub fn ingest(paths: &DatasetPaths, column_map: &ColumnMap) -> Result<SurveyDataset, DatasetError> {
    // segments.csv
    let sheet = Sheet::read(&paths.segments)?;
    let col = |name: &str| sheet.column(&column_map.source("segments", name));
    let (c_id, c_song, c_sex, c_age, c_lang, c_start, c_dur) = (
        col("segment_id")?,
        col("song_id")?,
        col("singer_sex")?,
        col("singer_age_group")?,
        col("language")?,
        col("start_time")?,
        col("duration")?,
    );
    // Optional columns: absent entirely is the same as empty.
    let c_audio = sheet.column(&column_map.source("segments", "audio_ref")).ok();
    let c_stem = sheet.column(&column_map.source("segments", "stem_ref")).ok();
    let mut segments = Vec::with_capacity(sheet.rows.len());
    for (i, row) in sheet.rows.iter().enumerate() {
        let start_time: f64 = sheet
            .get(row, c_start)
            .parse()
            .map_err(|_| parse_err(&sheet, i, "start_time", "not a number"))?;
        if start_time < 0.0 {
            return Err(parse_err(&sheet, i, "start_time", "negative"));
        }
        segments.push(SegmentMeta {
            segment_id: sheet.get(row, c_id).to_string(),
            song_id: sheet.get(row, c_song).to_string(),
            singer_sex: SingerSex::from_str(sheet.get(row, c_sex))
                .map_err(|e| parse_err(&sheet, i, "singer_sex", e))?,
            singer_age_group: SingerAgeGroup::from_str(sheet.get(row, c_age))
                .map_err(|e| parse_err(&sheet, i, "singer_age_group", e))?,
            language: Language::from_str(sheet.get(row, c_lang))
                .map_err(|e| parse_err(&sheet, i, "language", e))?,
            start_time,
            duration: sheet
                .get(row, c_dur)
                .parse()
                .map_err(|_| parse_err(&sheet, i, "duration", "not a number"))?,
            audio_ref: c_audio.and_then(|c| opt_path(sheet.get(row, c))),
            stem_ref: c_stem.and_then(|c| opt_path(sheet.get(row, c))),
        });
    }

    // participants.csv
    let sheet = Sheet::read(&paths.participants)?;
    let col = |name: &str| sheet.column(&column_map.source("participants", name));
    let (c_id, c_gender, c_age, c_langs, c_diff) = (
        col("participant_id")?,
        col("gender")?,
        col("age_group")?,
        col("languages")?,
        col("reported_difficulty")?,
    );
    let mut participants = Vec::with_capacity(sheet.rows.len());
    for (i, row) in sheet.rows.iter().enumerate() {
        let mut languages = BTreeSet::new();
        for part in sheet.get(row, c_langs).split('|') {
            if part.trim().is_empty() {
                continue;
            }
            languages.insert(
                Language::from_str(part).map_err(|e| parse_err(&sheet, i, "languages", e))?,
            );
        }
        participants.push(ParticipantMeta {
            participant_id: sheet.get(row, c_id).to_string(),
            gender: Gender::from_str(sheet.get(row, c_gender))
                .map_err(|e| parse_err(&sheet, i, "gender", e))?,
            age_group: ParticipantAgeGroup::from_str(sheet.get(row, c_age))
                .map_err(|e| parse_err(&sheet, i, "age_group", e))?,
            languages,
            reported_difficulty: parse_bool(sheet.get(row, c_diff))
                .map_err(|e| parse_err(&sheet, i, "reported_difficulty", e))?,
        });
    }

    // responses.csv
    let sheet = Sheet::read(&paths.responses)?;
    let col = |name: &str| sheet.column(&column_map.source("responses", name));
    let (c_pid, c_sid, c_likert, c_recog) = (
        col("participant_id")?,
        col("segment_id")?,
        col("likert")?,
        col("recognized_singer")?,
    );
    let mut responses = Vec::with_capacity(sheet.rows.len());
    for (i, row) in sheet.rows.iter().enumerate() {
        let likert = parse_likert(sheet.get(row, c_likert))
            .map_err(|e| parse_err(&sheet, i, "likert", e.to_string()))?;
        responses.push(Response {
            participant_id: sheet.get(row, c_pid).to_string(),
            segment_id: sheet.get(row, c_sid).to_string(),
            likert,
            recognized_singer: parse_bool(sheet.get(row, c_recog))
                .map_err(|e| parse_err(&sheet, i, "recognized_singer", e))?,
        });
    }

    SurveyDataset::new(segments, participants, responses)
}

/// Writes a dataset back out in the canonical three-file schema.
///
/// `ingest(write_canonical(d))` round-trips to an equal dataset.
pub fn write_canonical(dataset: &SurveyDataset, dir: impl AsRef<Path>) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("segments.csv"))?;
    w.write_record([
        "segment_id",
        "song_id",
        "singer_sex",
        "singer_age_group",
        "language",
        "start_time",
        "duration",
        "audio_ref",
        "stem_ref",
    ])?;
    for s in dataset.segments() {
        w.write_record([
            s.segment_id.as_str(),
            s.song_id.as_str(),
            &s.singer_sex.to_string(),
            &s.singer_age_group.to_string(),
            &s.language.to_string(),
            &format!("{}", s.start_time),
            &format!("{}", s.duration),
            s.audio_ref.as_deref().unwrap_or(""),
            s.stem_ref.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("participants.csv"))?;
    w.write_record([
        "participant_id",
        "gender",
        "age_group",
        "languages",
        "reported_difficulty",
    ])?;
    for p in dataset.participants() {
        let langs = p
            .languages
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("|");
        w.write_record([
            p.participant_id.as_str(),
            &p.gender.to_string(),
            &p.age_group.to_string(),
            &langs,
            if p.reported_difficulty { "1" } else { "0" },
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("responses.csv"))?;
    w.write_record(["participant_id", "segment_id", "likert", "recognized_singer"])?;
    for r in dataset.responses() {
        w.write_record([
            r.participant_id.as_str(),
            r.segment_id.as_str(),
            &r.likert.to_string(),
            if r.recognized_singer { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}
