use serde::{Deserialize, Serialize};

use super::compute::{
    crosstab, unsure_fraction, AnalyticsError, AnalyticsOptions, CrossTab, ParticipantDim,
    SingerDim, SingerValue, SubgroupKey, UnsureResult,
};
use crate::dataset::SurveyDataset;

/// Report provenance: enough to tell which data and knobs produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_hash: String,
    pub n_segments: usize,
    pub n_participants: usize,
    pub n_responses: usize,
    pub tie_counts_as_aligned: bool,
    pub unsure_inclusive: bool,
}

/// The Unsure row over every singer subgroup (sex, age, language).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnsureTable {
    pub entries: Vec<(String, Option<UnsureResult>)>,
}

/// Full analytics output: AC cross-tabulations plus the Unsure row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub provenance: Provenance,
    pub ac_tables: Vec<CrossTab>,
    pub unsure: UnsureTable,
}

/// FNV-1a over the canonical field serialization; cheap content fingerprint
/// for provenance, not a cryptographic hash.
pub fn dataset_hash(dataset: &SurveyDataset) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for s in dataset.segments() {
        eat(s.segment_id.as_bytes());
        eat(s.song_id.as_bytes());
        eat(s.singer_sex.to_string().as_bytes());
        eat(s.singer_age_group.to_string().as_bytes());
        eat(s.language.to_string().as_bytes());
        eat(&s.start_time.to_le_bytes());
        eat(&s.duration.to_le_bytes());
    }
    for p in dataset.participants() {
        eat(p.participant_id.as_bytes());
        eat(p.gender.to_string().as_bytes());
        eat(p.age_group.to_string().as_bytes());
        for l in &p.languages {
            eat(l.to_string().as_bytes());
        }
        eat(&[u8::from(p.reported_difficulty)]);
    }
    for r in dataset.responses() {
        eat(r.participant_id.as_bytes());
        eat(r.segment_id.as_bytes());
        eat(&r.likert.to_le_bytes());
        eat(&[u8::from(r.recognized_singer)]);
    }
    format!("{h:016x}")
}

/// The three published pairings: gender × sex, age × age, language × language.
pub const DEFAULT_DIMS: [(ParticipantDim, SingerDim); 3] = [
    (ParticipantDim::Gender, SingerDim::Sex),
    (ParticipantDim::AgeGroup, SingerDim::AgeGroup),
    (ParticipantDim::Language, SingerDim::Language),
];

/// Builds the full report. `dims = None` produces the three default tables.
pub fn build_report(
    dataset: &SurveyDataset,
    opts: &AnalyticsOptions,
    dims: Option<(ParticipantDim, SingerDim)>,
) -> AnalyticsReport {
    let pairs: Vec<(ParticipantDim, SingerDim)> = match dims {
        Some(pair) => vec![pair],
        None => DEFAULT_DIMS.to_vec(),
    };
    let ac_tables = pairs
        .iter()
        .map(|&(p, s)| crosstab(dataset, p, s, opts))
        .collect();
    let mut entries = Vec::new();
    for dim in [SingerDim::Sex, SingerDim::AgeGroup, SingerDim::Language] {
        for value in SingerValue::values_of(dim) {
            let r = unsure_fraction(dataset, SubgroupKey::singer(value), opts).ok();
            entries.push((value.to_string(), r));
        }
    }
    AnalyticsReport {
        provenance: Provenance {
            dataset_hash: dataset_hash(dataset),
            n_segments: dataset.segments().len(),
            n_participants: dataset.participants().len(),
            n_responses: dataset.responses().len(),
            tie_counts_as_aligned: opts.tie_counts_as_aligned,
            unsure_inclusive: opts.unsure_inclusive,
        },
        ac_tables,
        unsure: UnsureTable { entries },
    }
}

/// Output format for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = AnalyticsError;
    fn from_str(s: &str) -> Result<Self, AnalyticsError> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(AnalyticsError::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Half-up rounding to one decimal, applied only at presentation time.
pub(crate) fn round1(x: f64) -> f64 {
    (x * 10.0 + 0.5).floor() / 10.0
}

fn fmt1(x: f64) -> String {
    format!("{:.1}", round1(x))
}

fn dim_label_p(dim: ParticipantDim) -> &'static str {
    match dim {
        ParticipantDim::Gender => "gender",
        ParticipantDim::AgeGroup => "age group",
        ParticipantDim::Language => "language",
    }
}

fn dim_label_s(dim: SingerDim) -> &'static str {
    match dim {
        SingerDim::Sex => "sex",
        SingerDim::AgeGroup => "age group",
        SingerDim::Language => "language",
    }
}

fn singer_row_label(dim: SingerDim, value: &SingerValue) -> String {
    match dim {
        SingerDim::Language => format!("AC {value} tracks"),
        _ => format!("AC {value} singers"),
    }
}

fn markdown(report: &AnalyticsReport) -> String {
    let mut out = String::new();
    out.push_str("# PSVF survey analytics\n\n");
    out.push_str(&format!(
        "dataset {} — {} segments, {} participants, {} responses\n\n",
        report.provenance.dataset_hash,
        report.provenance.n_segments,
        report.provenance.n_participants,
        report.provenance.n_responses
    ));
    for tab in &report.ac_tables {
        // Participant subgroups as columns, singer subgroups as rows,
        // mirroring the published layout.
        let rows = tab.complete_rows();
        out.push_str(&format!(
            "## AC (%) by participant {} × singer {}\n\n",
            dim_label_p(tab.participant_dim),
            dim_label_s(tab.singer_dim)
        ));
        out.push_str("| |");
        for &p in &rows {
            out.push_str(&format!(" **{}** |", tab.participant_values[p]));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &rows {
            out.push_str("---|");
        }
        out.push('\n');
        out.push_str("| **nb. participants** |");
        for &p in &rows {
            out.push_str(&format!(" {} |", tab.participant_counts[p]));
        }
        out.push('\n');
        for (s, sv) in tab.singer_values.iter().enumerate() {
            out.push_str(&format!("| **{}** |", singer_row_label(tab.singer_dim, sv)));
            for &p in &rows {
                match &tab.cells[p][s] {
                    Some(cell) => out.push_str(&format!(" {} |", fmt1(cell.ac_percent))),
                    None => out.push_str(" — |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out.push_str("## Unsure (%) by singer subgroup\n\n");
    out.push_str("| |");
    for (label, _) in &report.unsure.entries {
        out.push_str(&format!(" **{label}** |"));
    }
    out.push_str("\n|---|");
    for _ in &report.unsure.entries {
        out.push_str("---|");
    }
    out.push_str("\n| **Unsure (%)** |");
    for (_, entry) in &report.unsure.entries {
        match entry {
            Some(r) => out.push_str(&format!(" {} |", fmt1(r.unsure_percent))),
            None => out.push_str(" — |"),
        }
    }
    out.push('\n');
    out
}

fn csv_bytes(report: &AnalyticsReport) -> Result<Vec<u8>, AnalyticsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "table",
        "participant_dim",
        "participant_value",
        "singer_dim",
        "singer_value",
        "n_segments",
        "value_percent",
    ];
    w.write_record(header).map_err(io_to_json)?;
    for tab in &report.ac_tables {
        for (p, pv) in tab.participant_values.iter().enumerate() {
            for (s, sv) in tab.singer_values.iter().enumerate() {
                if let Some(cell) = &tab.cells[p][s] {
                    w.write_record([
                        "ac",
                        dim_label_p(tab.participant_dim),
                        &pv.to_string(),
                        dim_label_s(tab.singer_dim),
                        &sv.to_string(),
                        &cell.n_segments.to_string(),
                        &fmt1(cell.ac_percent),
                    ])
                    .map_err(io_to_json)?;
                }
            }
        }
    }
    for (label, entry) in &report.unsure.entries {
        if let Some(r) = entry {
            w.write_record([
                "unsure",
                "",
                "",
                "singer",
                label,
                &r.n_segments.to_string(),
                &fmt1(r.unsure_percent),
            ])
            .map_err(io_to_json)?;
        }
    }
    w.into_inner()
        .map_err(|e| AnalyticsError::UnsupportedFormat(e.to_string()))
}

fn io_to_json(e: csv::Error) -> AnalyticsError {
    AnalyticsError::UnsupportedFormat(e.to_string())
}

/// Deterministic emission of a report. Markdown mirrors the published table
/// layout; JSON round-trips the in-memory structure; CSV is long-format for
/// external plotting. Percentages are rounded half-up to one decimal.
pub fn render_report(
    report: &AnalyticsReport,
    format: ReportFormat,
) -> Result<Vec<u8>, AnalyticsError> {
    match format {
        ReportFormat::Markdown => Ok(markdown(report).into_bytes()),
        ReportFormat::Json => Ok(serde_json::to_vec_pretty(report)?),
        ReportFormat::Csv => csv_bytes(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SurveyDataset;

    fn empty_dataset() -> SurveyDataset {
        SurveyDataset::new(vec![], vec![], vec![]).unwrap()
    }

    #[test]
    fn rounding_is_half_up_at_one_decimal() {
        assert_eq!(round1(96.65), 96.7);
        assert_eq!(round1(96.64), 96.6);
        assert_eq!(round1(2.25), 2.3);
        assert_eq!(round1(0.0), 0.0);
        assert_eq!(fmt1(82.8333), "82.8");
    }

    #[test]
    fn empty_report_renders_every_format() {
        let report = build_report(&empty_dataset(), &AnalyticsOptions::default(), None);
        for fmt in [ReportFormat::Markdown, ReportFormat::Json, ReportFormat::Csv] {
            let bytes = render_report(&report, fmt).unwrap();
            assert!(!bytes.is_empty());
        }
    }

    #[test]
    fn json_round_trips_structurally() {
        let report = build_report(&empty_dataset(), &AnalyticsOptions::default(), None);
        let bytes = render_report(&report, ReportFormat::Json).unwrap();
        let back: AnalyticsReport = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn format_parsing_rejects_unknown() {
        use std::str::FromStr;
        assert!(ReportFormat::from_str("markdown").is_ok());
        assert!(matches!(
            ReportFormat::from_str("xlsx"),
            Err(AnalyticsError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn hash_is_content_sensitive() {
        let a = empty_dataset();
        let h1 = dataset_hash(&a);
        let h2 = dataset_hash(&a);
        assert_eq!(h1, h2);
    }
}
