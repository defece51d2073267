//! Average Correspondence (AC) and Unsure-rate analytics over singer and
//! participant subgroups, with Markdown/JSON/CSV report emission shaped like
//! the survey's published cross-tabulations.

mod compute;
mod report;

pub use compute::{
    average_correspondence, crosstab, sex_alignment, unsure_fraction, ACResult, AnalyticsError,
    AnalyticsOptions, CrossTab, ParticipantDim, ParticipantValue, SingerDim, SingerValue,
    SubgroupKey, UnsureResult,
};
pub use report::{
    build_report, dataset_hash, render_report, AnalyticsReport, Provenance, ReportFormat,
    UnsureTable,
};
