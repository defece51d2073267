//! Library surface of the `psvf` command-line tool: run configuration and
//! the subcommand implementations, usable directly from integration tests.

pub mod commands;
pub mod config;

pub use commands::{
    load_dataset, load_feature_store, parse_dims, run_analyze, run_featurize, run_ingest,
    run_predict, run_report, run_synth_audio, run_synth_survey, run_train, FilePrediction,
    IngestReport,
};
pub use config::{AnalyticsConfig, DataConfig, RunConfig, CONFIG_ENV};
