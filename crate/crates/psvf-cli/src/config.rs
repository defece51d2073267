//! Run configuration: one TOML file merged with command-line overrides,
//! fully resolved before any work starts and copied verbatim into every
//! output directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use psvf_core::features::MelConfig;
use psvf_core::model::TdnnConfig;
use psvf_core::train::TrainConfig;

/// Where the canonical survey files live and how to adapt foreign layouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DataConfig {
    /// Directory holding segments.csv / participants.csv / responses.csv.
    pub dir: PathBuf,
    /// Optional column_map file for non-canonical headers.
    pub column_map: Option<PathBuf>,
    /// Base directory for relative audio_ref/stem_ref paths
    /// (defaults to `dir`).
    pub audio_base: Option<PathBuf>,
}

/// Presentation knobs for the analytics tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AnalyticsConfig {
    pub tie_counts_as_aligned: bool,
    pub unsure_inclusive: bool,
}

impl AnalyticsConfig {
    pub fn options(&self) -> psvf_core::analytics::AnalyticsOptions {
        psvf_core::analytics::AnalyticsOptions {
            tie_counts_as_aligned: self.tie_counts_as_aligned,
            unsure_inclusive: self.unsure_inclusive,
        }
    }
}

/// The merged run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Worker threads; 1 (the default) guarantees bit-identical outputs.
    pub threads: usize,
    pub data: DataConfig,
    pub analytics: AnalyticsConfig,
    pub mel: MelConfig,
    pub model: TdnnConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("out"),
            threads: 1,
            data: DataConfig::default(),
            analytics: AnalyticsConfig::default(),
            mel: MelConfig::default(),
            model: TdnnConfig::published_default(),
            train: TrainConfig::default(),
        }
    }
}

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "PSVF_CONFIG";

impl RunConfig {
    /// Loads from an explicit path, else `$PSVF_CONFIG`, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let chosen: Option<PathBuf> = path
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        match chosen {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("bad config {}", p.display()))
            }
            None => Ok(RunConfig::default()),
        }
    }

    pub fn audio_base(&self) -> PathBuf {
        self.data
            .audio_base
            .clone()
            .unwrap_or_else(|| self.data.dir.clone())
    }

    /// Writes the resolved config and a tool-version stamp into `dir`.
    pub fn stamp(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let toml = toml::to_string_pretty(self).context("serialize resolved config")?;
        std::fs::write(dir.join("resolved-config.toml"), toml)?;
        std::fs::write(
            dir.join("VERSION"),
            format!("psvf {}\n", env!("CARGO_PKG_VERSION")),
        )?;
        Ok(())
    }
}
