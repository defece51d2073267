use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use psvf_cli::commands;
use psvf_cli::config::RunConfig;
use psvf_core::analytics::ReportFormat;

/// Survey analytics and automatic prediction of perceived singing-voice
/// femininity.
#[derive(Parser)]
#[command(name = "psvf", version, about)]
struct Cli {
    /// Config file (TOML); falls back to $PSVF_CONFIG, then defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the training/fold seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the dataset directory.
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Worker threads; 1 guarantees bit-identical outputs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IngestArgs {
    /// segments.csv
    #[arg(long)]
    segments: PathBuf,
    /// participants.csv
    #[arg(long)]
    participants: PathBuf,
    /// responses.csv
    #[arg(long)]
    responses: PathBuf,
    /// Column-map file for non-canonical headers.
    #[arg(long)]
    column_map: Option<PathBuf>,
    /// Output directory for the canonical dataset.
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Restrict to one table: participant dimension then singer dimension
    /// (e.g. `--dims gender sex`).
    #[arg(long, num_args = 2)]
    dims: Option<Vec<String>>,
    /// Output format(s): markdown, json, csv, or all.
    #[arg(long, default_value = "all")]
    format: String,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Feature cache directory.
    #[arg(long, default_value = "features")]
    cache: PathBuf,
    /// Also compute speed-perturbed variants for training.
    #[arg(long)]
    augment: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "features")]
    cache: PathBuf,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Fraction of training songs held out for validation.
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// How many leading TDNN blocks stay frozen.
    #[arg(long)]
    frozen_blocks: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// A .wav file or a directory of them.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "predictions")]
    out: PathBuf,
    /// Also emit the mean 64-dim embedding per file.
    #[arg(long)]
    embeddings: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json produced by `analyze`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// `survey` (surrogate response data) or `audio` (harmonic corpus).
    #[arg(long)]
    kind: String,
    #[arg(long, default_value = "synth")]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    songs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Validate survey files and write the canonical dataset.
    Ingest(IngestArgs),
    /// Compute AC and Unsure cross-tabulations.
    Analyze(AnalyzeArgs),
    /// Build the log-mel feature cache.
    Featurize(FeaturizeArgs),
    /// Song-grouped k-fold training.
    Train(TrainArgs),
    /// Score audio files with a trained checkpoint.
    Predict(PredictArgs),
    /// Re-render a saved analytics report.
    Report(ReportArgs),
    /// Generate synthetic data (surrogate survey or audio corpus).
    Synth(SynthArgs),
}

fn formats_from(flag: &str) -> Result<Vec<ReportFormat>> {
    if flag.eq_ignore_ascii_case("all") {
        return Ok(vec![
            ReportFormat::Markdown,
            ReportFormat::Json,
            ReportFormat::Csv,
        ]);
    }
    Ok(vec![ReportFormat::from_str(flag)?])
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
        cfg.train.augment.rng_seed = seed;
    }
    if let Some(data) = cli.data {
        cfg.data.dir = data;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }

    match cli.command {
        Command::Ingest(args) => {
            let report = commands::run_ingest(
                &args.segments,
                &args.participants,
                &args.responses,
                args.column_map.as_deref(),
                &args.out,
            )?;
            println!(
                "segments: {}, participants: {} -> {}, responses: {} -> {}",
                report.segments,
                report.raw_participants,
                report.valid_participants,
                report.raw_responses,
                report.valid_responses
            );
            println!(
                "after filtering: participants: {}, responses: {}",
                report.valid_participants, report.valid_responses
            );
        }
        Command::Analyze(args) => {
            let dims = match &args.dims {
                Some(pair) => Some(commands::parse_dims(&pair[0], &pair[1])?),
                None => None,
            };
            let formats = formats_from(&args.format)?;
            let (_, written) = commands::run_analyze(&cfg, dims, &formats, &args.out)?;
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::Featurize(args) => {
            let written = commands::run_featurize(&cfg, &args.cache, args.augment)?;
            println!("cached {written} feature files in {}", args.cache.display());
        }
        Command::Train(args) => {
            if let Some(v) = args.validation_fraction {
                cfg.train.validation_fraction = v;
            }
            if let Some(n) = args.frozen_blocks {
                cfg.model.frozen_blocks = n;
            }
            let summary = commands::run_train(&cfg, &args.cache, &args.out, args.folds)?;
            for fold in &summary.folds {
                println!("fold {}: test MAE {:.4}", fold.fold, fold.test_mae);
            }
            println!(
                "mean MAE {:.4} (std {:.4}) over {} folds",
                summary.mean_mae,
                summary.std_mae,
                summary.folds.len()
            );
        }
        Command::Predict(args) => {
            let predictions = commands::run_predict(
                &cfg,
                &args.checkpoint,
                &args.input,
                &args.out,
                args.embeddings,
            )?;
            for p in &predictions {
                println!("{}\t{:.4}", p.path.display(), p.mean_score);
            }
        }
        Command::Report(args) => {
            let format = ReportFormat::from_str(&args.format)?;
            let path = commands::run_report(&args.report, format, &args.out)?;
            println!("{}", path.display());
        }
        Command::Synth(args) => match args.kind.as_str() {
            "survey" => {
                let report = commands::run_synth_survey(&args.out)?;
                println!(
                    "surrogate survey: {} segments, {} participants, {} responses",
                    report.segments, report.raw_participants, report.raw_responses
                );
            }
            "audio" => {
                let n = commands::run_synth_audio(&args.out, args.songs, args.seed)?;
                println!("synthetic corpus: {n} segments in {}", args.out.display());
            }
            other => anyhow::bail!("unknown synth kind {other:?} (use survey or audio)"),
        },
    }
    Ok(())
}

/// Missing inputs exit with 2, any other failure with 1.
fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    for cause in err.chain() {
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}
