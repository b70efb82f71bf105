use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sstub_miner::pipeline::{self, PipelineError, ReportFormat, RunConfig, StageName};

const EXIT_CONFIG_ERROR: u8 = 2;
const EXIT_DATASET_ERROR: u8 = 3;
const EXIT_ZERO_PROCESSED: u8 = 4;

#[derive(Parser)]
#[command(name = "sstub-miner", about = "Trace SStuB records to their origin commits and analyze their life-cycle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: ingest, mine, analyze, flagcheck, report.
    Run(CommonArgs),
    /// Parse and validate the dataset file.
    Ingest(CommonArgs),
    /// Trace ingested records to their origin commits.
    Mine(CommonArgs),
    /// Compute lifecycle records from mining results.
    Analyze(CommonArgs),
    /// Run the configured static analyzer over the buggy files.
    Flagcheck(CommonArgs),
    /// Assemble the final report from stage artifacts.
    Report(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file mirroring the run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the dataset path from the config file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Override the repository cache directory.
    #[arg(long)]
    repos_dir: Option<PathBuf>,
    /// Clone repositories missing from the cache.
    #[arg(long)]
    clone_missing: bool,
    /// Worker count for the mine and flagcheck stages.
    #[arg(long)]
    jobs: Option<usize>,
    /// Report destination: a file path, or "-" for standard output.
    #[arg(long)]
    output: Option<String>,
    /// Comma-separated report formats (json,csv).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

impl CommonArgs {
    fn load_config(&self) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| format!("cannot read config {}: {e}", self.config.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| format!("invalid config {}: {e}", self.config.display()))?;

        if let Some(dataset) = &self.dataset {
            config.dataset_path = dataset.clone();
        }
        if let Some(repos_dir) = &self.repos_dir {
            config.repos_dir = repos_dir.clone();
        }
        if self.clone_missing {
            config.clone_missing = true;
        }
        if let Some(jobs) = self.jobs {
            config.jobs = jobs;
        }
        if let Some(formats) = &self.format {
            config.report_formats = formats
                .iter()
                .map(|f| match f.as_str() {
                    "json" => Ok(ReportFormat::Json),
                    "csv" => Ok(ReportFormat::Csv),
                    other => Err(format!("unknown report format {other:?}")),
                })
                .collect::<Result<_, _>>()?;
        }
        if let Ok(git) = std::env::var("SSTUB_MINER_GIT") {
            if !git.is_empty() {
                config.git_binary = git;
            }
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = match &cli.command {
        Command::Run(args) => (None, args),
        Command::Ingest(args) => (Some(StageName::Ingest), args),
        Command::Mine(args) => (Some(StageName::Mine), args),
        Command::Analyze(args) => (Some(StageName::Analyze), args),
        Command::Flagcheck(args) => (Some(StageName::Flagcheck), args),
        Command::Report(args) => (Some(StageName::Report), args),
    };

    let config = match args.load_config() {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };

    let result = match stage {
        None => pipeline::cmd_run(&config).map(Some),
        Some(stage) => pipeline::cmd_stage(stage, &config),
    };

    let report = match result {
        Ok(report) => report,
        Err(PipelineError::Config(message)) => {
            eprintln!("error: configuration: {message}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
        Err(PipelineError::Dataset(e)) => {
            eprintln!("error: dataset: {e}");
            return ExitCode::from(EXIT_DATASET_ERROR);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    if let Some(report) = report {
        match emit_report(&config, &report, args.output.as_deref()) {
            Ok(()) => {}
            Err(message) => {
                eprintln!("error: {message}");
                return ExitCode::FAILURE;
            }
        }
        // A run that processed nothing exits distinctly so batch drivers can
        // tell an empty result from a healthy one.
        if stage.is_none() && report.totals.records_processed == 0 {
            return ExitCode::from(EXIT_ZERO_PROCESSED);
        }
    }
    ExitCode::SUCCESS
}

fn emit_report(
    config: &RunConfig,
    report: &sstub_miner::LifecycleReport,
    output: Option<&str>,
) -> Result<(), String> {
    let json = sstub_miner::jsonl::to_sorted_string_pretty(report)
        .map_err(|e| format!("cannot serialize report: {e}"))?;
    match output {
        Some("-") => println!("{json}"),
        Some(path) => {
            std::fs::write(path, format!("{json}\n"))
                .map_err(|e| format!("cannot write report {path}: {e}"))?;
        }
        None => {
            // Already written into the output dir by the report stage.
            let _ = config;
        }
    }
    Ok(())
}
