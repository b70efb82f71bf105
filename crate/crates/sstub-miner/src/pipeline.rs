//! Pipeline orchestration: resumable stages over JSON-lines artifacts, a
//! bounded worker pool for the repository-heavy stages, and final report
//! assembly.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{build_lifecycle, ExclusionReason, LifecycleRecord};
use crate::dataset::{self, Diagnostic, SStubRecord};
use crate::flagcheck::{self, AnalyzerAdapter, FlagResult};
use crate::jsonl::{self, JsonlError};
use crate::report::{build_report, LifecycleReport, ReportInputs, Rq4};
use crate::tracer::{self, MiningRecord, ResolutionStatus};
use crate::vcs::{CommitMeta, GitClient, RepoHandle, VcsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageName {
    Ingest,
    Mine,
    Analyze,
    Flagcheck,
    Report,
}

fn default_jobs() -> usize {
    1
}
fn default_git_binary() -> String {
    "git".to_string()
}
fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Json]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset_path: PathBuf,
    pub repos_dir: PathBuf,
    #[serde(default)]
    pub clone_missing: bool,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    pub output_dir: PathBuf,
    #[serde(default = "default_git_binary")]
    pub git_binary: String,
    #[serde(default)]
    pub analyzer: Option<AnalyzerAdapter>,
    #[serde(default = "default_formats")]
    pub report_formats: Vec<ReportFormat>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.jobs < 1 {
            return Err(PipelineError::Config("jobs must be >= 1".to_string()));
        }
        std::fs::create_dir_all(&self.output_dir).map_err(|e| {
            PipelineError::Config(format!(
                "output dir {} not writable: {e}",
                self.output_dir.display()
            ))
        })?;
        Ok(())
    }

    pub fn git(&self) -> GitClient {
        GitClient::new(self.git_binary.clone())
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const INGEST_DIAGNOSTICS_FILE: &str = "ingest_diagnostics.jsonl";
pub const MINING_FILE: &str = "mining.jsonl";
pub const COMMITS_FILE: &str = "commits.jsonl";
pub const ANALYTICS_FILE: &str = "analytics.json";
pub const FLAGS_FILE: &str = "flags.jsonl";
pub const FLAG_ERRORS_FILE: &str = "flag_errors.jsonl";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_CSV_FILE: &str = "report.csv";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Dataset(#[from] dataset::IngestError),
    #[error("artifact error: {0}")]
    Artifact(#[from] JsonlError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Bounded worker pool: applies `f` to every item, preserving input order in
/// the output regardless of worker count.
fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, R)>> = Mutex::new(Vec::with_capacity(items.len()));
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(idx) else { break };
                let out = f(item);
                results.lock().unwrap().push((idx, out));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(idx, _)| *idx);
    results.into_iter().map(|(_, r)| r).collect()
}

/// Parse and validate the dataset, writing the normalized records and the
/// per-record diagnostics.
pub fn run_ingest(config: &RunConfig) -> Result<(Vec<SStubRecord>, Vec<Diagnostic>), PipelineError> {
    let (records, diagnostics) = dataset::parse_dataset(&config.dataset_path)?;
    jsonl::write_jsonl(&config.artifact(RECORDS_FILE), &records)?;
    jsonl::write_jsonl(&config.artifact(INGEST_DIAGNOSTICS_FILE), &diagnostics)?;
    eprintln!(
        "ingest: {} records, {} skipped",
        records.len(),
        diagnostics.len()
    );
    Ok((records, diagnostics))
}

/// Trace every ingested record to its origin commit. Emits the mining
/// interchange file and the examined-commit metadata sidecar.
pub fn run_mine(config: &RunConfig) -> Result<Vec<MiningRecord>, PipelineError> {
    let records: Vec<SStubRecord> = jsonl::read_jsonl(&config.artifact(RECORDS_FILE))?;
    let git = config.git();

    // Acquire each distinct repository once, up front; clones are serialized
    // by the per-repo lock anyway.
    let mut repos: HashMap<String, Result<RepoHandle, String>> = HashMap::new();
    for record in &records {
        if !repos.contains_key(&record.project_name) {
            let result = git
                .acquire_repo(&record.project_name, &config.repos_dir, config.clone_missing)
                .map_err(|e: VcsError| e.to_string());
            repos.insert(record.project_name.clone(), result);
        }
    }

    let outcomes = parallel_map(&records, config.jobs, |record| {
        let git = config.git();
        match &repos[&record.project_name] {
            Ok(repo) => tracer::trace_record(record, &git, repo),
            Err(reason) => (
                MiningRecord::from_error(record.record_index, format!("repository: {reason}")),
                Vec::new(),
            ),
        }
    });

    let mut mining = Vec::with_capacity(outcomes.len());
    let mut commits: BTreeMap<String, CommitMeta> = BTreeMap::new();
    for (record, metas) in outcomes {
        mining.push(record);
        for meta in metas {
            commits.insert(meta.commit_id.clone(), meta);
        }
    }
    mining.sort_by_key(|r| r.record_index);

    jsonl::write_jsonl(&config.artifact(MINING_FILE), &mining)?;
    let commit_rows: Vec<&CommitMeta> = commits.values().collect();
    jsonl::write_jsonl(&config.artifact(COMMITS_FILE), &commit_rows)?;
    eprintln!(
        "mine: {} records traced, {} commits examined",
        mining.len(),
        commits.len()
    );
    Ok(mining)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsArtifact {
    pub lifecycle: Vec<LifecycleRecord>,
    pub negative_duration: usize,
    pub commits_examined: usize,
}

/// Join mining results with commit metadata into lifecycle records.
pub fn run_analyze(config: &RunConfig) -> Result<AnalyticsArtifact, PipelineError> {
    let records: Vec<SStubRecord> = jsonl::read_jsonl(&config.artifact(RECORDS_FILE))?;
    let mining: Vec<MiningRecord> = jsonl::read_jsonl(&config.artifact(MINING_FILE))?;
    let commits: Vec<CommitMeta> = jsonl::read_jsonl(&config.artifact(COMMITS_FILE))?;

    let by_index: HashMap<usize, &SStubRecord> =
        records.iter().map(|r| (r.record_index, r)).collect();
    let by_commit: HashMap<&str, &CommitMeta> = commits
        .iter()
        .map(|c| (c.commit_id.as_str(), c))
        .collect();

    let mut lifecycle = Vec::new();
    let mut negative_duration = 0usize;
    for mined in &mining {
        if mined.status != ResolutionStatus::Resolved {
            continue;
        }
        let (Some(record), Some(origin)) = (
            by_index.get(&mined.record_index),
            mined.resolved.as_deref().and_then(|c| by_commit.get(c)),
        ) else {
            continue;
        };
        let Some(fix_meta) = by_commit.get(record.fix_commit.as_str()) else {
            continue;
        };
        match build_lifecycle(mined, fix_meta, origin) {
            Ok(lc) => lifecycle.push(lc),
            Err(ExclusionReason::NegativeDuration) => negative_duration += 1,
        }
    }

    let artifact = AnalyticsArtifact {
        lifecycle,
        negative_duration,
        commits_examined: commits.len(),
    };
    write_text(
        &config.artifact(ANALYTICS_FILE),
        &format!("{}\n", jsonl::to_sorted_string_pretty(&artifact)?),
    )?;
    eprintln!(
        "analyze: {} lifecycle records, {} negative-duration exclusions",
        artifact.lifecycle.len(),
        artifact.negative_duration
    );
    Ok(artifact)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagError {
    pub record_index: usize,
    pub message: String,
}

/// Run the configured analyzer over each record's buggy file at the
/// fix-parent revision. No-op when no analyzer is configured.
pub fn run_flagcheck(config: &RunConfig) -> Result<Option<Vec<FlagResult>>, PipelineError> {
    let Some(adapter) = &config.analyzer else {
        eprintln!("flagcheck: no analyzer configured, skipping");
        return Ok(None);
    };
    let records: Vec<SStubRecord> = jsonl::read_jsonl(&config.artifact(RECORDS_FILE))?;
    let git = config.git();

    let mut repos: HashMap<String, Result<RepoHandle, String>> = HashMap::new();
    for record in &records {
        if !repos.contains_key(&record.project_name) {
            let result = git
                .acquire_repo(&record.project_name, &config.repos_dir, config.clone_missing)
                .map_err(|e| e.to_string());
            repos.insert(record.project_name.clone(), result);
        }
    }

    let workdir = config.artifact("flagcheck_workdir");
    let outcomes = parallel_map(&records, config.jobs, |record| {
        let git = config.git();
        let repo = match &repos[&record.project_name] {
            Ok(repo) => repo,
            Err(reason) => {
                return Err(FlagError {
                    record_index: record.record_index,
                    message: format!("repository: {reason}"),
                })
            }
        };
        let file_text = git
            .file_at(repo, &record.fix_parent_commit, &record.bug_file_path)
            .map_err(|e| FlagError {
                record_index: record.record_index,
                message: format!("buggy file: {e}"),
            })?;
        let block = dataset::char_range_to_block(
            &file_text,
            record.bug_node_start_char,
            record.bug_node_length,
            record.bug_line_num,
        )
        .map_err(|e| FlagError {
            record_index: record.record_index,
            message: format!("node range: {e}"),
        })?
        .block;
        // Each record gets its own materialization directory so parallel
        // workers never share files.
        let record_dir = workdir.join(format!("r{:06}", record.record_index));
        flagcheck::run_analyzer(
            adapter,
            record.record_index,
            &record.bug_file_path,
            &file_text,
            &block,
            &record_dir,
        )
        .map_err(|e| FlagError {
            record_index: record.record_index,
            message: e.to_string(),
        })
    });

    let mut results = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(result) => results.push(result),
            Err(error) => errors.push(error),
        }
    }
    jsonl::write_jsonl(&config.artifact(FLAGS_FILE), &results)?;
    jsonl::write_jsonl(&config.artifact(FLAG_ERRORS_FILE), &errors)?;
    eprintln!(
        "flagcheck: {} analyzed, {} flagged, {} errors",
        results.len(),
        results.iter().filter(|r| r.flagged).count(),
        errors.len()
    );
    Ok(Some(results))
}

/// Assemble the final report from the stage artifacts and write it in the
/// requested formats.
pub fn run_report(config: &RunConfig) -> Result<LifecycleReport, PipelineError> {
    let records: Vec<SStubRecord> = jsonl::read_jsonl(&config.artifact(RECORDS_FILE))?;
    let diagnostics: Vec<Diagnostic> =
        jsonl::read_jsonl(&config.artifact(INGEST_DIAGNOSTICS_FILE))?;
    let mining: Vec<MiningRecord> = jsonl::read_jsonl(&config.artifact(MINING_FILE))?;
    let analytics_text = std::fs::read_to_string(config.artifact(ANALYTICS_FILE)).map_err(|source| {
        PipelineError::Io {
            path: config.artifact(ANALYTICS_FILE).display().to_string(),
            source,
        }
    })?;
    let analytics: AnalyticsArtifact =
        serde_json::from_str(&analytics_text).map_err(JsonlError::Serialize)?;

    let rq4 = match (&config.analyzer, config.artifact(FLAGS_FILE).is_file()) {
        (Some(adapter), true) => {
            let results: Vec<FlagResult> = jsonl::read_jsonl(&config.artifact(FLAGS_FILE))?;
            let rate = flagcheck::flag_rate(&results);
            Some(Rq4 {
                adapter_name: adapter.name.clone(),
                flag_rate: rate.rate_percent,
                analyzed_count: rate.analyzed_count,
            })
        }
        _ => None,
    };

    let report = build_report(ReportInputs {
        records_in: records.len() + diagnostics.len(),
        ingest_skipped: diagnostics.len(),
        mining: &mining,
        lifecycle: &analytics.lifecycle,
        negative_duration: analytics.negative_duration,
        commits_examined: analytics.commits_examined,
        rq4,
    });

    for format in &config.report_formats {
        match format {
            ReportFormat::Json => write_text(
                &config.artifact(REPORT_JSON_FILE),
                &format!("{}\n", jsonl::to_sorted_string_pretty(&report)?),
            )?,
            ReportFormat::Csv => {
                write_text(&config.artifact(REPORT_CSV_FILE), &crate::report::to_csv(&report))?
            }
        }
    }
    eprintln!(
        "report: {} processed of {}",
        report.totals.records_processed, report.totals.records_in
    );
    Ok(report)
}

/// Full pipeline: ingest, mine, analyze, flagcheck (when configured), report.
pub fn cmd_run(config: &RunConfig) -> Result<LifecycleReport, PipelineError> {
    config.validate()?;
    run_ingest(config)?;
    run_mine(config)?;
    run_analyze(config)?;
    run_flagcheck(config)?;
    run_report(config)
}

/// Run a single stage; each stage consumes the previous stage's artifacts.
pub fn cmd_stage(stage: StageName, config: &RunConfig) -> Result<Option<LifecycleReport>, PipelineError> {
    config.validate()?;
    match stage {
        StageName::Ingest => {
            run_ingest(config)?;
            Ok(None)
        }
        StageName::Mine => {
            run_mine(config)?;
            Ok(None)
        }
        StageName::Analyze => {
            run_analyze(config)?;
            Ok(None)
        }
        StageName::Flagcheck => {
            run_flagcheck(config)?;
            Ok(None)
        }
        StageName::Report => Ok(Some(run_report(config)?)),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}
