//! Static-analyzer harness: run a configured analyzer command over the buggy
//! file at the fix-parent revision and check whether any warning lands on the
//! bug block's lines.

use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BugBlock;

/// Command template that runs the built-in demo analyzer instead of an
/// external process. It flags every line containing the literal `TODOBUG`.
pub const DEMO_COMMAND: &str = "builtin:demo";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// Lines of `path:line: message`.
    LineColon,
    /// JSON array of `{path, line, rule, message}` objects.
    JsonReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerAdapter {
    pub name: String,
    /// Whitespace-split command; the `{file}` placeholder is replaced with
    /// the materialized file path.
    pub command: String,
    pub format: OutputFormat,
}

impl AnalyzerAdapter {
    pub fn demo() -> Self {
        AnalyzerAdapter {
            name: "demo".to_string(),
            command: DEMO_COMMAND.to_string(),
            format: OutputFormat::LineColon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub rule: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagResult {
    pub record_index: usize,
    pub flagged: bool,
    /// (line, rule-id) pairs inside the block's line span.
    pub matched_warnings: Vec<(usize, String)>,
    pub total_warnings_in_file: usize,
}

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("cannot materialize {path}: {source}")]
    Materialize {
        path: String,
        source: std::io::Error,
    },
    #[error("analyzer {name} failed (exit {code:?}) with no parsable output: {stderr}")]
    Failed {
        name: String,
        code: Option<i32>,
        stderr: String,
    },
    #[error("analyzer {name} output unparsable: {detail}")]
    BadOutput { name: String, detail: String },
}

/// Materialize `file_text` under `workdir` at the record's relative path,
/// run the analyzer, and match its warnings against the block's lines.
pub fn run_analyzer(
    adapter: &AnalyzerAdapter,
    record_index: usize,
    relative_path: &str,
    file_text: &str,
    block: &BugBlock,
    workdir: &Path,
) -> Result<FlagResult, AnalyzerError> {
    let file_path = workdir.join(relative_path);
    if let Some(parent) = file_path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| AnalyzerError::Materialize {
            path: file_path.display().to_string(),
            source,
        })?;
    }
    std::fs::write(&file_path, file_text).map_err(|source| AnalyzerError::Materialize {
        path: file_path.display().to_string(),
        source,
    })?;

    let warnings = if adapter.command == DEMO_COMMAND {
        demo_warnings(file_text)
    } else {
        invoke_external(adapter, &file_path)?
    };

    let matched_warnings: Vec<(usize, String)> = warnings
        .iter()
        .filter(|w| w.line >= block.start_line && w.line <= block.end_line)
        .map(|w| (w.line, w.rule.clone()))
        .collect();
    Ok(FlagResult {
        record_index,
        flagged: !matched_warnings.is_empty(),
        matched_warnings,
        total_warnings_in_file: warnings.len(),
    })
}

fn demo_warnings(file_text: &str) -> Vec<Warning> {
    file_text
        .lines()
        .enumerate()
        .filter(|(_, text)| text.contains("TODOBUG"))
        .map(|(i, text)| Warning {
            line: i + 1,
            rule: "demo.todobug".to_string(),
            message: text.trim().to_string(),
        })
        .collect()
}

fn invoke_external(adapter: &AnalyzerAdapter, file: &Path) -> Result<Vec<Warning>, AnalyzerError> {
    let mut parts = adapter.command.split_whitespace().map(|part| {
        if part == "{file}" {
            file.display().to_string()
        } else {
            part.to_string()
        }
    });
    let program = parts.next().ok_or_else(|| AnalyzerError::BadOutput {
        name: adapter.name.clone(),
        detail: "empty analyzer command".to_string(),
    })?;
    let output = Command::new(&program)
        .args(parts)
        .output()
        .map_err(|e| AnalyzerError::Failed {
            name: adapter.name.clone(),
            code: None,
            stderr: format!("cannot spawn {program}: {e}"),
        })?;

    let stdout = String::from_utf8_lossy(&output.stdout);
    let warnings = parse_output(adapter, &stdout);
    match warnings {
        Ok(warnings) => {
            // Analyzers commonly exit non-zero when they report findings;
            // only a failure without parsable output counts as an error.
            if !output.status.success() && warnings.is_empty() {
                return Err(AnalyzerError::Failed {
                    name: adapter.name.clone(),
                    code: output.status.code(),
                    stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
                });
            }
            Ok(warnings)
        }
        Err(e) => {
            if output.status.success() {
                Err(e)
            } else {
                Err(AnalyzerError::Failed {
                    name: adapter.name.clone(),
                    code: output.status.code(),
                    stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
                })
            }
        }
    }
}

fn parse_output(adapter: &AnalyzerAdapter, stdout: &str) -> Result<Vec<Warning>, AnalyzerError> {
    match adapter.format {
        OutputFormat::LineColon => {
            let mut warnings = Vec::new();
            for line in stdout.lines() {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let parsed = parse_line_colon(trimmed).ok_or_else(|| AnalyzerError::BadOutput {
                    name: adapter.name.clone(),
                    detail: format!("not in path:line: message form: {trimmed:?}"),
                })?;
                warnings.push(parsed);
            }
            Ok(warnings)
        }
        OutputFormat::JsonReport => {
            #[derive(Deserialize)]
            struct Entry {
                #[allow(dead_code)]
                path: Option<String>,
                line: usize,
                #[serde(default)]
                rule: String,
                #[serde(default)]
                message: String,
            }
            let entries: Vec<Entry> =
                serde_json::from_str(stdout).map_err(|e| AnalyzerError::BadOutput {
                    name: adapter.name.clone(),
                    detail: e.to_string(),
                })?;
            Ok(entries
                .into_iter()
                .map(|e| Warning {
                    line: e.line,
                    rule: e.rule,
                    message: e.message,
                })
                .collect())
        }
    }
}

fn parse_line_colon(line: &str) -> Option<Warning> {
    // path:line: message — the path itself may contain colons, so take the
    // last "<digits>:" separator before the message.
    let msg_sep = line.match_indices(": ").last()?.0;
    let head = &line[..msg_sep];
    let message = line[msg_sep + 2..].to_string();
    let line_sep = head.rfind(':')?;
    let line_no: usize = head[line_sep + 1..].parse().ok()?;
    Some(Warning {
        line: line_no,
        rule: String::new(),
        message,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagRate {
    pub flagged_count: usize,
    pub analyzed_count: usize,
    pub rate_percent: f64,
}

/// Flag rate over successfully analyzed records; analyzer errors must be
/// excluded by the caller before this point.
pub fn flag_rate(results: &[FlagResult]) -> FlagRate {
    let flagged_count = results.iter().filter(|r| r.flagged).count();
    let analyzed_count = results.len();
    FlagRate {
        flagged_count,
        analyzed_count,
        rate_percent: if analyzed_count == 0 {
            0.0
        } else {
            100.0 * flagged_count as f64 / analyzed_count as f64
        },
    }
}
