//! Dataset ingestion: parsing ManySStuBs4J JSON records and converting the
//! character-offset node coordinates into line spans.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// One entry of the SStuB dataset, normalized from the ManySStuBs4J field
/// names. `record_index` is the position of the object in the input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SStubRecord {
    #[serde(default)]
    pub record_index: usize,
    #[serde(rename = "projectName")]
    pub project_name: String,
    #[serde(rename = "fixCommitSHA1")]
    pub fix_commit: String,
    #[serde(rename = "fixCommitParentSHA1")]
    pub fix_parent_commit: String,
    #[serde(rename = "bugFilePath")]
    pub bug_file_path: String,
    #[serde(rename = "fixFilePath")]
    pub fix_file_path: String,
    #[serde(rename = "bugLineNum")]
    pub bug_line_num: usize,
    #[serde(rename = "bugNodeStartChar")]
    pub bug_node_start_char: usize,
    #[serde(rename = "bugNodeLength")]
    pub bug_node_length: usize,
    #[serde(rename = "sourceBeforeFix")]
    pub source_before_fix: String,
    #[serde(rename = "sourceAfterFix")]
    pub source_after_fix: String,
    #[serde(rename = "bugType")]
    pub bug_type: String,
}

/// Per-record ingest problem. Records with a diagnostic are skipped, so
/// `records.len() + diagnostics.len()` equals the number of input objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub record_index: usize,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read dataset file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON in dataset file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dataset root is not a JSON array")]
    NotArray,
}

/// The buggy code block reconstructed from the dataset's character range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugBlock {
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
    pub bug_line: usize,
}

impl BugBlock {
    pub fn is_single_line(&self) -> bool {
        self.start_line == self.end_line
    }

    pub fn lines(&self) -> impl Iterator<Item = usize> {
        self.start_line..=self.end_line
    }
}

/// How a character range was resolved against the file text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockResolution {
    pub block: BugBlock,
    /// The char-count interpretation was out of range and the byte-offset
    /// interpretation succeeded instead.
    pub byte_offset_fallback: bool,
    /// The dataset's bugLineNum fell outside the node's line span and was
    /// clamped.
    pub hint_clamped: bool,
}

/// Character range does not fit the file under either offset interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(
    "node range [{start_char}, {start_char}+{length}) out of bounds for file \
     of {file_chars} chars / {file_bytes} bytes"
)]
pub struct RangeError {
    pub start_char: usize,
    pub length: usize,
    pub file_chars: usize,
    pub file_bytes: usize,
}

/// Parse a ManySStuBs4J JSON array file. Structurally invalid objects are
/// skipped with one diagnostic naming the offending field; record order and
/// positions are preserved.
pub fn parse_dataset(path: &Path) -> Result<(Vec<SStubRecord>, Vec<Diagnostic>), IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset_str(&text)
}

pub fn parse_dataset_str(text: &str) -> Result<(Vec<SStubRecord>, Vec<Diagnostic>), IngestError> {
    let root: Value = serde_json::from_str(text)?;
    let objects = match root {
        Value::Array(objects) => objects,
        _ => return Err(IngestError::NotArray),
    };

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (index, object) in objects.into_iter().enumerate() {
        match record_from_value(index, &object) {
            Ok(record) => records.push(record),
            Err((field, message)) => diagnostics.push(Diagnostic {
                record_index: index,
                field,
                message,
            }),
        }
    }
    Ok((records, diagnostics))
}

fn record_from_value(index: usize, value: &Value) -> Result<SStubRecord, (String, String)> {
    let obj = value
        .as_object()
        .ok_or_else(|| (String::new(), "entry is not a JSON object".to_string()))?;

    let get_str = |field: &str| -> Result<String, (String, String)> {
        match obj.get(field) {
            None => Err((field.to_string(), "missing field".to_string())),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err((field.to_string(), "expected a string".to_string())),
        }
    };
    let get_uint = |field: &str| -> Result<u64, (String, String)> {
        match obj.get(field) {
            None => Err((field.to_string(), "missing field".to_string())),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| (field.to_string(), "expected a non-negative integer".to_string())),
        }
    };

    let record = SStubRecord {
        record_index: index,
        project_name: get_str("projectName")?,
        fix_commit: get_str("fixCommitSHA1")?,
        fix_parent_commit: get_str("fixCommitParentSHA1")?,
        bug_file_path: get_str("bugFilePath")?,
        fix_file_path: get_str("fixFilePath")?,
        bug_line_num: get_uint("bugLineNum")? as usize,
        bug_node_start_char: get_uint("bugNodeStartChar")? as usize,
        bug_node_length: get_uint("bugNodeLength")? as usize,
        source_before_fix: get_str("sourceBeforeFix")?,
        source_after_fix: get_str("sourceAfterFix")?,
        bug_type: get_str("bugType")?,
    };

    if !is_commit_id(&record.fix_commit) {
        return Err((
            "fixCommitSHA1".to_string(),
            "expected a 40-hex commit id".to_string(),
        ));
    }
    if !is_commit_id(&record.fix_parent_commit) {
        return Err((
            "fixCommitParentSHA1".to_string(),
            "expected a 40-hex commit id".to_string(),
        ));
    }
    if record.fix_commit == record.fix_parent_commit {
        return Err((
            "fixCommitParentSHA1".to_string(),
            "fix commit equals its parent".to_string(),
        ));
    }
    if record.bug_line_num < 1 {
        return Err(("bugLineNum".to_string(), "must be >= 1".to_string()));
    }
    if record.bug_node_length < 1 {
        return Err(("bugNodeLength".to_string(), "must be >= 1".to_string()));
    }
    if record.source_before_fix == record.source_after_fix {
        return Err((
            "sourceAfterFix".to_string(),
            "before-fix and after-fix source are identical".to_string(),
        ));
    }
    Ok(record)
}

pub fn is_commit_id(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Map the dataset's character range onto a line span of `file_text`.
///
/// Offsets are interpreted as Unicode scalar counts first; when that runs
/// past the end of the file the byte-offset interpretation is tried before
/// giving up with a `RangeError`.
pub fn char_range_to_block(
    file_text: &str,
    start_char: usize,
    length: usize,
    bug_line_hint: usize,
) -> Result<BlockResolution, RangeError> {
    assert!(length >= 1, "node length must be >= 1");

    let (byte_start, byte_end, byte_offset_fallback) =
        match char_range_to_bytes(file_text, start_char, length) {
            Some(range) => (range.0, range.1, false),
            None => match byte_range(file_text, start_char, length) {
                Some(range) => (range.0, range.1, true),
                None => {
                    return Err(RangeError {
                        start_char,
                        length,
                        file_chars: file_text.chars().count(),
                        file_bytes: file_text.len(),
                    })
                }
            },
        };

    let text = &file_text[byte_start..byte_end];
    // Byte offset where the last character of the range starts; newlines
    // strictly before it determine the end line.
    let last_char_start = byte_start
        + text
            .char_indices()
            .last()
            .map(|(i, _)| i)
            .expect("range is non-empty");

    let start_line = 1 + count_newlines(&file_text[..byte_start]);
    let end_line = 1 + count_newlines(&file_text[..last_char_start]);

    let bug_line = bug_line_hint.clamp(start_line, end_line);
    Ok(BlockResolution {
        hint_clamped: bug_line != bug_line_hint,
        block: BugBlock {
            start_line,
            end_line,
            text: text.to_string(),
            bug_line,
        },
        byte_offset_fallback,
    })
}

fn char_range_to_bytes(text: &str, start_char: usize, length: usize) -> Option<(usize, usize)> {
    let mut indices = text.char_indices().map(|(i, _)| i).chain([text.len()]);
    let byte_start = indices.by_ref().nth(start_char)?;
    let byte_end = indices.nth(length - 1)?;
    Some((byte_start, byte_end))
}

fn byte_range(text: &str, start: usize, length: usize) -> Option<(usize, usize)> {
    let end = start.checked_add(length)?;
    if end > text.len() || !text.is_char_boundary(start) || !text.is_char_boundary(end) {
        return None;
    }
    Some((start, end))
}

fn count_newlines(s: &str) -> usize {
    s.bytes().filter(|&b| b == b'\n').count()
}

/// Decode file bytes per the dataset rule: UTF-8 with invalid sequences
/// replaced.
pub fn decode_file_bytes(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "record {}: {}: {}",
            self.record_index, self.field, self.message
        )
    }
}
