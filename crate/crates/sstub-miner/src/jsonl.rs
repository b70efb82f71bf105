//! Deterministic JSON-lines serialization for stage artifacts: compact
//! encoding with sorted object keys, one value per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Json {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
    #[error("cannot serialize value: {0}")]
    Serialize(#[source] serde_json::Error),
}

/// Encode a value with sorted keys. Round-tripping through
/// `serde_json::Value` orders map keys because the default map is a BTreeMap.
pub fn to_sorted_string<T: Serialize>(value: &T) -> Result<String, JsonlError> {
    let value = serde_json::to_value(value).map_err(JsonlError::Serialize)?;
    serde_json::to_string(&value).map_err(JsonlError::Serialize)
}

pub fn to_sorted_string_pretty<T: Serialize>(value: &T) -> Result<String, JsonlError> {
    let value = serde_json::to_value(value).map_err(JsonlError::Serialize)?;
    serde_json::to_string_pretty(&value).map_err(JsonlError::Serialize)
}

pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<(), JsonlError> {
    let io_err = |source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut writer = BufWriter::new(File::create(path).map_err(io_err)?);
    for value in values {
        writeln!(writer, "{}", to_sorted_string(value)?).map_err(io_err)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let io_err = |source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(
            serde_json::from_str(&line).map_err(|source| JsonlError::Json {
                path: path.display().to_string(),
                line: idx + 1,
                source,
            })?,
        );
    }
    Ok(values)
}
