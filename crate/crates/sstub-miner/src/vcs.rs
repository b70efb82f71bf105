//! Read-only adapter over a git installation: repository acquisition and the
//! four plumbing queries the pipeline needs (blame, historical file content,
//! commit metadata, commit patch).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::decode_file_bytes;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoHandle {
    pub project_name: String,
    pub local_path: PathBuf,
    pub origin_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMeta {
    pub commit_id: String,
    pub author_name: String,
    pub author_email: String,
    /// Author timestamp, seconds since epoch, UTC.
    pub author_time: i64,
    pub parent_ids: Vec<String>,
}

impl CommitMeta {
    /// Stable author identity: lower-cased email, falling back to the
    /// lower-cased trimmed name when the email is empty.
    pub fn author_key(&self) -> String {
        author_identity_key(&self.author_name, &self.author_email)
    }
}

pub fn author_identity_key(name: &str, email: &str) -> String {
    let email = email.trim();
    if email.is_empty() {
        name.trim().to_lowercase()
    } else {
        email.to_lowercase()
    }
}

/// Maximal run of consecutive lines attributed to one origin commit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlameSpan {
    pub start_line: usize,
    pub line_count: usize,
    pub origin_commit: String,
    pub origin_author_email: String,
    pub origin_author_name: String,
}

/// Per-line blame attribution, including the line's coordinates and path in
/// the origin commit. This is what the tracer consumes; `BlameSpan`s are
/// derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlameLine {
    pub final_line: usize,
    pub orig_line: usize,
    pub orig_path: String,
    pub commit: String,
    pub author_name: String,
    pub author_email: String,
}

#[derive(Debug, Error)]
pub enum VcsError {
    #[error("repository {project} unavailable: {reason}")]
    RepoUnavailable { project: String, reason: String },
    #[error("not found: {what}")]
    NotFound { what: String },
    #[error("git failed ({context}): {stderr}")]
    ToolError { context: String, stderr: String },
    #[error("unparseable git output ({context}): {detail}")]
    BadOutput { context: String, detail: String },
}

/// Thin wrapper around the configured git executable.
#[derive(Debug, Clone)]
pub struct GitClient {
    binary: String,
}

impl Default for GitClient {
    fn default() -> Self {
        Self::new("git")
    }
}

// Serializes clone/acquire per repository directory.
fn repo_locks() -> &'static Mutex<HashMap<PathBuf, Arc<Mutex<()>>>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    LOCKS.get_or_init(Default::default)
}

impl GitClient {
    pub fn new(binary: impl Into<String>) -> Self {
        Self {
            binary: binary.into(),
        }
    }

    fn run(&self, repo: &Path, args: &[&str]) -> Result<Vec<u8>, VcsError> {
        let output = Command::new(&self.binary)
            .args(args)
            .current_dir(repo)
            .output()
            .map_err(|e| VcsError::ToolError {
                context: format!("spawn {} {}", self.binary, args.join(" ")),
                stderr: e.to_string(),
            })?;
        if output.status.success() {
            Ok(output.stdout)
        } else {
            let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
            let context = args.join(" ");
            if is_not_found_stderr(&stderr) {
                Err(VcsError::NotFound {
                    what: format!("{context}: {}", stderr.trim()),
                })
            } else {
                Err(VcsError::ToolError { context, stderr })
            }
        }
    }

    /// Locate (or clone) the repository for a dataset project name. The name
    /// splits on the FIRST dot into owner and repo; the cache directory is
    /// `<repos_dir>/<owner>__<repo>`.
    pub fn acquire_repo(
        &self,
        project_name: &str,
        repos_dir: &Path,
        clone_missing: bool,
    ) -> Result<RepoHandle, VcsError> {
        let (owner, repo) =
            project_name
                .split_once('.')
                .ok_or_else(|| VcsError::RepoUnavailable {
                    project: project_name.to_string(),
                    reason: "project name is not in owner.repo format".to_string(),
                })?;
        let origin_url = format!("https://github.com/{owner}/{repo}");
        let local_path = repos_dir.join(format!("{owner}__{repo}"));

        let lock = {
            let mut locks = repo_locks().lock().unwrap();
            locks.entry(local_path.clone()).or_default().clone()
        };
        let _guard = lock.lock().unwrap();

        if !local_path.is_dir() {
            if !clone_missing {
                return Err(VcsError::RepoUnavailable {
                    project: project_name.to_string(),
                    reason: format!("{} missing and cloning disabled", local_path.display()),
                });
            }
            let output = Command::new(&self.binary)
                .args(["clone", "--quiet", &origin_url])
                .arg(&local_path)
                .output()
                .map_err(|e| VcsError::RepoUnavailable {
                    project: project_name.to_string(),
                    reason: format!("cannot spawn git clone: {e}"),
                })?;
            if !output.status.success() {
                return Err(VcsError::RepoUnavailable {
                    project: project_name.to_string(),
                    reason: format!(
                        "clone failed: {}",
                        String::from_utf8_lossy(&output.stderr).trim()
                    ),
                });
            }
        }
        Ok(RepoHandle {
            project_name: project_name.to_string(),
            local_path,
            origin_url,
        })
    }

    /// Per-line blame of `path` at `commit`, parsed from the porcelain
    /// format. Rename following stays at the blame default; copy detection
    /// and whitespace-insensitive matching are not enabled.
    pub fn blame_lines(
        &self,
        repo: &RepoHandle,
        commit: &str,
        path: &str,
    ) -> Result<Vec<BlameLine>, VcsError> {
        let out = self.run(
            &repo.local_path,
            &["blame", "--porcelain", commit, "--", path],
        )?;
        parse_blame_porcelain(&decode_file_bytes(&out))
    }

    /// Blame spans for `path` at `commit`; spans partition the file's line
    /// range with no gaps or overlaps.
    pub fn blame_file(
        &self,
        repo: &RepoHandle,
        commit: &str,
        path: &str,
    ) -> Result<Vec<BlameSpan>, VcsError> {
        Ok(spans_from_lines(&self.blame_lines(repo, commit, path)?))
    }

    /// Exact blob content at (commit, path), decoded per the dataset rule.
    pub fn file_at(&self, repo: &RepoHandle, commit: &str, path: &str) -> Result<String, VcsError> {
        let spec = format!("{commit}:{path}");
        let out = self.run(&repo.local_path, &["cat-file", "blob", &spec])?;
        Ok(decode_file_bytes(&out))
    }

    pub fn commit_meta(&self, repo: &RepoHandle, commit: &str) -> Result<CommitMeta, VcsError> {
        let spec = format!("{commit}^{{commit}}");
        let out = self.run(
            &repo.local_path,
            &["show", "-s", "--format=%H%x1f%an%x1f%ae%x1f%at%x1f%P", &spec],
        )?;
        let text = decode_file_bytes(&out);
        let line = text.lines().next().unwrap_or("");
        let fields: Vec<&str> = line.split('\x1f').collect();
        if fields.len() != 5 {
            return Err(VcsError::BadOutput {
                context: format!("show -s {commit}"),
                detail: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let author_time = fields[3].parse().map_err(|_| VcsError::BadOutput {
            context: format!("show -s {commit}"),
            detail: format!("bad author time {:?}", fields[3]),
        })?;
        Ok(CommitMeta {
            commit_id: fields[0].to_string(),
            author_name: fields[1].to_string(),
            author_email: fields[2].to_string(),
            author_time,
            parent_ids: fields[4].split_whitespace().map(str::to_string).collect(),
        })
    }

    /// Unified diff of `commit` against its first parent (against the empty
    /// tree for root commits), with default context.
    pub fn commit_patch(&self, repo: &RepoHandle, commit: &str) -> Result<String, VcsError> {
        let meta = self.commit_meta(repo, commit)?;
        let out = match meta.parent_ids.first() {
            Some(parent) => self.run(
                &repo.local_path,
                &["diff-tree", "--no-commit-id", "-p", parent, &meta.commit_id],
            )?,
            None => self.run(
                &repo.local_path,
                &["diff-tree", "--no-commit-id", "-p", "--root", &meta.commit_id],
            )?,
        };
        Ok(decode_file_bytes(&out))
    }
}

fn is_not_found_stderr(stderr: &str) -> bool {
    let s = stderr.to_lowercase();
    s.contains("no such path")
        || s.contains("does not exist")
        || s.contains("bad revision")
        || s.contains("unknown revision")
        || s.contains("not a valid object name")
        || s.contains("invalid object name")
        || s.contains("bad object")
        || s.contains("exists on disk, but not in")
}

/// Parse `git blame --porcelain` output. Commit metadata (author, filename)
/// appears once per commit and is cached for later groups.
fn parse_blame_porcelain(text: &str) -> Result<Vec<BlameLine>, VcsError> {
    #[derive(Default, Clone)]
    struct CommitInfo {
        author_name: String,
        author_email: String,
        filename: String,
    }

    let bad = |detail: String| VcsError::BadOutput {
        context: "blame --porcelain".to_string(),
        detail,
    };

    let mut info: HashMap<String, CommitInfo> = HashMap::new();
    let mut lines_out = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(header) = lines.next() {
        let mut parts = header.split(' ');
        let sha = parts.next().unwrap_or("");
        if !crate::dataset::is_commit_id(sha) {
            return Err(bad(format!("expected group header, got {header:?}")));
        }
        let orig_start: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad header {header:?}")))?;
        let final_start: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad header {header:?}")))?;
        let group_len: usize = match parts.next() {
            Some(s) => s.parse().map_err(|_| bad(format!("bad header {header:?}")))?,
            None => 1,
        };

        let mut entry = info.get(sha).cloned().unwrap_or_default();
        // Attribute lines until the tab-prefixed content line.
        for (offset, final_line) in (final_start..final_start + group_len).enumerate() {
            loop {
                let line = lines
                    .next()
                    .ok_or_else(|| bad("truncated group".to_string()))?;
                if let Some(content) = line.strip_prefix('\t') {
                    let _ = content;
                    break;
                } else if let Some(v) = line.strip_prefix("author ") {
                    entry.author_name = v.to_string();
                } else if let Some(v) = line.strip_prefix("author-mail ") {
                    entry.author_email =
                        v.trim_start_matches('<').trim_end_matches('>').to_string();
                } else if let Some(v) = line.strip_prefix("filename ") {
                    entry.filename = v.to_string();
                }
            }
            lines_out.push(BlameLine {
                final_line,
                orig_line: orig_start + offset,
                orig_path: entry.filename.clone(),
                commit: sha.to_string(),
                author_name: entry.author_name.clone(),
                author_email: entry.author_email.clone(),
            });
            // Continuation headers inside a group repeat sha + line numbers.
            if offset + 1 < group_len {
                let cont = lines
                    .next()
                    .ok_or_else(|| bad("truncated group".to_string()))?;
                if !cont.starts_with(sha) {
                    return Err(bad(format!("unexpected continuation {cont:?}")));
                }
            }
        }
        info.insert(sha.to_string(), entry);
    }

    lines_out.sort_by_key(|l| l.final_line);
    for (i, line) in lines_out.iter().enumerate() {
        if line.final_line != i + 1 {
            return Err(bad(format!(
                "blame lines do not partition the file at line {}",
                i + 1
            )));
        }
    }
    Ok(lines_out)
}

/// Merge consecutive blame lines with the same origin commit into spans.
pub fn spans_from_lines(lines: &[BlameLine]) -> Vec<BlameSpan> {
    let mut spans: Vec<BlameSpan> = Vec::new();
    for line in lines {
        match spans.last_mut() {
            Some(span)
                if span.origin_commit == line.commit
                    && span.start_line + span.line_count == line.final_line =>
            {
                span.line_count += 1;
            }
            _ => spans.push(BlameSpan {
                start_line: line.final_line,
                line_count: 1,
                origin_commit: line.commit.clone(),
                origin_author_email: line.author_email.clone(),
                origin_author_name: line.author_name.clone(),
            }),
        }
    }
    spans
}
