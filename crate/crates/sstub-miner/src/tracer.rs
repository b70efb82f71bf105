//! Origin tracing: resolve each SStuB record to the commit that introduced
//! it, classify how it was introduced, and compare the bug line against its
//! surrounding block lines.

use serde::{Deserialize, Serialize};

use crate::dataset::{BugBlock, SStubRecord};
use crate::diffparse::{self, Classification};
use crate::vcs::{BlameLine, CommitMeta, GitClient, RepoHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionStatus {
    Resolved,
    AmbiguousMultiMatch,
    NoMatch,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OriginResolution {
    /// Deduplicated candidate origin commits, in blame (first covered line)
    /// order. Retained even when resolution fails.
    pub candidates: Vec<String>,
    pub resolved: Option<String>,
    pub resolved_author: Option<String>,
    pub resolved_time: Option<i64>,
    pub status: ResolutionStatus,
}

impl OriginResolution {
    fn error(candidates: Vec<String>) -> Self {
        OriginResolution {
            candidates,
            resolved: None,
            resolved_author: None,
            resolved_time: None,
            status: ResolutionStatus::Error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntroductionMode {
    AddedNew,
    ModifiedExisting,
}

/// Tri-state comparison against the surrounding block lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surrounding {
    #[serde(rename = "true")]
    Same,
    #[serde(rename = "false")]
    Different,
    #[serde(rename = "no_surrounding")]
    NoSurrounding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntroductionClass {
    /// `None` when the origin commit's patch could not be parsed or the
    /// bug line could not be located in it.
    pub mode: Option<IntroductionMode>,
    pub same_author_as_surrounding: Surrounding,
    pub same_commit_as_surrounding: Surrounding,
    pub diagnostics: Vec<String>,
}

/// A candidate origin commit together with the path and line coordinates the
/// blame attributed to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateOrigin {
    pub commit: String,
    /// Path of the file in the candidate commit (blame follows renames).
    pub path_at_origin: String,
    /// First block line (post-image at fix-parent) attributed to it.
    pub first_line: usize,
}

/// Distinct origin commits of the blame spans covering the block, ordered by
/// first covered line. `blame` must come from the fix-parent revision of the
/// record's buggy file.
pub fn candidate_origins(block: &BugBlock, blame: &[BlameLine]) -> Vec<CandidateOrigin> {
    let mut candidates: Vec<CandidateOrigin> = Vec::new();
    for line in blame {
        if line.final_line < block.start_line || line.final_line > block.end_line {
            continue;
        }
        if !candidates.iter().any(|c| c.commit == line.commit) {
            candidates.push(CandidateOrigin {
                commit: line.commit.clone(),
                path_at_origin: line.orig_path.clone(),
                first_line: line.final_line,
            });
        }
    }
    candidates
}

/// Resolve the origin commit among the blame candidates by searching for the
/// record's before-fix source in each candidate's version of the file.
///
/// A single candidate resolves immediately. With several, exact substring
/// matching is tried first, then whitespace-normalized matching; exactly one
/// match resolves, several are ambiguous, zero is a no-match. The candidate
/// hashes are always retained in the result.
pub fn resolve_origin(
    record: &SStubRecord,
    candidates: &[CandidateOrigin],
    git: &GitClient,
    repo: &RepoHandle,
) -> OriginResolution {
    let hashes: Vec<String> = candidates.iter().map(|c| c.commit.clone()).collect();
    if candidates.is_empty() {
        return OriginResolution::error(hashes);
    }

    let winner = if candidates.len() == 1 {
        &candidates[0]
    } else {
        let mut contents = Vec::with_capacity(candidates.len());
        for candidate in candidates {
            match git.file_at(repo, &candidate.commit, &candidate.path_at_origin) {
                Ok(text) => contents.push(text),
                Err(_) => return OriginResolution::error(hashes),
            }
        }
        let exact: Vec<usize> = contents
            .iter()
            .enumerate()
            .filter(|(_, text)| text.contains(&record.source_before_fix))
            .map(|(i, _)| i)
            .collect();
        let matches = if exact.is_empty() {
            let needle = normalize_whitespace(&record.source_before_fix);
            contents
                .iter()
                .enumerate()
                .filter(|(_, text)| normalize_whitespace(text).contains(&needle))
                .map(|(i, _)| i)
                .collect()
        } else {
            exact
        };
        match matches.as_slice() {
            [single] => &candidates[*single],
            [] => {
                return OriginResolution {
                    candidates: hashes,
                    resolved: None,
                    resolved_author: None,
                    resolved_time: None,
                    status: ResolutionStatus::NoMatch,
                }
            }
            _ => {
                return OriginResolution {
                    candidates: hashes,
                    resolved: None,
                    resolved_author: None,
                    resolved_time: None,
                    status: ResolutionStatus::AmbiguousMultiMatch,
                }
            }
        }
    };

    let meta = match git.commit_meta(repo, &winner.commit) {
        Ok(meta) => meta,
        Err(_) => return OriginResolution::error(hashes),
    };
    OriginResolution {
        candidates: hashes,
        resolved: Some(winner.commit.clone()),
        resolved_author: Some(meta.author_key()),
        resolved_time: Some(meta.author_time),
        status: ResolutionStatus::Resolved,
    }
}

pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Classify how a resolved SStuB was introduced and whether its surrounding
/// block lines share the origin's author and commit.
///
/// `blame` is the fix-parent blame of the buggy file (the same lines the
/// candidates came from).
#[allow(clippy::too_many_arguments)]
pub fn classify_introduction(
    record: &SStubRecord,
    origin: &OriginResolution,
    origin_candidate: &CandidateOrigin,
    block: &BugBlock,
    blame: &[BlameLine],
    git: &GitClient,
    repo: &RepoHandle,
) -> IntroductionClass {
    debug_assert_eq!(origin.status, ResolutionStatus::Resolved);
    let mut diagnostics = Vec::new();
    let origin_commit = origin.resolved.as_deref().unwrap_or_default();

    let mode = introduction_mode(
        record,
        origin_commit,
        origin_candidate,
        block,
        blame,
        git,
        repo,
        &mut diagnostics,
    );

    // Surrounding comparisons run on the fix-parent blame regardless of
    // whether the patch was classifiable.
    let surrounding: Vec<&BlameLine> = blame
        .iter()
        .filter(|l| {
            l.final_line >= block.start_line
                && l.final_line <= block.end_line
                && l.final_line != block.bug_line
        })
        .collect();

    let (same_author, same_commit) = if surrounding.is_empty() {
        (Surrounding::NoSurrounding, Surrounding::NoSurrounding)
    } else {
        let origin_author = origin.resolved_author.as_deref().unwrap_or_default();
        let all_same_commit = surrounding.iter().all(|l| l.commit == origin_commit);
        let all_same_author = surrounding.iter().all(|l| {
            crate::vcs::author_identity_key(&l.author_name, &l.author_email) == origin_author
        });
        (
            if all_same_author {
                Surrounding::Same
            } else {
                Surrounding::Different
            },
            if all_same_commit {
                Surrounding::Same
            } else {
                Surrounding::Different
            },
        )
    };

    IntroductionClass {
        mode,
        same_author_as_surrounding: same_author,
        same_commit_as_surrounding: same_commit,
        diagnostics,
    }
}

#[allow(clippy::too_many_arguments)]
fn introduction_mode(
    record: &SStubRecord,
    origin_commit: &str,
    origin_candidate: &CandidateOrigin,
    block: &BugBlock,
    blame: &[BlameLine],
    git: &GitClient,
    repo: &RepoHandle,
    diagnostics: &mut Vec<String>,
) -> Option<IntroductionMode> {
    let patch_text = match git.commit_patch(repo, origin_commit) {
        Ok(text) => text,
        Err(e) => {
            diagnostics.push(format!("origin patch unavailable: {e}"));
            return None;
        }
    };
    let patches = match diffparse::parse_patch(&patch_text) {
        Ok(patches) => patches,
        Err(e) => {
            diagnostics.push(format!("origin patch unparseable: {e}"));
            return None;
        }
    };
    let file_patch = match patches
        .iter()
        .find(|p| p.new_path.as_deref() == Some(origin_candidate.path_at_origin.as_str()))
    {
        Some(p) => p,
        None => {
            diagnostics.push(format!(
                "file {} not in origin commit's first-parent patch",
                origin_candidate.path_at_origin
            ));
            return None;
        }
    };

    let line = locate_bug_line_in_origin(record, origin_commit, origin_candidate, block, blame, git, repo);
    let line = match line {
        Some(line) => line,
        None => {
            diagnostics.push("bug line not locatable in origin file".to_string());
            return None;
        }
    };

    match diffparse::classify_new_line(file_patch, line) {
        Classification::AddedNew => Some(IntroductionMode::AddedNew),
        Classification::ModifiedExisting => Some(IntroductionMode::ModifiedExisting),
        Classification::NotTouched => {
            diagnostics.push(format!(
                "located line {line} is untouched by the origin patch"
            ));
            None
        }
    }
}

/// Post-image line of the SStuB inside the origin commit: first the position
/// of `source_before_fix`'s first line in the origin file, then the
/// blame-span line mapping as a fallback.
fn locate_bug_line_in_origin(
    record: &SStubRecord,
    origin_commit: &str,
    origin_candidate: &CandidateOrigin,
    block: &BugBlock,
    blame: &[BlameLine],
    git: &GitClient,
    repo: &RepoHandle,
) -> Option<usize> {
    if let Some(needle) = record
        .source_before_fix
        .lines()
        .find(|l| !l.trim().is_empty())
    {
        if let Ok(text) = git.file_at(repo, origin_commit, &origin_candidate.path_at_origin) {
            let matches: Vec<usize> = text
                .lines()
                .enumerate()
                .filter(|(_, l)| l.contains(needle))
                .map(|(i, _)| i + 1)
                .collect();
            if matches.len() == 1 {
                return Some(matches[0]);
            }
        }
    }
    // Fallback: map block lines through blame to origin coordinates,
    // preferring the bug line itself.
    blame
        .iter()
        .filter(|l| {
            l.commit == origin_commit
                && l.final_line >= block.start_line
                && l.final_line <= block.end_line
        })
        .min_by_key(|l| l.final_line.abs_diff(block.bug_line))
        .map(|l| l.orig_line)
}

/// One mining-stage output record; the JSON-lines interchange format the
/// analytics stage consumes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningRecord {
    pub record_index: usize,
    pub status: ResolutionStatus,
    pub candidates: Vec<String>,
    pub resolved: Option<String>,
    pub resolved_author: Option<String>,
    pub resolved_time: Option<i64>,
    pub mode: Option<IntroductionMode>,
    pub same_author: Option<Surrounding>,
    pub same_commit: Option<Surrounding>,
    pub diagnostics: Vec<String>,
}

impl MiningRecord {
    pub fn from_error(record_index: usize, message: String) -> Self {
        MiningRecord {
            record_index,
            status: ResolutionStatus::Error,
            candidates: Vec::new(),
            resolved: None,
            resolved_author: None,
            resolved_time: None,
            mode: None,
            same_author: None,
            same_commit: None,
            diagnostics: vec![message],
        }
    }
}

/// Trace one record end to end against an acquired repository. Also returns
/// the commit metadata examined along the way (resolved origin and fix
/// commit) for the analytics stage.
pub fn trace_record(
    record: &SStubRecord,
    git: &GitClient,
    repo: &RepoHandle,
) -> (MiningRecord, Vec<CommitMeta>) {
    let mut diagnostics = Vec::new();

    let file_text = match git.file_at(repo, &record.fix_parent_commit, &record.bug_file_path) {
        Ok(text) => text,
        Err(e) => {
            return (
                MiningRecord::from_error(record.record_index, format!("buggy file: {e}")),
                Vec::new(),
            )
        }
    };
    let resolution = match crate::dataset::char_range_to_block(
        &file_text,
        record.bug_node_start_char,
        record.bug_node_length,
        record.bug_line_num,
    ) {
        Ok(resolution) => resolution,
        Err(e) => {
            return (
                MiningRecord::from_error(record.record_index, format!("node range: {e}")),
                Vec::new(),
            )
        }
    };
    if resolution.byte_offset_fallback {
        diagnostics.push("node offsets interpreted as byte positions".to_string());
    }
    if resolution.hint_clamped {
        diagnostics.push(format!(
            "bugLineNum {} clamped into block [{}, {}]",
            record.bug_line_num, resolution.block.start_line, resolution.block.end_line
        ));
    }
    let block = resolution.block;

    let blame = match git.blame_lines(repo, &record.fix_parent_commit, &record.bug_file_path) {
        Ok(blame) => blame,
        Err(e) => {
            let mut rec = MiningRecord::from_error(record.record_index, format!("blame: {e}"));
            rec.diagnostics.splice(0..0, diagnostics);
            return (rec, Vec::new());
        }
    };

    let candidates = candidate_origins(&block, &blame);
    let origin = resolve_origin(record, &candidates, git, repo);

    let mut commits = Vec::new();
    let (mode, same_author, same_commit) = match origin.status {
        ResolutionStatus::Resolved => {
            let winner = candidates
                .iter()
                .find(|c| Some(&c.commit) == origin.resolved.as_ref())
                .expect("resolved origin is one of the candidates");
            let class = classify_introduction(record, &origin, winner, &block, &blame, git, repo);
            diagnostics.extend(class.diagnostics);

            match git.commit_meta(repo, &winner.commit) {
                Ok(meta) => commits.push(meta),
                Err(e) => diagnostics.push(format!("origin meta: {e}")),
            }
            match git.commit_meta(repo, &record.fix_commit) {
                Ok(meta) => commits.push(meta),
                Err(e) => diagnostics.push(format!("fix meta: {e}")),
            }
            (
                class.mode,
                Some(class.same_author_as_surrounding),
                Some(class.same_commit_as_surrounding),
            )
        }
        _ => (None, None, None),
    };

    (
        MiningRecord {
            record_index: record.record_index,
            status: origin.status,
            candidates: origin.candidates,
            resolved: origin.resolved,
            resolved_author: origin.resolved_author,
            resolved_time: origin.resolved_time,
            mode,
            same_author,
            same_commit,
            diagnostics,
        },
        commits,
    )
}
