//! Unified-diff parsing and the added-vs-modified classification of
//! post-image lines.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineTag {
    Context,
    Removed,
    Added,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HunkLine {
    pub tag: LineTag,
    pub text: String,
    /// A `\ No newline at end of file` marker followed this line.
    pub missing_newline: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    pub lines: Vec<HunkLine>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePatch {
    /// Pre-image path; `None` for file creation.
    pub old_path: Option<String>,
    /// Post-image path; `None` for file deletion.
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    AddedNew,
    ModifiedExisting,
    NotTouched,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: malformed hunk header {text:?}")]
    BadHunkHeader { line: usize, text: String },
    #[error("line {line}: {detail}")]
    BadHunkBody { line: usize, detail: String },
    #[error("line {line}: truncated hunk (expected {expected} more old / {expected_new} more new lines)")]
    TruncatedHunk {
        line: usize,
        expected: usize,
        expected_new: usize,
    },
}

/// Parse unified-diff text as emitted by git into per-file patches. Files
/// with no hunks (mode-only changes, binary files) yield empty hunk lists.
pub fn parse_patch(diff_text: &str) -> Result<Vec<FilePatch>, ParseError> {
    let mut patches: Vec<FilePatch> = Vec::new();
    let mut current: Option<FilePatch> = None;

    let mut lines = diff_text.lines().enumerate().peekable();
    while let Some((idx, line)) = lines.next() {
        let line_no = idx + 1;
        if let Some(rest) = line.strip_prefix("diff --git ") {
            if let Some(patch) = current.take() {
                patches.push(patch);
            }
            let (old, new) = paths_from_git_header(rest);
            current = Some(FilePatch {
                old_path: old,
                new_path: new,
                hunks: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("--- ") {
            if let Some(patch) = current.as_mut() {
                patch.old_path = strip_diff_path(rest, "a/");
            } else {
                current = Some(FilePatch {
                    old_path: strip_diff_path(rest, "a/"),
                    new_path: None,
                    hunks: Vec::new(),
                });
            }
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            if let Some(patch) = current.as_mut() {
                patch.new_path = strip_diff_path(rest, "b/");
            }
        } else if line.starts_with("@@ ") {
            let patch = current.as_mut().ok_or_else(|| ParseError::BadHunkHeader {
                line: line_no,
                text: line.to_string(),
            })?;
            let (old_start, old_count, new_start, new_count) =
                parse_hunk_header(line).ok_or_else(|| ParseError::BadHunkHeader {
                    line: line_no,
                    text: line.to_string(),
                })?;

            let mut hunk = Hunk {
                old_start,
                old_count,
                new_start,
                new_count,
                lines: Vec::new(),
            };
            let mut old_left = old_count;
            let mut new_left = new_count;
            while old_left > 0 || new_left > 0 {
                let (body_idx, body) =
                    lines.next().ok_or(ParseError::TruncatedHunk {
                        line: line_no,
                        expected: old_left,
                        expected_new: new_left,
                    })?;
                let (tag, text) = match body.as_bytes().first() {
                    Some(b' ') => (LineTag::Context, &body[1..]),
                    Some(b'-') => (LineTag::Removed, &body[1..]),
                    Some(b'+') => (LineTag::Added, &body[1..]),
                    Some(b'\\') => {
                        if let Some(last) = hunk.lines.last_mut() {
                            last.missing_newline = true;
                        }
                        continue;
                    }
                    None if old_left > 0 && new_left > 0 => (LineTag::Context, ""),
                    _ => {
                        return Err(ParseError::BadHunkBody {
                            line: body_idx + 1,
                            detail: format!("unexpected hunk body line {body:?}"),
                        })
                    }
                };
                match tag {
                    LineTag::Context => {
                        if old_left == 0 || new_left == 0 {
                            return Err(ParseError::BadHunkBody {
                                line: body_idx + 1,
                                detail: "context line overruns hunk counts".to_string(),
                            });
                        }
                        old_left -= 1;
                        new_left -= 1;
                    }
                    LineTag::Removed => {
                        if old_left == 0 {
                            return Err(ParseError::BadHunkBody {
                                line: body_idx + 1,
                                detail: "removed line overruns old count".to_string(),
                            });
                        }
                        old_left -= 1;
                    }
                    LineTag::Added => {
                        if new_left == 0 {
                            return Err(ParseError::BadHunkBody {
                                line: body_idx + 1,
                                detail: "added line overruns new count".to_string(),
                            });
                        }
                        new_left -= 1;
                    }
                }
                hunk.lines.push(HunkLine {
                    tag,
                    text: text.to_string(),
                    missing_newline: false,
                });
            }
            // Trailing no-newline marker for the last line of the hunk.
            if let Some((_, peek)) = lines.peek() {
                if peek.starts_with('\\') {
                    if let Some(last) = hunk.lines.last_mut() {
                        last.missing_newline = true;
                    }
                    lines.next();
                }
            }
            patch.hunks.push(hunk);
        }
        // Other header lines (index, mode, rename, Binary files, ...) carry
        // no line content and are skipped.
    }
    if let Some(patch) = current.take() {
        patches.push(patch);
    }
    Ok(patches)
}

fn parse_hunk_header(line: &str) -> Option<(usize, usize, usize, usize)> {
    let rest = line.strip_prefix("@@ -")?;
    let end = rest.find(" @@")?;
    let (ranges, _) = rest.split_at(end);
    let (old, new) = ranges.split_once(" +")?;
    let parse_range = |s: &str| -> Option<(usize, usize)> {
        match s.split_once(',') {
            Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
            None => Some((s.parse().ok()?, 1)),
        }
    };
    let (old_start, old_count) = parse_range(old)?;
    let (new_start, new_count) = parse_range(new)?;
    Some((old_start, old_count, new_start, new_count))
}

fn paths_from_git_header(rest: &str) -> (Option<String>, Option<String>) {
    // "a/path b/path"; the last " b/" handles paths containing spaces.
    if let Some(pos) = rest.rfind(" b/") {
        let old = rest[..pos].strip_prefix("a/").map(str::to_string);
        let new = Some(rest[pos + 3..].to_string());
        (old, new)
    } else {
        (None, None)
    }
}

fn strip_diff_path(rest: &str, prefix: &str) -> Option<String> {
    let path = rest.split('\t').next().unwrap_or(rest);
    if path == "/dev/null" {
        None
    } else {
        Some(path.strip_prefix(prefix).unwrap_or(path).to_string())
    }
}

/// Re-render a hunk body (including the `@@` header) byte-for-byte.
pub fn render_hunk(hunk: &Hunk) -> String {
    let mut out = format!(
        "@@ -{},{} +{},{} @@",
        hunk.old_start, hunk.old_count, hunk.new_start, hunk.new_count
    );
    out.push('\n');
    for line in &hunk.lines {
        let sigil = match line.tag {
            LineTag::Context => ' ',
            LineTag::Removed => '-',
            LineTag::Added => '+',
        };
        out.push(sigil);
        out.push_str(&line.text);
        out.push('\n');
        if line.missing_newline {
            out.push_str("\\ No newline at end of file\n");
        }
    }
    out
}

/// Classify a post-image line against the patch.
///
/// An added line counts as a modification when its change block (the maximal
/// run of consecutive non-context lines, with removals normalized before
/// additions) contains at least one removal; removals separated from the
/// addition by a context line do not count. Context lines and lines outside
/// all hunks are `NotTouched`.
pub fn classify_new_line(patch: &FilePatch, new_line: usize) -> Classification {
    assert!(new_line >= 1, "post-image lines are 1-based");
    for hunk in &patch.hunks {
        if new_line < hunk.new_start || new_line >= hunk.new_start + hunk.new_count {
            continue;
        }
        // Walk the hunk body tracking the new-file cursor; remember change
        // block boundaries as we go.
        let mut cursor = hunk.new_start;
        let mut block_has_removal = false;
        let mut target_in_block = false;
        for line in &hunk.lines {
            match line.tag {
                LineTag::Context => {
                    if target_in_block {
                        break;
                    }
                    block_has_removal = false;
                    if cursor == new_line {
                        return Classification::NotTouched;
                    }
                    cursor += 1;
                }
                LineTag::Removed => {
                    block_has_removal = true;
                }
                LineTag::Added => {
                    if cursor == new_line {
                        target_in_block = true;
                    }
                    cursor += 1;
                }
            }
        }
        if target_in_block {
            return if block_has_removal {
                Classification::ModifiedExisting
            } else {
                Classification::AddedNew
            };
        }
    }
    Classification::NotTouched
}
