//! Shared git fixture machinery for integration tests: deterministic
//! repositories with planted authors, timestamps, and file histories.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub struct FixtureRepo {
    pub path: PathBuf,
}

pub struct Author {
    pub name: &'static str,
    pub email: &'static str,
}

pub const ALICE: Author = Author {
    name: "Alice",
    email: "alice@example.com",
};
pub const BOB: Author = Author {
    name: "Bob",
    email: "bob@example.com",
};

impl FixtureRepo {
    /// Initialize a repository at `path` (created if needed).
    pub fn init(path: &Path) -> Self {
        std::fs::create_dir_all(path).unwrap();
        let repo = FixtureRepo {
            path: path.to_path_buf(),
        };
        repo.git(&["init", "--quiet", "--initial-branch=main"]);
        repo.git(&["config", "user.name", "fixture"]);
        repo.git(&["config", "user.email", "fixture@example.com"]);
        repo
    }

    pub fn git(&self, args: &[&str]) -> String {
        let output = Command::new("git")
            .args(args)
            .current_dir(&self.path)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "git {:?} failed: {}",
            args,
            String::from_utf8_lossy(&output.stderr)
        );
        String::from_utf8_lossy(&output.stdout).into_owned()
    }

    /// Raw git invocation that may fail; returns (stdout, success).
    pub fn git_raw(&self, args: &[&str]) -> (Vec<u8>, bool) {
        let output = Command::new("git")
            .args(args)
            .current_dir(&self.path)
            .output()
            .unwrap();
        (output.stdout, output.status.success())
    }

    /// Write files and commit them with a planted author and timestamp.
    /// Returns the commit id.
    pub fn commit(&self, files: &[(&str, &str)], author: &Author, time: i64, message: &str) -> String {
        for (rel, content) in files {
            let file_path = self.path.join(rel);
            if let Some(parent) = file_path.parent() {
                std::fs::create_dir_all(parent).unwrap();
            }
            std::fs::write(file_path, content).unwrap();
            self.git(&["add", rel]);
        }
        let date = format!("@{time} +0000");
        let output = Command::new("git")
            .args(["commit", "--quiet", "--allow-empty", "-m", message])
            .current_dir(&self.path)
            .env("GIT_AUTHOR_NAME", author.name)
            .env("GIT_AUTHOR_EMAIL", author.email)
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_NAME", author.name)
            .env("GIT_COMMITTER_EMAIL", author.email)
            .env("GIT_COMMITTER_DATE", &date)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "commit failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        self.head()
    }

    pub fn head(&self) -> String {
        self.git(&["rev-parse", "HEAD"]).trim().to_string()
    }
}

/// Character offset range covering lines `start..=end` (1-based) of `text`,
/// excluding the trailing newline of the last line. Returns (start, length)
/// in char counts, the way the dataset encodes node coordinates.
pub fn char_range_of_lines(text: &str, start: usize, end: usize) -> (usize, usize) {
    let mut offsets = Vec::new(); // char offset of each line start
    offsets.push(0usize);
    for (i, ch) in text.chars().enumerate() {
        if ch == '\n' {
            offsets.push(i + 1);
        }
    }
    let range_start = offsets[start - 1];
    let line_end = |line: usize| {
        let from = offsets[line - 1];
        let len = text.chars().skip(from).take_while(|c| *c != '\n').count();
        from + len
    };
    let range_end = line_end(end);
    (range_start, range_end - range_start)
}

/// Independent blame-span oracle: parse the reference client's default
/// `blame -l` output (sha is the first token; boundary commits carry a `^`
/// prefix and a truncated sha). Returns (start_line, line_count, sha_prefix).
pub fn reference_blame_spans(
    repo: &FixtureRepo,
    commit: &str,
    path: &str,
) -> Vec<(usize, usize, String)> {
    let out = repo.git(&["blame", "-l", commit, "--", path]);
    let mut spans: Vec<(usize, usize, String)> = Vec::new();
    for (i, line) in out.lines().enumerate() {
        let sha = line
            .split_whitespace()
            .next()
            .unwrap()
            .trim_start_matches('^')
            .to_string();
        match spans.last_mut() {
            Some((_, count, last)) if *last == sha => *count += 1,
            _ => spans.push((i + 1, 1, sha)),
        }
    }
    spans
}

/// A dataset object in ManySStuBs4J naming.
pub fn dataset_object(
    project: &str,
    fix_commit: &str,
    fix_parent: &str,
    path: &str,
    bug_line: usize,
    start_char: usize,
    length: usize,
    before: &str,
    after: &str,
) -> serde_json::Value {
    serde_json::json!({
        "projectName": project,
        "fixCommitSHA1": fix_commit,
        "fixCommitParentSHA1": fix_parent,
        "bugFilePath": path,
        "fixFilePath": path,
        "bugLineNum": bug_line,
        "bugNodeStartChar": start_char,
        "bugNodeLength": length,
        "sourceBeforeFix": before,
        "sourceAfterFix": after,
        "bugType": "FIXTURE",
    })
}

/// A planted five-record end-to-end fixture: one file in project `acme.lib`,
/// nine commits, and a dataset whose expected report was computed by hand.
///
/// Expected outcomes:
/// - R0: bug line 5 introduced by C2 (bob) modifying C1's line; fixed by C4
///   (bob). Resolved, modified-existing, surroundings differ, 200,000 s.
/// - R1: lines 11-13 appended by C3 (alice); bug line 12 fixed by C5 (alice).
///   Resolved, added-new, surroundings same, 200,000 s.
/// - R2: single-line block at line 2 from the root commit C1 (alice); fixed
///   by C6 (bob). Resolved, added-new, no surrounding, 500,000 s.
/// - R3: C7 planted text at line 8 duplicating line 10, so the before-fix
///   source matches two candidate versions. Ambiguous, omitted.
/// - R4: C8 replaced line 8 with unique text; fixed by C9 (alice). Resolved,
///   modified-existing, surroundings differ, 100,000 s.
pub struct E2eFixture {
    pub root: PathBuf,
    pub repos_dir: PathBuf,
    pub dataset: PathBuf,
}

pub fn build_e2e_fixture(root: &Path) -> E2eFixture {
    let repos_dir = root.join("repos");
    let repo = FixtureRepo::init(&repos_dir.join("acme__lib"));

    let base: Vec<String> = vec![
        "l01".into(),
        "SOLO_BUG_MARKER".into(),
        "l03".into(),
        "l04".into(),
        "ORIG_05".into(),
        "l06".into(),
        "l07".into(),
        "ORIG_08".into(),
        "l09".into(),
        "int checksum = seed;".into(),
    ];
    let render = |lines: &[String]| {
        let mut text = lines.join("\n");
        text.push('\n');
        text
    };
    let path = "src/Widget.java";

    let v1 = render(&base);
    repo.commit(&[(path, &v1)], &ALICE, 1_000_000, "initial");

    let mut lines = base.clone();
    lines[4] = "R0_BUGGY_STATEMENT".into();
    let v2 = render(&lines);
    repo.commit(&[(path, &v2)], &BOB, 1_100_000, "tweak statement");

    lines.push("n11".into());
    lines.push("TODOBUG R1_LINE".into());
    lines.push("n13".into());
    let v3 = render(&lines);
    repo.commit(&[(path, &v3)], &ALICE, 1_200_000, "append block");

    lines[4] = "R0_FIXED_STATEMENT".into();
    let v4 = render(&lines);
    let c4 = repo.commit(&[(path, &v4)], &BOB, 1_300_000, "fix statement");

    lines[11] = "R1_FIXED_LINE".into();
    let v5 = render(&lines);
    let c5 = repo.commit(&[(path, &v5)], &ALICE, 1_400_000, "fix appended line");

    lines[1] = "SOLO_FIXED".into();
    let v6 = render(&lines);
    let c6 = repo.commit(&[(path, &v6)], &BOB, 1_500_000, "fix solo line");

    lines[7] = "int checksum = seed;".into();
    let v7 = render(&lines);
    let c7 = repo.commit(&[(path, &v7)], &ALICE, 1_600_000, "duplicate checksum");

    lines[7] = "R4_BUGGY_UNIQUE".into();
    let v8 = render(&lines);
    let c8 = repo.commit(&[(path, &v8)], &BOB, 1_700_000, "replace checksum");

    lines[7] = "R4_FIXED".into();
    let v9 = render(&lines);
    let c9 = repo.commit(&[(path, &v9)], &ALICE, 1_800_000, "fix replacement");

    let (s0, l0) = char_range_of_lines(&v3, 4, 6);
    let (s1, l1) = char_range_of_lines(&v4, 11, 13);
    let (s2, l2) = char_range_of_lines(&v5, 2, 2);
    let (s3, l3) = char_range_of_lines(&v7, 7, 9);
    let (s4, l4) = char_range_of_lines(&v8, 7, 9);
    let fix_parent = |commit: &str| {
        let spec = format!("{commit}^");
        repo.git(&["rev-parse", &spec]).trim().to_string()
    };
    let records = serde_json::Value::Array(vec![
        dataset_object("acme.lib", &c4, &fix_parent(&c4), path, 5, s0, l0, "R0_BUGGY_STATEMENT", "R0_FIXED_STATEMENT"),
        dataset_object("acme.lib", &c5, &c4, path, 12, s1, l1, "TODOBUG R1_LINE", "R1_FIXED_LINE"),
        dataset_object("acme.lib", &c6, &c5, path, 2, s2, l2, "SOLO_BUG_MARKER", "SOLO_FIXED"),
        dataset_object("acme.lib", &c8, &c7, path, 8, s3, l3, "int checksum = seed;", "R4_BUGGY_UNIQUE"),
        dataset_object("acme.lib", &c9, &c8, path, 8, s4, l4, "R4_BUGGY_UNIQUE", "R4_FIXED"),
    ]);
    let dataset = root.join("dataset.json");
    std::fs::write(&dataset, serde_json::to_string_pretty(&records).unwrap()).unwrap();

    E2eFixture {
        root: root.to_path_buf(),
        repos_dir,
        dataset,
    }
}

impl E2eFixture {
    /// Write a config file named after `name`, with a per-name output dir.
    /// Returns (config path, output dir).
    pub fn config(
        &self,
        name: &str,
        jobs: usize,
        analyzer: bool,
        formats: &[&str],
    ) -> (PathBuf, PathBuf) {
        let output_dir = self.root.join(name);
        let mut config = serde_json::json!({
            "dataset_path": self.dataset,
            "repos_dir": self.repos_dir,
            "output_dir": output_dir,
            "jobs": jobs,
            "report_formats": formats,
        });
        if analyzer {
            config["analyzer"] = serde_json::json!({
                "name": "demo",
                "command": "builtin:demo",
                "format": "line-colon",
            });
        }
        let config_path = self.root.join(format!("{name}.config.json"));
        std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
        (config_path, output_dir)
    }

    pub fn run_config(&self, name: &str, jobs: usize, analyzer: bool) -> sstub_miner::RunConfig {
        let (path, _) = self.config(name, jobs, analyzer, &["json"]);
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
    }
}

/// Invoke the compiled CLI binary.
pub fn run_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sstub-miner"))
        .args(args)
        .output()
        .unwrap()
}
