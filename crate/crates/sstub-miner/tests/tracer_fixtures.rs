//! Planted-history tests for origin tracing and introduction classification.

mod common;

use common::{char_range_of_lines, FixtureRepo, ALICE, BOB};
use sstub_miner::dataset::{char_range_to_block, SStubRecord};
use sstub_miner::tracer::{
    candidate_origins, classify_introduction, resolve_origin, trace_record, IntroductionMode,
    ResolutionStatus, Surrounding,
};
use sstub_miner::vcs::{GitClient, RepoHandle};
use tempfile::tempdir;

fn handle(repo: &FixtureRepo) -> RepoHandle {
    RepoHandle {
        project_name: "fixture.repo".to_string(),
        local_path: repo.path.clone(),
        origin_url: String::new(),
    }
}

fn record(
    fix_commit: &str,
    fix_parent: &str,
    path: &str,
    bug_line: usize,
    start_char: usize,
    length: usize,
    before: &str,
) -> SStubRecord {
    SStubRecord {
        record_index: 0,
        project_name: "fixture.repo".to_string(),
        fix_commit: fix_commit.to_string(),
        fix_parent_commit: fix_parent.to_string(),
        bug_file_path: path.to_string(),
        fix_file_path: path.to_string(),
        bug_line_num: bug_line,
        bug_node_start_char: start_char,
        bug_node_length: length,
        source_before_fix: before.to_string(),
        source_after_fix: format!("{before} /* fixed */"),
        bug_type: "FIXTURE".to_string(),
    }
}

#[test]
fn block_written_across_two_commits_yields_both_candidates() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "l1\nl2\nl3\nl4\nl5\n";
    let c1 = repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    let v2 = "l1\nl2\nBUGGY\nl4\nl5\n";
    let c2 = repo.commit(&[("f.java", v2)], &BOB, 2_000, "edit");
    let fix = repo.commit(&[("f.java", "l1\nl2\nFIXED\nl4\nl5\n")], &BOB, 3_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let blame = git.blame_lines(&h, &c2, "f.java").unwrap();
    let (start, len) = char_range_of_lines(v2, 2, 4);
    let block = char_range_to_block(v2, start, len, 3).unwrap().block;

    let candidates = candidate_origins(&block, &blame);
    assert_eq!(candidates.len(), 2);
    assert_eq!(candidates[0].commit, c1); // line 2 first
    assert_eq!(candidates[1].commit, c2);

    // Planted before-fix text exists only in C2's version.
    let rec = record(&fix, &c2, "f.java", 3, start, len, "BUGGY");
    let origin = resolve_origin(&rec, &candidates, &git, &h);
    assert_eq!(origin.status, ResolutionStatus::Resolved);
    assert_eq!(origin.resolved.as_deref(), Some(c2.as_str()));
    assert_eq!(origin.resolved_author.as_deref(), Some("bob@example.com"));
    assert_eq!(origin.resolved_time, Some(2_000));
    assert_eq!(origin.candidates, vec![c1, c2]);
}

#[test]
fn text_present_in_both_candidates_is_ambiguous() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    // DUP already exists at line 5 in C1; C2 plants it again at line 3.
    let v1 = "l1\nl2\nl3\nl4\nDUP\n";
    let c1 = repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    let v2 = "l1\nl2\nDUP\nl4\nDUP\n";
    let c2 = repo.commit(&[("f.java", v2)], &BOB, 2_000, "edit");
    let fix = repo.commit(&[("f.java", "l1\nl2\nFIXED\nl4\nDUP\n")], &ALICE, 3_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let blame = git.blame_lines(&h, &c2, "f.java").unwrap();
    let (start, len) = char_range_of_lines(v2, 2, 4);
    let block = char_range_to_block(v2, start, len, 3).unwrap().block;
    let candidates = candidate_origins(&block, &blame);
    assert_eq!(candidates.len(), 2);

    let rec = record(&fix, &c2, "f.java", 3, start, len, "DUP");
    let origin = resolve_origin(&rec, &candidates, &git, &h);
    assert_eq!(origin.status, ResolutionStatus::AmbiguousMultiMatch);
    assert_eq!(origin.resolved, None);
    // Conservative policy: candidate hashes survive the failure.
    assert_eq!(origin.candidates, vec![c1, c2]);
}

#[test]
fn whitespace_normalized_fallback_matching() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "l1\nl2\nl3\nl4\nl5\n";
    repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    // The buggy line is introduced with different internal spacing than the
    // dataset fragment.
    let v2 = "l1\nl2\nint  x   = 1;\nl4\nl5\n";
    let c2 = repo.commit(&[("f.java", v2)], &BOB, 2_000, "edit");
    let fix = repo.commit(&[("f.java", "l1\nl2\nint x = 2;\nl4\nl5\n")], &BOB, 3_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let blame = git.blame_lines(&h, &c2, "f.java").unwrap();
    let (start, len) = char_range_of_lines(v2, 2, 4);
    let block = char_range_to_block(v2, start, len, 3).unwrap().block;
    let candidates = candidate_origins(&block, &blame);
    assert_eq!(candidates.len(), 2);

    let rec = record(&fix, &c2, "f.java", 3, start, len, "int x = 1;");
    let origin = resolve_origin(&rec, &candidates, &git, &h);
    assert_eq!(origin.status, ResolutionStatus::Resolved);
    assert_eq!(origin.resolved.as_deref(), Some(c2.as_str()));
}

#[test]
fn single_candidate_resolves_without_search() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "a\nb\nc\n";
    let c1 = repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    let fix = repo.commit(&[("f.java", "a\nB\nc\n")], &BOB, 2_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let blame = git.blame_lines(&h, &c1, "f.java").unwrap();
    let (start, len) = char_range_of_lines(v1, 1, 3);
    let block = char_range_to_block(v1, start, len, 2).unwrap().block;
    let candidates = candidate_origins(&block, &blame);
    assert_eq!(candidates.len(), 1);

    // Before-fix text that matches nothing: single candidates still resolve.
    let rec = record(&fix, &c1, "f.java", 2, start, len, "NOT_IN_ANY_VERSION");
    let origin = resolve_origin(&rec, &candidates, &git, &h);
    assert_eq!(origin.status, ResolutionStatus::Resolved);
    assert_eq!(origin.resolved.as_deref(), Some(c1.as_str()));
}

#[test]
fn whole_block_added_by_one_author_classifies_added_new() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "head\n";
    repo.commit(&[("f.java", v1)], &BOB, 500, "head");
    let v2 = "head\nnew1\nNEWBUG\nnew3\n";
    let c2 = repo.commit(&[("f.java", v2)], &ALICE, 1_000, "block");
    let fix = repo.commit(&[("f.java", "head\nnew1\nFIXED\nnew3\n")], &ALICE, 2_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let blame = git.blame_lines(&h, &c2, "f.java").unwrap();
    let (start, len) = char_range_of_lines(v2, 2, 4);
    let block = char_range_to_block(v2, start, len, 3).unwrap().block;
    let candidates = candidate_origins(&block, &blame);
    let rec = record(&fix, &c2, "f.java", 3, start, len, "NEWBUG");
    let origin = resolve_origin(&rec, &candidates, &git, &h);
    assert_eq!(origin.status, ResolutionStatus::Resolved);

    let class = classify_introduction(&rec, &origin, &candidates[0], &block, &blame, &git, &h);
    assert_eq!(class.mode, Some(IntroductionMode::AddedNew));
    assert_eq!(class.same_author_as_surrounding, Surrounding::Same);
    assert_eq!(class.same_commit_as_surrounding, Surrounding::Same);
}

#[test]
fn line_modified_later_by_second_author_classifies_modified() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "s1\ns2\ns3\n";
    repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    let v2 = "s1\nMODBUG\ns3\n";
    let c2 = repo.commit(&[("f.java", v2)], &BOB, 2_000, "modify");
    let fix = repo.commit(&[("f.java", "s1\nFIXED\ns3\n")], &ALICE, 3_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let blame = git.blame_lines(&h, &c2, "f.java").unwrap();
    let (start, len) = char_range_of_lines(v2, 1, 3);
    let block = char_range_to_block(v2, start, len, 2).unwrap().block;
    let candidates = candidate_origins(&block, &blame);
    let rec = record(&fix, &c2, "f.java", 2, start, len, "MODBUG");
    let origin = resolve_origin(&rec, &candidates, &git, &h);
    assert_eq!(origin.status, ResolutionStatus::Resolved);
    assert_eq!(origin.resolved.as_deref(), Some(c2.as_str()));

    let winner = candidates.iter().find(|c| c.commit == c2).unwrap();
    let class = classify_introduction(&rec, &origin, winner, &block, &blame, &git, &h);
    assert_eq!(class.mode, Some(IntroductionMode::ModifiedExisting));
    assert_eq!(class.same_author_as_surrounding, Surrounding::Different);
    assert_eq!(class.same_commit_as_surrounding, Surrounding::Different);
}

#[test]
fn single_line_block_has_no_surrounding() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "x1\nSOLO\nx3\n";
    let c1 = repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    let fix = repo.commit(&[("f.java", "x1\nFIXED\nx3\n")], &BOB, 2_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let blame = git.blame_lines(&h, &c1, "f.java").unwrap();
    let (start, len) = char_range_of_lines(v1, 2, 2);
    let block = char_range_to_block(v1, start, len, 2).unwrap().block;
    let candidates = candidate_origins(&block, &blame);
    let rec = record(&fix, &c1, "f.java", 2, start, len, "SOLO");
    let origin = resolve_origin(&rec, &candidates, &git, &h);

    let class = classify_introduction(&rec, &origin, &candidates[0], &block, &blame, &git, &h);
    assert_eq!(class.mode, Some(IntroductionMode::AddedNew));
    assert_eq!(class.same_author_as_surrounding, Surrounding::NoSurrounding);
    assert_eq!(class.same_commit_as_surrounding, Surrounding::NoSurrounding);
}

#[test]
fn trace_record_end_to_end_resolves_and_reports_metas() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "l1\nl2\nl3\nl4\nl5\n";
    repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    let v2 = "l1\nl2\nBUGGY\nl4\nl5\n";
    let c2 = repo.commit(&[("f.java", v2)], &BOB, 2_000, "edit");
    let fix = repo.commit(&[("f.java", "l1\nl2\nFIXED\nl4\nl5\n")], &ALICE, 3_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let (start, len) = char_range_of_lines(v2, 2, 4);
    let rec = record(&fix, &c2, "f.java", 3, start, len, "BUGGY");

    let (mined, commits) = trace_record(&rec, &git, &h);
    assert_eq!(mined.status, ResolutionStatus::Resolved);
    assert_eq!(mined.resolved.as_deref(), Some(c2.as_str()));
    assert_eq!(mined.mode, Some(IntroductionMode::ModifiedExisting));
    assert_eq!(mined.same_author, Some(Surrounding::Different));
    assert_eq!(mined.same_commit, Some(Surrounding::Different));
    let ids: Vec<&str> = commits.iter().map(|c| c.commit_id.as_str()).collect();
    assert!(ids.contains(&c2.as_str()));
    assert!(ids.contains(&fix.as_str()));
}

#[test]
fn trace_record_with_bad_range_goes_to_omitted_pool() {
    let dir = tempdir().unwrap();
    let repo = FixtureRepo::init(dir.path());
    let v1 = "short\n";
    let c1 = repo.commit(&[("f.java", v1)], &ALICE, 1_000, "add");
    let fix = repo.commit(&[("f.java", "SHORT\n")], &BOB, 2_000, "fix");

    let git = GitClient::default();
    let h = handle(&repo);
    let rec = record(&fix, &c1, "f.java", 1, 100, 50, "short");
    let (mined, _) = trace_record(&rec, &git, &h);
    assert_eq!(mined.status, ResolutionStatus::Error);
    assert!(mined.diagnostics[0].contains("node range"));
}
