//! Fix-latency and introduction statistics over mining records.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracer::{IntroductionMode, MiningRecord, ResolutionStatus, Surrounding};
use crate::vcs::CommitMeta;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleRecord {
    pub record_index: usize,
    pub origin_time: i64,
    pub fix_time: i64,
    pub duration_days: f64,
    pub fixed_by_same_author: bool,
}

/// Why a resolved record was left out of the latency statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NegativeDuration,
}

pub fn build_lifecycle(
    mining: &MiningRecord,
    fix_meta: &CommitMeta,
    origin_meta: &CommitMeta,
) -> Result<LifecycleRecord, ExclusionReason> {
    debug_assert_eq!(mining.status, ResolutionStatus::Resolved);
    let origin_time = origin_meta.author_time;
    let fix_time = fix_meta.author_time;
    if fix_time < origin_time {
        return Err(ExclusionReason::NegativeDuration);
    }
    Ok(LifecycleRecord {
        record_index: mining.record_index,
        origin_time,
        fix_time,
        duration_days: (fix_time - origin_time) as f64 / SECONDS_PER_DAY,
        fixed_by_same_author: fix_meta.author_key()
            == origin_meta.author_key(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub count: usize,
    pub mean_days: f64,
    /// Lower-middle element for even counts.
    pub median_days: f64,
    /// Population standard deviation.
    pub stddev_days: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot summarize an empty group")]
pub struct EmptyGroup;

pub fn summarize(durations_days: &[f64]) -> Result<StatSummary, EmptyGroup> {
    if durations_days.is_empty() {
        return Err(EmptyGroup);
    }
    let n = durations_days.len();
    let mean = durations_days.iter().sum::<f64>() / n as f64;
    let variance = durations_days
        .iter()
        .map(|d| (d - mean) * (d - mean))
        .sum::<f64>()
        / n as f64;
    let mut sorted = durations_days.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(StatSummary {
        count: n,
        mean_days: mean,
        median_days: sorted[(n - 1) / 2],
        stddev_days: variance.sqrt(),
    })
}

pub fn summarize_records(group: &[&LifecycleRecord]) -> Result<StatSummary, EmptyGroup> {
    let durations: Vec<f64> = group.iter().map(|r| r.duration_days).collect();
    summarize(&durations)
}

/// A percentage together with the denominator it was computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percentage {
    pub percent: Option<f64>,
    pub numerator: usize,
    pub denominator: usize,
}

impl Percentage {
    pub fn of(numerator: usize, denominator: usize) -> Self {
        Percentage {
            percent: (denominator > 0).then(|| 100.0 * numerator as f64 / denominator as f64),
            numerator,
            denominator,
        }
    }
}

/// RQ1/RQ2 surrounding and introduction-mode percentages over resolved
/// mining records, plus the same-author-fix share over lifecycle records.
///
/// Single-line blocks carry no surrounding evidence, so the headline
/// percentages exclude them; the `*_inclusive` variants count them as
/// vacuously true.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RqPercentages {
    pub resolved_count: usize,
    pub same_author_surrounding: Percentage,
    pub same_author_surrounding_inclusive: Percentage,
    pub same_commit_surrounding: Percentage,
    pub same_commit_surrounding_inclusive: Percentage,
    pub added_new: Percentage,
    pub modified_existing: Percentage,
    pub fixed_by_same_author: Percentage,
}

pub fn rq_percentages(mining: &[MiningRecord], lifecycle: &[LifecycleRecord]) -> RqPercentages {
    let resolved: Vec<&MiningRecord> = mining
        .iter()
        .filter(|r| r.status == ResolutionStatus::Resolved)
        .collect();

    let surrounding_pcts = |field: fn(&MiningRecord) -> Option<Surrounding>| {
        let with_surrounding: Vec<Surrounding> = resolved
            .iter()
            .filter_map(|r| field(r))
            .filter(|s| *s != Surrounding::NoSurrounding)
            .collect();
        let same = with_surrounding
            .iter()
            .filter(|s| **s == Surrounding::Same)
            .count();
        let vacuous = resolved
            .iter()
            .filter(|r| field(r) == Some(Surrounding::NoSurrounding))
            .count();
        (
            Percentage::of(same, with_surrounding.len()),
            Percentage::of(same + vacuous, resolved.len()),
        )
    };
    let (same_author, same_author_inclusive) = surrounding_pcts(|r| r.same_author);
    let (same_commit, same_commit_inclusive) = surrounding_pcts(|r| r.same_commit);

    let with_mode = resolved.iter().filter(|r| r.mode.is_some()).count();
    let added = resolved
        .iter()
        .filter(|r| r.mode == Some(IntroductionMode::AddedNew))
        .count();
    let modified = resolved
        .iter()
        .filter(|r| r.mode == Some(IntroductionMode::ModifiedExisting))
        .count();

    let same_author_fixes = lifecycle.iter().filter(|r| r.fixed_by_same_author).count();

    RqPercentages {
        resolved_count: resolved.len(),
        same_author_surrounding: same_author,
        same_author_surrounding_inclusive: same_author_inclusive,
        same_commit_surrounding: same_commit,
        same_commit_surrounding_inclusive: same_commit_inclusive,
        added_new: Percentage::of(added, with_mode),
        modified_existing: Percentage::of(modified, with_mode),
        fixed_by_same_author: Percentage::of(same_author_fixes, lifecycle.len()),
    }
}
