//! Final report assembly: the aggregate answers to the four research
//! questions plus run totals, in JSON and CSV form.

use serde::{Deserialize, Serialize};

use crate::analytics::{
    rq_percentages, summarize_records, LifecycleRecord, StatSummary,
};
use crate::tracer::{MiningRecord, ResolutionStatus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmittedCounts {
    pub no_match: usize,
    pub ambiguous: usize,
    pub error: usize,
    pub negative_duration: usize,
}

impl OmittedCounts {
    pub fn total(&self) -> usize {
        self.no_match + self.ambiguous + self.error + self.negative_duration
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub records_in: usize,
    pub records_processed: usize,
    pub commits_examined: usize,
    pub omitted: OmittedCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq1 {
    pub pct_same_author_surrounding: Option<f64>,
    /// Variant counting single-line (no-surrounding) blocks as vacuously
    /// same-author, over all resolved records.
    pub inclusive_variant: Option<f64>,
    pub denominator: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2 {
    pub pct_same_commit_surrounding: Option<f64>,
    pub inclusive_variant: Option<f64>,
    pub denominator: usize,
    pub pct_added_new: Option<f64>,
    pub pct_modified_existing: Option<f64>,
    pub mode_denominator: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq3 {
    pub overall: Option<StatSummary>,
    pub same_author_fix: Option<StatSummary>,
    pub different_author_fix: Option<StatSummary>,
    pub pct_fixed_by_same_author: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq4 {
    pub adapter_name: String,
    pub flag_rate: f64,
    pub analyzed_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleReport {
    pub totals: Totals,
    pub rq1: Rq1,
    pub rq2: Rq2,
    pub rq3: Rq3,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rq4: Option<Rq4>,
}

pub struct ReportInputs<'a> {
    /// Number of objects in the input dataset file.
    pub records_in: usize,
    /// Objects skipped at ingest with a diagnostic.
    pub ingest_skipped: usize,
    pub mining: &'a [MiningRecord],
    pub lifecycle: &'a [LifecycleRecord],
    /// Resolved records excluded for fix-before-origin timestamps.
    pub negative_duration: usize,
    pub commits_examined: usize,
    pub rq4: Option<Rq4>,
}

pub fn build_report(inputs: ReportInputs<'_>) -> LifecycleReport {
    let count_status = |status: ResolutionStatus| {
        inputs.mining.iter().filter(|r| r.status == status).count()
    };
    let resolved = count_status(ResolutionStatus::Resolved);
    let no_match = count_status(ResolutionStatus::NoMatch);
    let ambiguous = count_status(ResolutionStatus::AmbiguousMultiMatch);
    // Resolved records that produced no lifecycle record (missing commit
    // metadata) count as errors, keeping the totals identity exact.
    let resolved_dropped = resolved
        .saturating_sub(inputs.lifecycle.len())
        .saturating_sub(inputs.negative_duration);
    let error = inputs.ingest_skipped + count_status(ResolutionStatus::Error) + resolved_dropped;

    let pcts = rq_percentages(inputs.mining, inputs.lifecycle);

    let same_author_fix: Vec<&LifecycleRecord> = inputs
        .lifecycle
        .iter()
        .filter(|r| r.fixed_by_same_author)
        .collect();
    let different_author_fix: Vec<&LifecycleRecord> = inputs
        .lifecycle
        .iter()
        .filter(|r| !r.fixed_by_same_author)
        .collect();
    let all: Vec<&LifecycleRecord> = inputs.lifecycle.iter().collect();

    LifecycleReport {
        totals: Totals {
            records_in: inputs.records_in,
            records_processed: inputs.lifecycle.len(),
            commits_examined: inputs.commits_examined,
            omitted: OmittedCounts {
                no_match,
                ambiguous,
                error,
                negative_duration: inputs.negative_duration,
            },
        },
        rq1: Rq1 {
            pct_same_author_surrounding: pcts.same_author_surrounding.percent,
            inclusive_variant: pcts.same_author_surrounding_inclusive.percent,
            denominator: pcts.same_author_surrounding.denominator,
        },
        rq2: Rq2 {
            pct_same_commit_surrounding: pcts.same_commit_surrounding.percent,
            inclusive_variant: pcts.same_commit_surrounding_inclusive.percent,
            denominator: pcts.same_commit_surrounding.denominator,
            pct_added_new: pcts.added_new.percent,
            pct_modified_existing: pcts.modified_existing.percent,
            mode_denominator: pcts.added_new.denominator,
        },
        rq3: Rq3 {
            overall: summarize_records(&all).ok(),
            same_author_fix: summarize_records(&same_author_fix).ok(),
            different_author_fix: summarize_records(&different_author_fix).ok(),
            pct_fixed_by_same_author: pcts.fixed_by_same_author.percent,
        },
        rq4: inputs.rq4,
    }
}

/// CSV rendering: one row per statistic, columns metric,group,value,denominator.
pub fn to_csv(report: &LifecycleReport) -> String {
    let mut out = String::from("metric,group,value,denominator\n");
    let mut row = |metric: &str, group: &str, value: String, denom: String| {
        out.push_str(&format!("{metric},{group},{value},{denom}\n"));
    };
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();

    let t = &report.totals;
    row("records_in", "totals", t.records_in.to_string(), String::new());
    row(
        "records_processed",
        "totals",
        t.records_processed.to_string(),
        String::new(),
    );
    row(
        "commits_examined",
        "totals",
        t.commits_examined.to_string(),
        String::new(),
    );
    row("omitted", "no_match", t.omitted.no_match.to_string(), String::new());
    row("omitted", "ambiguous", t.omitted.ambiguous.to_string(), String::new());
    row("omitted", "error", t.omitted.error.to_string(), String::new());
    row(
        "omitted",
        "negative_duration",
        t.omitted.negative_duration.to_string(),
        String::new(),
    );

    row(
        "pct_same_author_surrounding",
        "exclusive",
        opt(report.rq1.pct_same_author_surrounding),
        report.rq1.denominator.to_string(),
    );
    row(
        "pct_same_author_surrounding",
        "inclusive",
        opt(report.rq1.inclusive_variant),
        String::new(),
    );
    row(
        "pct_same_commit_surrounding",
        "exclusive",
        opt(report.rq2.pct_same_commit_surrounding),
        report.rq2.denominator.to_string(),
    );
    row(
        "pct_same_commit_surrounding",
        "inclusive",
        opt(report.rq2.inclusive_variant),
        String::new(),
    );
    row(
        "pct_added_new",
        "modes",
        opt(report.rq2.pct_added_new),
        report.rq2.mode_denominator.to_string(),
    );
    row(
        "pct_modified_existing",
        "modes",
        opt(report.rq2.pct_modified_existing),
        report.rq2.mode_denominator.to_string(),
    );

    for (group, summary) in [
        ("overall", &report.rq3.overall),
        ("same_author_fix", &report.rq3.same_author_fix),
        ("different_author_fix", &report.rq3.different_author_fix),
    ] {
        match summary {
            Some(s) => {
                row("count", group, s.count.to_string(), String::new());
                row("mean_days", group, s.mean_days.to_string(), String::new());
                row("median_days", group, s.median_days.to_string(), String::new());
                row("stddev_days", group, s.stddev_days.to_string(), String::new());
            }
            None => {
                row("count", group, "0".to_string(), String::new());
            }
        }
    }
    row(
        "pct_fixed_by_same_author",
        "overall",
        opt(report.rq3.pct_fixed_by_same_author),
        report.totals.records_processed.to_string(),
    );

    if let Some(rq4) = &report.rq4 {
        row("adapter", &rq4.adapter_name, String::new(), String::new());
        row(
            "flag_rate",
            &rq4.adapter_name,
            rq4.flag_rate.to_string(),
            rq4.analyzed_count.to_string(),
        );
    }
    out
}
