//! Batch mining toolchain for simple-stupid-bug (SStuB) life-cycle analysis.
//!
//! The pipeline ingests a ManySStuBs4J-style dataset, traces each bug record
//! back to the commit that introduced it via `git blame`, classifies whether
//! the bug arrived with new code or a modification, measures how long it
//! survived and who fixed it, and optionally checks whether a static analyzer
//! would have flagged the buggy lines.

pub mod analytics;
pub mod dataset;
pub mod diffparse;
pub mod flagcheck;
pub mod jsonl;
pub mod pipeline;
pub mod report;
pub mod tracer;
pub mod vcs;

pub use pipeline::{RunConfig, StageName};
pub use report::LifecycleReport;
