//! Ranking metrics and cohort-level reports.

mod metrics;
mod report;

pub use metrics::{
    auroc, dcg_at_k, ndcg_at_k, precision_at_k, recall_at_k, Judgments, RankedRun, MAX_GRADE,
};
pub use report::{evaluate_cohort, macro_mean, EvalConfig, EvalTask, MetricReport};
