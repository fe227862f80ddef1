use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use trialmatch_core::corpus::Cohort;
use trialmatch_core::eval::{evaluate_cohort, macro_mean, EvalTask, MetricReport, RankedRun};

use super::{load_cohort, run_file, REPORT_JSON, REPORT_TXT};
use crate::config::Config;
use crate::formats::{read_run, write_atomic, write_json};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationOutput {
    pub cohort: String,
    pub feature: String,
    pub reports: Vec<MetricReport>,
    /// Means over the reports (one cohort here, so equal to its means).
    pub macro_mean: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

fn evaluate_run(
    cohort: &Cohort,
    runs: &[RankedRun],
    task: EvalTask,
    cfg: &Config,
    warnings: &mut Vec<String>,
) -> Option<MetricReport> {
    match evaluate_cohort(cohort, runs, task, &cfg.eval) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("{task:?} task skipped: {e}"));
            None
        }
    }
}

/// Scores the retrieval run and the selected feature's ranking and
/// excluding runs against the qrels. Tasks whose run file is absent or
/// whose metrics are undefined on this cohort are skipped with a warning;
/// at least one task must be evaluated.
pub fn evaluate(cfg: &Config) -> Result<EvaluationOutput> {
    let cohort = load_cohort(cfg)?;
    let feature = cfg.feature.as_str();
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    let tasks = [
        (EvalTask::Retrieval, run_file("retrieval", "fused")),
        (EvalTask::Ranking, run_file("ranking", feature)),
        (EvalTask::Excluding, run_file("excluding", feature)),
    ];
    for (task, file) in tasks {
        let path = cfg.artifact(&file);
        if !path.exists() {
            warnings.push(format!("{task:?} task skipped: {} not found", path.display()));
            continue;
        }
        let runs = read_run(&path)?;
        if let Some(r) = evaluate_run(&cohort, &runs, task, cfg, &mut warnings) {
            reports.push(r);
        }
    }
    if reports.is_empty() {
        return Err(Error::MissingInput(cfg.artifact(&run_file("ranking", feature))));
    }
    let out = EvaluationOutput {
        cohort: cohort.name.clone(),
        feature: feature.to_string(),
        macro_mean: macro_mean(&reports),
        reports,
        warnings,
    };
    write_json(&cfg.artifact(REPORT_JSON), &out)?;
    let mut text = String::new();
    for r in &out.reports {
        let _ = writeln!(text, "== {} / {:?} / {}", out.cohort, r.task, out.feature);
        text.push_str(&r.to_table());
        for w in &r.warnings {
            let _ = writeln!(text, "warning: {w}");
        }
        text.push('\n');
    }
    for w in &out.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    write_atomic(&cfg.artifact(REPORT_TXT), text.as_bytes())?;
    Ok(out)
}
