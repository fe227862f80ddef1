use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{auroc, ndcg_at_k, precision_at_k, recall_at_k, Judgments, RankedRun};
use crate::corpus::{Cohort, RelevanceLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTask {
    Retrieval,
    Ranking,
    Excluding,
}

impl EvalTask {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "retrieval" => Some(EvalTask::Retrieval),
            "ranking" => Some(EvalTask::Ranking),
            "excluding" => Some(EvalTask::Excluding),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub recall_depths: Vec<usize>,
    pub ndcg_k: usize,
    pub precision_k: usize,
    /// Drop unjudged trials from ranking runs before scoring.
    pub judged_only: bool,
    /// Labels counted as positives for the excluding task.
    pub exclusion_positive: Vec<RelevanceLabel>,
    /// Labels counted as negatives for the excluding task.
    pub exclusion_negative: Vec<RelevanceLabel>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            recall_depths: (1..=10).map(|i| i * 100).collect(),
            ndcg_k: 10,
            precision_k: 10,
            judged_only: true,
            exclusion_positive: vec![RelevanceLabel::Excluded],
            exclusion_negative: vec![RelevanceLabel::Eligible],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub cohort: String,
    pub task: EvalTask,
    pub config: EvalConfig,
    /// patient -> metric -> value, only where the metric is defined.
    pub per_patient: BTreeMap<String, BTreeMap<String, f64>>,
    /// Arithmetic mean of the per-patient values of each metric.
    pub means: BTreeMap<String, f64>,
    /// Metrics computed over all of the cohort's pairs at once (AUROC).
    pub pooled: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl MetricReport {
    /// Aligned text table: one row per patient, then the mean row.
    pub fn to_table(&self) -> String {
        let mut metrics: Vec<&str> = self.means.keys().map(String::as_str).collect();
        for m in self.pooled.keys() {
            if !metrics.contains(&m.as_str()) {
                metrics.push(m);
            }
        }
        // "recall@200" before "recall@1000".
        metrics.sort_by_key(|m| match m.split_once('@') {
            Some((name, k)) => (name, k.parse::<usize>().unwrap_or(usize::MAX)),
            None => (*m, 0),
        });
        let id_width = self
            .per_patient
            .keys()
            .map(|k| k.chars().count())
            .chain([7, self.cohort.chars().count()])
            .max()
            .unwrap_or(7);
        let col = |m: &str| m.len().max(8);
        let mut out = String::new();
        let _ = write!(out, "{:<id_width$}", "patient");
        for m in &metrics {
            let _ = write!(out, "  {:>w$}", m, w = col(m));
        }
        out.push('\n');
        let fmt_row = |out: &mut String, label: &str, values: &dyn Fn(&str) -> Option<f64>| {
            let _ = write!(out, "{label:<id_width$}");
            for m in &metrics {
                match values(m) {
                    Some(v) => {
                        let _ = write!(out, "  {:>w$.4}", v, w = col(m));
                    }
                    None => {
                        let _ = write!(out, "  {:>w$}", "-", w = col(m));
                    }
                }
            }
            out.push('\n');
        };
        for (pid, values) in &self.per_patient {
            fmt_row(&mut out, pid, &|m| values.get(m).copied());
        }
        fmt_row(&mut out, "mean", &|m| self.means.get(m).copied());
        if !self.pooled.is_empty() {
            fmt_row(&mut out, "pooled", &|m| self.pooled.get(m).copied());
        }
        out
    }
}

/// Scores `runs` against the cohort's judgments.
///
/// Retrieval reports graded Recall at every configured depth; ranking
/// reports NDCG and P at the configured cutoffs; excluding reports AUROC
/// per patient and pooled over the cohort, with the configured label
/// classes as positives and negatives (other labels and unjudged pairs
/// are left out). Patients where a metric is undefined are skipped with a
/// warning.
pub fn evaluate_cohort(cohort: &Cohort, runs: &[RankedRun], task: EvalTask, config: &EvalConfig) -> Result<MetricReport> {
    let by_patient = cohort.judgments_by_patient();
    let mut report = MetricReport {
        cohort: cohort.name.clone(),
        task,
        config: config.clone(),
        per_patient: BTreeMap::new(),
        means: BTreeMap::new(),
        pooled: BTreeMap::new(),
        warnings: Vec::new(),
    };
    let mut overlap = 0usize;
    let mut pooled_pairs = Vec::new();

    for run in runs {
        let Some(raw) = by_patient.get(run.patient_id.as_str()) else {
            continue;
        };
        overlap += 1;
        let judgments: Judgments = raw.iter().map(|(id, j)| ((*id).to_string(), j.label)).collect();
        let mut values = BTreeMap::new();
        let skip = |report: &mut MetricReport, metric: &str, e: Error| {
            report.warnings.push(alloc::format!("{}: {metric} skipped ({e})", run.patient_id));
        };
        match task {
            EvalTask::Retrieval => {
                for &k in &config.recall_depths {
                    let name = alloc::format!("recall@{k}");
                    match recall_at_k(run, &judgments, k) {
                        Ok(v) => {
                            values.insert(name, v);
                        }
                        Err(e) => skip(&mut report, &name, e),
                    }
                }
            }
            EvalTask::Ranking => {
                let scored = if config.judged_only { run.judged_only(&judgments) } else { run.clone() };
                let ndcg = alloc::format!("ndcg@{}", config.ndcg_k);
                match ndcg_at_k(&scored, &judgments, config.ndcg_k) {
                    Ok(v) => {
                        values.insert(ndcg, v);
                    }
                    Err(e) => skip(&mut report, &ndcg, e),
                }
                let p = alloc::format!("p@{}", config.precision_k);
                match precision_at_k(&scored, &judgments, config.precision_k) {
                    Ok(v) => {
                        values.insert(p, v);
                    }
                    Err(e) => skip(&mut report, &p, e),
                }
            }
            EvalTask::Excluding => {
                let pairs: Vec<(f64, bool)> = run
                    .entries
                    .iter()
                    .filter_map(|(id, score)| {
                        let label = judgments.get(id)?;
                        if config.exclusion_positive.contains(label) {
                            Some((*score, true))
                        } else if config.exclusion_negative.contains(label) {
                            Some((*score, false))
                        } else {
                            None
                        }
                    })
                    .collect();
                pooled_pairs.extend_from_slice(&pairs);
                match auroc(&pairs) {
                    Ok(v) => {
                        values.insert("auroc".into(), v);
                    }
                    Err(e) => skip(&mut report, "auroc", e),
                }
            }
        }
        report.per_patient.insert(run.patient_id.clone(), values);
    }
    if overlap == 0 {
        return Err(Error::EmptyOverlap);
    }

    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for values in report.per_patient.values() {
        for (m, v) in values {
            let e = sums.entry(m.as_str()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    let means: BTreeMap<String, f64> = sums.into_iter().map(|(m, (s, n))| (m.to_string(), s / n as f64)).collect();
    report.means = means;

    if task == EvalTask::Excluding {
        match auroc(&pooled_pairs) {
            Ok(v) => {
                report.pooled.insert("auroc".into(), v);
            }
            Err(e) => report.warnings.push(alloc::format!("pooled auroc skipped ({e})")),
        }
    }
    Ok(report)
}

/// Unweighted mean of each metric's cohort mean across reports. Pooled
/// metrics are averaged under a `pooled_` prefix.
pub fn macro_mean(reports: &[MetricReport]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in reports {
        let pooled = r.pooled.iter().map(|(m, v)| (alloc::format!("pooled_{m}"), *v));
        for (m, v) in r.means.iter().map(|(m, v)| (m.clone(), *v)).chain(pooled) {
            let e = sums.entry(m).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect()
}
