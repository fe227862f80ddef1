use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::RelevanceLabel;
use crate::{Error, Result};

/// One patient's ranked trials: descending score, ties by trial id, no
/// duplicate trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRun {
    pub patient_id: String,
    pub entries: Vec<(String, f64)>,
}

impl RankedRun {
    /// Sorts `entries` into run order; rejects duplicate trials.
    pub fn new(patient_id: &str, mut entries: Vec<(String, f64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (id, _) in &entries {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(alloc::format!("{patient_id}/{id}")));
            }
        }
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(RankedRun {
            patient_id: patient_id.into(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps only trials that have a label in `judgments`.
    pub fn judged_only(&self, judgments: &Judgments) -> RankedRun {
        RankedRun {
            patient_id: self.patient_id.clone(),
            entries: self
                .entries
                .iter()
                .filter(|(id, _)| judgments.get(id).is_some_and(|l| l.is_labeled()))
                .cloned()
                .collect(),
        }
    }
}

/// Ground truth for one patient, keyed by trial id.
pub type Judgments = BTreeMap<String, RelevanceLabel>;

fn grade(judgments: &Judgments, id: &str) -> f64 {
    judgments.get(id).map_or(0.0, |l| f64::from(l.grade()))
}

fn top_k_gain(run: &RankedRun, judgments: &Judgments, k: usize) -> f64 {
    run.entries.iter().take(k).map(|(id, _)| grade(judgments, id)).sum()
}

/// Graded recall: relevance captured in the top `k` over all relevance in
/// the judged collection.
pub fn recall_at_k(run: &RankedRun, judgments: &Judgments, k: usize) -> Result<f64> {
    let total: f64 = judgments.values().map(|l| f64::from(l.grade())).sum();
    if total == 0.0 {
        return Err(Error::UndefinedMetric("no relevant trials judged"));
    }
    Ok(top_k_gain(run, judgments, k) / total)
}

fn log2_discount(position: usize) -> f64 {
    libm::log2(position as f64 + 1.0)
}

pub fn dcg_at_k(grades: impl IntoIterator<Item = f64>, k: usize) -> f64 {
    grades
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| g / log2_discount(i + 1))
        .sum()
}

/// NDCG with linear gains and `log2(pos + 1)` discount; the ideal ordering
/// sorts every judged grade in descending order.
pub fn ndcg_at_k(run: &RankedRun, judgments: &Judgments, k: usize) -> Result<f64> {
    let mut ideal: Vec<f64> = judgments.values().map(|l| f64::from(l.grade())).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg_at_k(ideal, k);
    if idcg == 0.0 {
        return Err(Error::UndefinedMetric("ideal DCG is zero"));
    }
    let dcg = dcg_at_k(run.entries.iter().map(|(id, _)| grade(judgments, id)), k);
    Ok(dcg / idcg)
}

/// Graded precision: top-`k` gain over `max_grade * k`. A run shorter than
/// `k` keeps `k` in the denominator.
pub fn precision_at_k(run: &RankedRun, judgments: &Judgments, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::UndefinedMetric("precision at depth 0"));
    }
    Ok(top_k_gain(run, judgments, k) / (f64::from(MAX_GRADE) * k as f64))
}

pub const MAX_GRADE: u8 = 2;

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half. Computed from average ranks in O(n log n).
pub fn auroc(scores: &[(f64, bool)]) -> Result<f64> {
    let positives = scores.iter().filter(|(_, y)| *y).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric("AUROC needs both classes"));
    }
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::UndefinedMetric("NaN score"));
    }
    let mut order: Vec<&(f64, bool)> = scores.iter().collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && order[j + 1].0 == order[i].0 {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean.
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = order[i..=j].iter().filter(|(_, y)| *y).count();
        positive_rank_sum += avg_rank * tied_pos as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}
