use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Decision, ScreeningDecision};

/// Assisted vs. unassisted timing for one grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCell {
    pub assisted_n: usize,
    pub unassisted_n: usize,
    pub assisted_mean_ms: f64,
    pub unassisted_mean_ms: f64,
    /// `1 - mean(assisted) / mean(unassisted)`.
    pub saving: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assisted_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unassisted_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningSummary {
    pub overall: Option<ModeCell>,
    pub per_case: BTreeMap<String, ModeCell>,
    pub per_trial: BTreeMap<String, ModeCell>,
    pub per_annotator: BTreeMap<String, ModeCell>,
    /// Keyed by the caller's case grouping (e.g. short / long notes).
    pub per_case_group: BTreeMap<String, ModeCell>,
    pub notes: Vec<String>,
}

#[derive(Default)]
struct Acc {
    time: [(f64, usize); 2],
    correct: [(usize, usize); 2],
}

impl Acc {
    fn add(&mut self, d: &ScreeningDecision, truth: Option<Decision>) {
        let m = usize::from(d.assisted);
        self.time[m].0 += d.elapsed_ms as f64;
        self.time[m].1 += 1;
        if let Some(t) = truth {
            self.correct[m].1 += 1;
            if t == d.decision {
                self.correct[m].0 += 1;
            }
        }
    }

    fn cell(&self) -> Option<ModeCell> {
        let [(un_sum, un_n), (as_sum, as_n)] = self.time;
        if un_n == 0 || as_n == 0 {
            return None;
        }
        let assisted_mean_ms = as_sum / as_n as f64;
        let unassisted_mean_ms = un_sum / un_n as f64;
        let acc = |(c, n): (usize, usize)| (n > 0).then(|| c as f64 / n as f64);
        Some(ModeCell {
            assisted_n: as_n,
            unassisted_n: un_n,
            assisted_mean_ms,
            unassisted_mean_ms,
            saving: 1.0 - assisted_mean_ms / unassisted_mean_ms,
            assisted_accuracy: acc(self.correct[1]),
            unassisted_accuracy: acc(self.correct[0]),
        })
    }
}

/// Mean screening time with and without assistance, overall and per case,
/// trial, annotator and (optionally) case group. Groupings missing either
/// mode are left out and noted. `answer_key` maps (patient, trial) to the
/// correct decision and adds accuracy to each cell.
pub fn screening_summary(
    decisions: &[ScreeningDecision],
    case_groups: Option<&BTreeMap<String, String>>,
    answer_key: Option<&BTreeMap<(String, String), Decision>>,
) -> ScreeningSummary {
    let mut overall = Acc::default();
    let mut per_case: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut per_trial: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut per_annotator: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut per_group: BTreeMap<&str, Acc> = BTreeMap::new();
    for d in decisions {
        let truth = answer_key.and_then(|k| k.get(&(d.patient_id.clone(), d.nct_id.clone())).copied());
        overall.add(d, truth);
        per_case.entry(&d.patient_id).or_default().add(d, truth);
        per_trial.entry(&d.nct_id).or_default().add(d, truth);
        per_annotator.entry(&d.annotator_id).or_default().add(d, truth);
        if let Some(group) = case_groups.and_then(|g| g.get(&d.patient_id)) {
            per_group.entry(group).or_default().add(d, truth);
        }
    }
    let mut notes = Vec::new();
    let mut finish = |kind: &str, groups: BTreeMap<&str, Acc>| -> BTreeMap<String, ModeCell> {
        let mut out = BTreeMap::new();
        for (key, acc) in groups {
            match acc.cell() {
                Some(c) => {
                    out.insert(String::from(key), c);
                }
                None => notes.push(alloc::format!("{kind} {key}: omitted, one mode has no decisions")),
            }
        }
        out
    };
    let per_case = finish("case", per_case);
    let per_trial = finish("trial", per_trial);
    let per_annotator = finish("annotator", per_annotator);
    let per_case_group = finish("case group", per_group);
    let overall = overall.cell();
    if overall.is_none() {
        notes.push("overall: omitted, one mode has no decisions".into());
    }
    ScreeningSummary {
        overall,
        per_case,
        per_trial,
        per_annotator,
        per_case_group,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn d(patient: &str, trial: &str, annotator: &str, assisted: bool, ms: u64) -> ScreeningDecision {
        ScreeningDecision {
            patient_id: patient.into(),
            nct_id: trial.into(),
            decision: Decision::Maybe,
            assisted,
            elapsed_ms: ms,
            annotator_id: annotator.into(),
            timestamp: "2024-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn reported_overall_saving() {
        // Mean 61.5 s without and 35.3 s with assistance.
        let ds = [
            d("a", "t", "x", false, 60_000),
            d("a", "t", "y", true, 35_000),
            d("b", "t", "y", false, 63_000),
            d("b", "t", "x", true, 35_600),
        ];
        let s = screening_summary(&ds, None, None);
        let o = s.overall.unwrap();
        assert!((o.unassisted_mean_ms - 61_500.0).abs() < 1e-9);
        assert!((o.assisted_mean_ms - 35_300.0).abs() < 1e-9);
        assert!((o.saving - 0.426).abs() < 5e-4);
    }

    #[test]
    fn equal_means_save_nothing() {
        let s = screening_summary(&[d("a", "t", "x", false, 1000), d("a", "t", "y", true, 1000)], None, None);
        assert_eq!(s.overall.unwrap().saving, 0.0);
    }

    #[test]
    fn empty_cells_are_noted() {
        let s = screening_summary(&[d("a", "t", "x", false, 1000)], None, None);
        assert!(s.overall.is_none());
        assert!(s.per_case.is_empty());
        assert!(!s.notes.is_empty());
    }

    #[test]
    fn case_groups_and_accuracy() {
        let ds = [
            d("short1", "t", "x", false, 4000),
            d("short1", "t", "y", true, 2000),
            d("long1", "t", "x", true, 5000),
            d("long1", "t", "y", false, 10_000),
        ];
        let groups: BTreeMap<String, String> =
            [("short1".to_string(), "short".to_string()), ("long1".to_string(), "long".to_string())].into();
        let key: BTreeMap<(String, String), Decision> = [(("short1".to_string(), "t".to_string()), Decision::No)].into();
        let s = screening_summary(&ds, Some(&groups), Some(&key));
        assert_eq!(s.per_case_group["short"].saving, 0.5);
        assert_eq!(s.per_case_group["long"].saving, 0.5);
        let o = s.overall.unwrap();
        assert_eq!(o.assisted_accuracy, Some(0.0));
        assert_eq!(o.unassisted_accuracy, Some(0.0));
    }
}
