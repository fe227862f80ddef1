use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use trialmatch_core::eval::RankedRun;
use trialmatch_core::matching::TrialMatchResult;
use trialmatch_core::ranking::{BaselineCriterionVectors, LinearAggregates, LlmAggregates, NliLabel, TrialScore};
use trialmatch_core::retrieval::RetrievalResult;

use super::{read_jsonl, read_text, write_atomic};
use crate::{Error, Result};

pub fn read_retrieval(path: &Path) -> Result<Vec<RetrievalResult>> {
    read_jsonl(path)
}

pub fn read_matches(path: &Path) -> Result<Vec<TrialMatchResult>> {
    read_jsonl(path)
}

/// One line of `scores.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub patient_id: String,
    pub nct_id: String,
    pub pct_met_inclusion: f64,
    pub pct_unmet_inclusion: f64,
    pub pct_noinfo_inclusion: f64,
    pub pct_met_exclusion: f64,
    pub pct_unmet_exclusion: f64,
    pub pct_noinfo_exclusion: f64,
    pub m_effective: usize,
    pub n_effective: usize,
    pub relevance: f64,
    pub eligibility: f64,
    pub combined_ranking: f64,
    pub exclusion_score: f64,
    #[serde(default)]
    pub llm_clamped: bool,
    #[serde(default)]
    pub llm_parse_failed: bool,
}

impl From<&TrialScore> for ScoreRecord {
    fn from(s: &TrialScore) -> Self {
        let l = &s.linear;
        ScoreRecord {
            patient_id: s.patient_id.clone(),
            nct_id: s.nct_id.clone(),
            pct_met_inclusion: l.pct_met_inclusion,
            pct_unmet_inclusion: l.pct_unmet_inclusion,
            pct_noinfo_inclusion: l.pct_noinfo_inclusion,
            pct_met_exclusion: l.pct_met_exclusion,
            pct_unmet_exclusion: l.pct_unmet_exclusion,
            pct_noinfo_exclusion: l.pct_noinfo_exclusion,
            m_effective: l.m_effective,
            n_effective: l.n_effective,
            relevance: s.llm.relevance,
            eligibility: s.llm.eligibility,
            combined_ranking: s.combined_ranking,
            exclusion_score: s.exclusion_score,
            llm_clamped: s.llm.clamped,
            llm_parse_failed: s.llm.parse_failed,
        }
    }
}

impl From<&ScoreRecord> for TrialScore {
    fn from(r: &ScoreRecord) -> Self {
        TrialScore {
            patient_id: r.patient_id.clone(),
            nct_id: r.nct_id.clone(),
            linear: LinearAggregates {
                pct_met_inclusion: r.pct_met_inclusion,
                pct_unmet_inclusion: r.pct_unmet_inclusion,
                pct_noinfo_inclusion: r.pct_noinfo_inclusion,
                pct_met_exclusion: r.pct_met_exclusion,
                pct_unmet_exclusion: r.pct_unmet_exclusion,
                pct_noinfo_exclusion: r.pct_noinfo_exclusion,
                m_effective: r.m_effective,
                n_effective: r.n_effective,
            },
            llm: LlmAggregates {
                relevance: r.relevance,
                eligibility: r.eligibility,
                raw_response: String::new(),
                clamped: r.llm_clamped,
                parse_failed: r.llm_parse_failed,
            },
            combined_ranking: r.combined_ranking,
            exclusion_score: r.exclusion_score,
        }
    }
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    read_jsonl(path)
}

/// Writes TREC-style run rows `patient_id nct_id rank score tag`, ranks
/// 1-based in the given order.
pub fn write_run(path: &Path, runs: &[RankedRun], tag: &str) -> Result<()> {
    let mut out = String::new();
    for run in runs {
        for (pos, (nct_id, score)) in run.entries.iter().enumerate() {
            let _ = writeln!(out, "{} {} {} {} {}", run.patient_id, nct_id, pos + 1, score, tag);
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a run file back into per-patient runs (ordered by patient id).
/// The score column decides the order; the rank column is only checked
/// for being a positive integer.
pub fn read_run(path: &Path) -> Result<Vec<RankedRun>> {
    let text = read_text(path)?;
    let mut grouped: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Line {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [patient, nct, rank, score, ..] = cols[..] else {
            return Err(err(format!("expected 5 columns, found {}", cols.len())));
        };
        rank.parse::<u32>()
            .ok()
            .filter(|&r| r > 0)
            .ok_or_else(|| err(format!("bad rank {rank:?}")))?;
        let score: f64 = score.parse().map_err(|_| err(format!("bad score {score:?}")))?;
        grouped.entry(patient.to_string()).or_default().push((nct.to_string(), score));
    }
    grouped
        .into_iter()
        .map(|(p, entries)| RankedRun::new(&p, entries).map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

/// One line of `baseline_vectors.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineVectorRecord {
    pub patient_id: String,
    pub nct_id: String,
    #[serde(flatten)]
    pub vectors: BaselineCriterionVectors,
}

/// One line of `baseline_nli_labels.jsonl`: one NLI label per criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineNliRecord {
    pub patient_id: String,
    pub nct_id: String,
    pub inclusion: Vec<NliLabel>,
    pub exclusion: Vec<NliLabel>,
}

pub fn load_baseline_vectors(path: &Path) -> Result<Vec<BaselineVectorRecord>> {
    read_jsonl(path)
}

pub fn load_baseline_nli(path: &Path) -> Result<Vec<BaselineNliRecord>> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.run");
        let runs = vec![
            RankedRun::new("p1", vec![("NCT2".into(), 0.5), ("NCT1".into(), 1.25)]).unwrap(),
            RankedRun::new("p2", vec![("NCT3".into(), -0.1)]).unwrap(),
        ];
        write_run(&p, &runs, "tm").unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("p1 NCT1 1 1.25 tm\np1 NCT2 2 0.5 tm\n"));
        assert_eq!(read_run(&p).unwrap(), runs);
    }

    #[test]
    fn short_rows_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.run");
        std::fs::write(&p, "p1 NCT1 1\n").unwrap();
        assert!(matches!(read_run(&p), Err(Error::Line { line: 1, .. })));
    }

    #[test]
    fn nli_labels_parse() {
        let line = r#"{"patient_id":"p","nct_id":"n","inclusion":["entailment","neutral"],"exclusion":["contradiction"]}"#;
        let r: BaselineNliRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.inclusion, [NliLabel::Entailment, NliLabel::Neutral]);
    }
}
