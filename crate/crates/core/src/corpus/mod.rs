//! Trials, patient notes, relevance judgments and the segmenters that turn
//! raw text into indexed criteria and sentences.

mod criteria;
mod qrels;
mod sentences;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use criteria::segment_criteria;
pub use qrels::{parse_qrels, LabelVocabulary, RelevanceJudgment, RelevanceLabel};
pub use sentences::segment_sentences;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inclusion,
    Exclusion,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Inclusion, Side::Exclusion];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Inclusion => "inclusion",
            Side::Exclusion => "exclusion",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    /// 0-based position within its side.
    pub index: usize,
    pub side: Side,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub nct_id: String,
    pub title: String,
    pub conditions: Vec<String>,
    pub interventions: Vec<String>,
    pub brief_summary: String,
    pub inclusion_criteria: Vec<Criterion>,
    pub exclusion_criteria: Vec<Criterion>,
}

/// Criteria as they arrive from a corpus file: already split, or one raw
/// registry block that still has to go through [`segment_criteria`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CriteriaSource {
    List(Vec<String>),
    Block(String),
}

impl CriteriaSource {
    fn into_texts(self) -> Vec<String> {
        match self {
            CriteriaSource::Block(block) => segment_criteria(&block),
            CriteriaSource::List(items) => items
                .into_iter()
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }
}

impl TrialRecord {
    pub fn new(
        nct_id: &str,
        title: &str,
        conditions: Vec<String>,
        interventions: Vec<String>,
        brief_summary: &str,
        inclusion: CriteriaSource,
        exclusion: CriteriaSource,
    ) -> Result<Self> {
        let nct_id = nct_id.trim();
        if nct_id.is_empty() {
            return Err(Error::InvalidRecord("trial without nct_id".into()));
        }
        let build = |side, source: CriteriaSource| {
            source
                .into_texts()
                .into_iter()
                .enumerate()
                .map(|(index, text)| Criterion { index, side, text })
                .collect::<Vec<_>>()
        };
        Ok(TrialRecord {
            nct_id: nct_id.to_string(),
            title: title.to_string(),
            conditions,
            interventions,
            brief_summary: brief_summary.to_string(),
            inclusion_criteria: build(Side::Inclusion, inclusion),
            exclusion_criteria: build(Side::Exclusion, exclusion),
        })
    }

    pub fn criteria(&self, side: Side) -> &[Criterion] {
        match side {
            Side::Inclusion => &self.inclusion_criteria,
            Side::Exclusion => &self.exclusion_criteria,
        }
    }

    /// Text fed to the lexical index and to the hashing embedder.
    pub fn document_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        parts.push(&self.title);
        parts.extend(self.conditions.iter().map(String::as_str));
        parts.extend(self.interventions.iter().map(String::as_str));
        parts.push(&self.brief_summary);
        parts.extend(self.inclusion_criteria.iter().map(|c| c.text.as_str()));
        parts.extend(self.exclusion_criteria.iter().map(|c| c.text.as_str()));
        parts.join(" ")
    }

    /// Checks the positional invariant of every criterion.
    pub fn validate(&self) -> Result<()> {
        if self.nct_id.trim().is_empty() {
            return Err(Error::InvalidRecord("trial without nct_id".into()));
        }
        for side in Side::BOTH {
            for (pos, c) in self.criteria(side).iter().enumerate() {
                if c.index != pos || c.side != side || c.text.trim().is_empty() {
                    return Err(Error::InvalidRecord(alloc::format!(
                        "{}: {side} criterion at position {pos} is malformed",
                        self.nct_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rejects corpora with duplicate trial identifiers.
pub fn check_unique_ids(trials: &[TrialRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for t in trials {
        if !seen.insert(t.nct_id.as_str()) {
            return Err(Error::DuplicateId(t.nct_id.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientNote {
    pub patient_id: String,
    pub raw_text: String,
    /// Sentence `k` is referred to as ID `k` everywhere, prompts included.
    pub sentences: Vec<String>,
}

impl PatientNote {
    pub fn new(patient_id: &str, raw_text: &str) -> Result<Self> {
        let patient_id = patient_id.trim();
        if patient_id.is_empty() {
            return Err(Error::InvalidRecord("patient without patient_id".into()));
        }
        Ok(PatientNote {
            patient_id: patient_id.to_string(),
            raw_text: raw_text.to_string(),
            sentences: segment_sentences(raw_text),
        })
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub name: String,
    pub patients: Vec<PatientNote>,
    pub judgments: Vec<RelevanceJudgment>,
    pub trial_corpus_ref: String,
}

impl Cohort {
    pub fn new(
        name: &str,
        patients: Vec<PatientNote>,
        judgments: Vec<RelevanceJudgment>,
        trial_corpus_ref: &str,
    ) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for p in &patients {
            if !ids.insert(p.patient_id.as_str()) {
                return Err(Error::DuplicateId(p.patient_id.clone()));
            }
        }
        if let Some(j) = judgments.iter().find(|j| !ids.contains(j.patient_id.as_str())) {
            return Err(Error::InvalidRecord(alloc::format!(
                "judgment references unknown patient {}",
                j.patient_id
            )));
        }
        Ok(Cohort {
            name: name.to_string(),
            patients,
            judgments,
            trial_corpus_ref: trial_corpus_ref.to_string(),
        })
    }

    pub fn patient(&self, patient_id: &str) -> Option<&PatientNote> {
        self.patients.iter().find(|p| p.patient_id == patient_id)
    }

    /// Judgments grouped by patient, then keyed by trial.
    pub fn judgments_by_patient(&self) -> BTreeMap<&str, BTreeMap<&str, &RelevanceJudgment>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, &RelevanceJudgment>> = BTreeMap::new();
        for j in &self.judgments {
            out.entry(j.patient_id.as_str())
                .or_default()
                .insert(j.nct_id.as_str(), j);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn raw_blocks_are_segmented() {
        let t = TrialRecord::new(
            "NCT00000001",
            "T",
            vec![],
            vec![],
            "S",
            CriteriaSource::Block("- adult\n- consent".into()),
            CriteriaSource::Block(String::new()),
        )
        .unwrap();
        assert_eq!(t.inclusion_criteria.len(), 2);
        assert!(t.exclusion_criteria.is_empty());
        assert_eq!(t.inclusion_criteria[1].text, "consent");
        assert_eq!(t.inclusion_criteria[1].index, 1);
        t.validate().unwrap();
    }

    #[test]
    fn missing_nct_id_is_rejected() {
        let err = TrialRecord::new(
            "  ",
            "T",
            vec![],
            vec![],
            "",
            CriteriaSource::List(vec![]),
            CriteriaSource::List(vec![]),
        );
        assert!(matches!(err, Err(Error::InvalidRecord(_))));
    }

    #[test]
    fn list_criteria_drop_blank_entries() {
        let t = TrialRecord::new(
            "NCT1",
            "",
            vec![],
            vec![],
            "",
            CriteriaSource::List(vec!["  a  ".into(), " ".into(), "b".into()]),
            CriteriaSource::List(vec![]),
        )
        .unwrap();
        let texts: Vec<_> = t.inclusion_criteria.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["a", "b"]);
    }

    #[test]
    fn duplicate_trials_detected() {
        let mk = |id: &str| {
            TrialRecord::new(id, "", vec![], vec![], "", CriteriaSource::List(vec![]), CriteriaSource::List(vec![]))
                .unwrap()
        };
        assert!(check_unique_ids(&[mk("A"), mk("B")]).is_ok());
        assert_eq!(check_unique_ids(&[mk("A"), mk("A")]), Err(Error::DuplicateId("A".into())));
    }

    #[test]
    fn cohort_rejects_orphan_judgments() {
        let p = PatientNote::new("p1", "Text.").unwrap();
        let j = RelevanceJudgment::new("p2", "NCT1", RelevanceLabel::Eligible);
        assert!(Cohort::new("c", vec![p], vec![j], "trials.jsonl").is_err());
    }
}
