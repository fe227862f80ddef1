use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use trialmatch_core::corpus::{parse_qrels, CriteriaSource, LabelVocabulary, PatientNote, RelevanceJudgment, TrialRecord};

use super::{parse_jsonl, read_text};
use crate::{Error, Result};

/// One line of `trials.jsonl`. Criteria may be a list or one raw block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLine {
    #[serde(default)]
    pub nct_id: Option<String>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub conditions: Vec<String>,
    #[serde(default)]
    pub interventions: Vec<String>,
    #[serde(default)]
    pub brief_summary: String,
    #[serde(default)]
    pub inclusion_criteria: CriteriaField,
    #[serde(default)]
    pub exclusion_criteria: CriteriaField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CriteriaField {
    List(Vec<String>),
    Block(String),
}

impl Default for CriteriaField {
    fn default() -> Self {
        CriteriaField::List(Vec::new())
    }
}

impl From<CriteriaField> for CriteriaSource {
    fn from(f: CriteriaField) -> Self {
        match f {
            CriteriaField::List(items) => CriteriaSource::List(items),
            CriteriaField::Block(block) => CriteriaSource::Block(block),
        }
    }
}

impl From<&TrialRecord> for TrialLine {
    fn from(t: &TrialRecord) -> Self {
        let texts = |cs: &[trialmatch_core::corpus::Criterion]| CriteriaField::List(cs.iter().map(|c| c.text.clone()).collect());
        TrialLine {
            nct_id: Some(t.nct_id.clone()),
            title: t.title.clone(),
            conditions: t.conditions.clone(),
            interventions: t.interventions.clone(),
            brief_summary: t.brief_summary.clone(),
            inclusion_criteria: texts(&t.inclusion_criteria),
            exclusion_criteria: texts(&t.exclusion_criteria),
        }
    }
}

/// Parses `trials.jsonl` text. Records without an nct_id and repeated ids
/// are rejected with the offending line number.
pub fn parse_trials(path: &Path, text: &str) -> Result<Vec<TrialRecord>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(lines.len());
    for (line_no, line) in lines {
        let err = |message: String| Error::Line {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let raw: TrialLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let nct_id = raw.nct_id.unwrap_or_default();
        let record = TrialRecord::new(
            &nct_id,
            &raw.title,
            raw.conditions,
            raw.interventions,
            &raw.brief_summary,
            raw.inclusion_criteria.into(),
            raw.exclusion_criteria.into(),
        )
        .map_err(|e| err(e.to_string()))?;
        if let Some(first) = seen.insert(record.nct_id.clone(), line_no) {
            return Err(err(format!("duplicate nct_id {} (first seen on line {first})", record.nct_id)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn parse_trial_corpus(path: &Path) -> Result<Vec<TrialRecord>> {
    parse_trials(path, &read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientLine {
    pub patient_id: String,
    pub text: String,
}

pub fn parse_patients(path: &Path, text: &str) -> Result<Vec<PatientNote>> {
    let raw: Vec<PatientLine> = parse_jsonl(path, text)?;
    let mut out = Vec::with_capacity(raw.len());
    let mut seen = HashMap::new();
    for (i, p) in raw.into_iter().enumerate() {
        let note = PatientNote::new(&p.patient_id, &p.text)?;
        if seen.insert(note.patient_id.clone(), i).is_some() {
            return Err(Error::format(path, format!("duplicate patient_id {}", note.patient_id)));
        }
        out.push(note);
    }
    Ok(out)
}

pub fn load_patients(path: &Path) -> Result<Vec<PatientNote>> {
    parse_patients(path, &read_text(path)?)
}

pub fn load_qrels(path: &Path, vocabulary: &LabelVocabulary) -> Result<Vec<RelevanceJudgment>> {
    parse_qrels(&read_text(path)?, vocabulary).map_err(|e| Error::format(path, e.to_string()))
}
