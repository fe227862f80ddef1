use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Trial-level ground-truth label of a patient-trial pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceLabel {
    Irrelevant,
    Excluded,
    Potential,
    Eligible,
    Unlabeled,
}

impl RelevanceLabel {
    pub const ALL: [RelevanceLabel; 5] = [
        RelevanceLabel::Irrelevant,
        RelevanceLabel::Excluded,
        RelevanceLabel::Potential,
        RelevanceLabel::Eligible,
        RelevanceLabel::Unlabeled,
    ];

    /// Graded relevance: 0 for irrelevant/unlabeled, 1 for excluded or
    /// potential, 2 for eligible.
    pub fn grade(self) -> u8 {
        match self {
            RelevanceLabel::Irrelevant | RelevanceLabel::Unlabeled => 0,
            RelevanceLabel::Excluded | RelevanceLabel::Potential => 1,
            RelevanceLabel::Eligible => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelevanceLabel::Irrelevant => "irrelevant",
            RelevanceLabel::Excluded => "excluded",
            RelevanceLabel::Potential => "potential",
            RelevanceLabel::Eligible => "eligible",
            RelevanceLabel::Unlabeled => "unlabeled",
        }
    }

    pub fn is_labeled(self) -> bool {
        self != RelevanceLabel::Unlabeled
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgment {
    pub patient_id: String,
    pub nct_id: String,
    pub label: RelevanceLabel,
    pub grade: u8,
}

impl RelevanceJudgment {
    pub fn new(patient_id: &str, nct_id: &str, label: RelevanceLabel) -> Self {
        RelevanceJudgment {
            patient_id: patient_id.to_string(),
            nct_id: nct_id.to_string(),
            label,
            grade: label.grade(),
        }
    }
}

/// Token-to-label table for a qrels file.
///
/// SIGIR-style collections call grade-1 pairs "potential", TREC-style ones
/// call them "excluded"; the numeric token `1` is resolved through this
/// table rather than per-cohort code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocabulary {
    pub tokens: BTreeMap<String, RelevanceLabel>,
}

impl LabelVocabulary {
    fn with_grade_one(grade_one: RelevanceLabel) -> Self {
        let mut tokens = BTreeMap::new();
        tokens.insert("0".to_string(), RelevanceLabel::Irrelevant);
        tokens.insert("1".to_string(), grade_one);
        tokens.insert("2".to_string(), RelevanceLabel::Eligible);
        for label in RelevanceLabel::ALL {
            tokens.insert(label.as_str().to_string(), label);
        }
        tokens.insert("ineligible".to_string(), RelevanceLabel::Excluded);
        LabelVocabulary { tokens }
    }

    /// Grade 1 means "excluded".
    pub fn trec() -> Self {
        Self::with_grade_one(RelevanceLabel::Excluded)
    }

    /// Grade 1 means "potential".
    pub fn sigir() -> Self {
        Self::with_grade_one(RelevanceLabel::Potential)
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "trec" => Some(Self::trec()),
            "sigir" => Some(Self::sigir()),
            _ => None,
        }
    }

    pub fn resolve(&self, token: &str) -> Option<RelevanceLabel> {
        self.tokens
            .get(token)
            .or_else(|| self.tokens.get(token.to_ascii_lowercase().as_str()))
            .copied()
    }
}

impl Default for LabelVocabulary {
    fn default() -> Self {
        Self::trec()
    }
}

/// Parses `topic_id iteration doc_id relevance` rows. Blank lines are
/// skipped; the iteration column is ignored. Row numbers in errors are
/// 1-based line numbers.
pub fn parse_qrels(text: &str, vocabulary: &LabelVocabulary) -> Result<Vec<RelevanceJudgment>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        let [patient, _iteration, nct, token] = cols[..] else {
            return Err(Error::InvalidRecord(alloc::format!(
                "qrels row {row}: expected 4 columns, found {}",
                cols.len()
            )));
        };
        let label = vocabulary.resolve(token).ok_or_else(|| Error::UnknownLabel {
            row,
            token: token.to_string(),
        })?;
        out.push(RelevanceJudgment::new(patient, nct, label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grade_table_is_exhaustive() {
        let expected = [
            (RelevanceLabel::Irrelevant, 0),
            (RelevanceLabel::Excluded, 1),
            (RelevanceLabel::Potential, 1),
            (RelevanceLabel::Eligible, 2),
            (RelevanceLabel::Unlabeled, 0),
        ];
        for (label, grade) in expected {
            assert_eq!(label.grade(), grade, "{label:?}");
        }
    }

    #[test]
    fn eligible_row() {
        let j = parse_qrels("20141 0 NCT00000001 2\n", &LabelVocabulary::trec()).unwrap();
        assert_eq!(j, [RelevanceJudgment::new("20141", "NCT00000001", RelevanceLabel::Eligible)]);
        assert_eq!(j[0].grade, 2);
    }

    #[test]
    fn grade_one_follows_vocabulary() {
        let trec = parse_qrels("p 0 N 1", &LabelVocabulary::trec()).unwrap();
        let sigir = parse_qrels("p 0 N 1", &LabelVocabulary::sigir()).unwrap();
        assert_eq!(trec[0].label, RelevanceLabel::Excluded);
        assert_eq!(sigir[0].label, RelevanceLabel::Potential);
        assert_eq!(trec[0].grade, 1);
        assert_eq!(sigir[0].grade, 1);
    }

    #[test]
    fn out_of_vocabulary_relevance() {
        let err = parse_qrels("p 0 N 2\n\np 0 M 9\n", &LabelVocabulary::trec()).unwrap_err();
        assert_eq!(err, Error::UnknownLabel { row: 3, token: "9".into() });
    }

    #[test]
    fn wrong_column_count() {
        assert!(matches!(
            parse_qrels("p N 2", &LabelVocabulary::trec()),
            Err(Error::InvalidRecord(_))
        ));
    }

    #[test]
    fn word_tokens_accepted() {
        let j = parse_qrels("p 0 N Eligible\np 0 M unlabeled", &LabelVocabulary::sigir()).unwrap();
        assert_eq!(j[0].label, RelevanceLabel::Eligible);
        assert_eq!(j[1].grade, 0);
    }
}
