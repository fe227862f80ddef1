//! Criterion-level matching of a patient note against one trial.
//!
//! Each patient-trial pair costs one model call per non-empty criterion side
//! (more only when a side has to be chunked to fit the prompt budget). The
//! model explains each criterion first, then cites sentence IDs, then picks
//! a label, and answers in JSON that [`parse_matching_response`] validates.

mod labels;
mod pair;
mod parse;
mod prompt;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use labels::EligibilityLabel;
pub use pair::{match_pair, MatchOptions};
pub use parse::{parse_matching_response, parse_matching_response_range};
pub use prompt::{build_matching_prompt, build_matching_prompt_range, estimate_tokens};

use crate::corpus::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Repaired,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionPrediction {
    #[serde(rename = "index")]
    pub criterion_index: usize,
    pub side: Side,
    pub explanation: String,
    /// Sorted, deduplicated 0-based sentence IDs.
    #[serde(rename = "sentences")]
    pub relevant_sentences: Vec<usize>,
    pub label: EligibilityLabel,
    pub parse_status: ParseStatus,
}

impl CriterionPrediction {
    /// Placeholder for a criterion whose answer could not be read: it
    /// carries no eligibility evidence.
    pub fn failed(criterion_index: usize, side: Side, explanation: String) -> Self {
        CriterionPrediction {
            criterion_index,
            side,
            explanation,
            relevant_sentences: Vec::new(),
            label: EligibilityLabel::NotEnoughInformation,
            parse_status: ParseStatus::Failed,
        }
    }

    /// True when every structural invariant holds for a note of
    /// `sentence_count` sentences.
    pub fn is_well_formed(&self, sentence_count: usize) -> bool {
        let ids_ok = self.relevant_sentences.iter().all(|&s| s < sentence_count)
            && self.relevant_sentences.windows(2).all(|w| w[0] < w[1]);
        let label_ok = self.label.belongs_to(self.side);
        let status_ok = match self.parse_status {
            ParseStatus::Failed => {
                self.label == EligibilityLabel::NotEnoughInformation && self.relevant_sentences.is_empty()
            }
            _ => !self.explanation.trim().is_empty(),
        };
        ids_ok && label_ok && status_ok
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallMetadata {
    pub calls: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub backends: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialMatchResult {
    pub patient_id: String,
    pub nct_id: String,
    #[serde(rename = "inclusion")]
    pub inclusion_predictions: Vec<CriterionPrediction>,
    #[serde(rename = "exclusion")]
    pub exclusion_predictions: Vec<CriterionPrediction>,
    #[serde(default)]
    pub meta: CallMetadata,
}

impl TrialMatchResult {
    pub fn predictions(&self, side: Side) -> &[CriterionPrediction] {
        match side {
            Side::Inclusion => &self.inclusion_predictions,
            Side::Exclusion => &self.exclusion_predictions,
        }
    }

    pub fn labels(&self, side: Side) -> impl Iterator<Item = EligibilityLabel> + '_ {
        self.predictions(side).iter().map(|p| p.label)
    }
}
