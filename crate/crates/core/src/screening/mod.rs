//! Bookkeeping for the assisted vs. unassisted screening study: decision
//! records, the balanced two-annotator assignment, and time-saving
//! summaries.

mod assignment;
mod summary;

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use assignment::{build_screening_assignment, AnnotatorTask, AssignedPair, ScreeningAssignment};
pub use summary::{screening_summary, ModeCell, ScreeningSummary};

use crate::{Error, Result};

/// "No" means definitely ineligible; "Maybe" means potentially eligible and
/// worth a closer look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    No,
    Maybe,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::No => "no",
            Decision::Maybe => "maybe",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningDecision {
    pub patient_id: String,
    pub nct_id: String,
    pub decision: Decision,
    pub assisted: bool,
    pub elapsed_ms: u64,
    pub annotator_id: String,
    /// RFC 3339 time the decision was recorded.
    pub timestamp: String,
}

/// Uniqueness key of a decision: one per (patient, trial, annotator, mode).
pub type DecisionKey = (String, String, String, bool);

impl ScreeningDecision {
    pub fn validate(&self) -> Result<()> {
        if self.elapsed_ms == 0 {
            return Err(Error::InvalidRecord("elapsed_ms must be positive".into()));
        }
        for (name, v) in [
            ("patient_id", &self.patient_id),
            ("nct_id", &self.nct_id),
            ("annotator_id", &self.annotator_id),
        ] {
            if v.trim().is_empty() {
                return Err(Error::InvalidRecord(alloc::format!("{name} is empty")));
            }
        }
        Ok(())
    }

    pub fn key(&self) -> DecisionKey {
        (
            self.patient_id.clone(),
            self.nct_id.clone(),
            self.annotator_id.clone(),
            self.assisted,
        )
    }
}
