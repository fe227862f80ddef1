use alloc::string::{String, ToString};
use core::fmt::Write;
use core::ops::Range;

use super::EligibilityLabel;
use crate::corpus::{PatientNote, Side, TrialRecord};
use crate::gateway::{RequestTag, Task};

/// Rough token count (four characters per token) used for the prompt budget.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

fn system_text(side: Side) -> String {
    let labels = EligibilityLabel::vocabulary(side);
    let mut s = String::from(
        "You are a clinical trial recruiter. You read a patient note and the eligibility criteria of a \
clinical trial and assess, criterion by criterion, whether the patient meets each one.\n",
    );
    let _ = writeln!(s, "Each {side} criterion receives exactly one label:");
    for l in labels {
        let meaning = match l {
            EligibilityLabel::Included => "the patient meets the inclusion criterion",
            EligibilityLabel::NotIncluded => "the patient does not meet the inclusion criterion",
            EligibilityLabel::Excluded => "the patient meets the exclusion criterion and is excluded by it",
            EligibilityLabel::NotExcluded => "the patient does not meet the exclusion criterion",
            EligibilityLabel::NotEnoughInformation => {
                "the note lacks the information needed to decide"
            }
            EligibilityLabel::NotApplicable => "the criterion does not apply to this patient",
        };
        let _ = writeln!(s, "- \"{}\": {meaning}", l.display_text());
    }
    s.push_str("Answer with JSON only.");
    s
}

/// Builds the (system, user) prompt pair for every criterion on `side`.
/// Returns `None` when the trial has no criteria on that side, in which
/// case no call is made.
pub fn build_matching_prompt(note: &PatientNote, trial: &TrialRecord, side: Side) -> Option<(String, String)> {
    let n = trial.criteria(side).len();
    build_matching_prompt_range(note, trial, side, 0..n)
}

/// Same as [`build_matching_prompt`] restricted to criteria `range`;
/// criteria keep their side-wide indices so chunked answers merge directly.
pub fn build_matching_prompt_range(
    note: &PatientNote,
    trial: &TrialRecord,
    side: Side,
    range: Range<usize>,
) -> Option<(String, String)> {
    let criteria = trial.criteria(side).get(range)?;
    if criteria.is_empty() {
        return None;
    }
    let task = match side {
        Side::Inclusion => Task::Inclusion,
        Side::Exclusion => Task::Exclusion,
    };
    let tag = RequestTag {
        task,
        patient_id: note.patient_id.clone(),
        nct_id: Some(trial.nct_id.clone()),
    };
    let mut u = tag.render();

    u.push_str("\nPatient note (each sentence is prefixed by its 0-based sentence ID):\n");
    for (i, s) in note.sentences.iter().enumerate() {
        let _ = writeln!(u, "{i}. {s}");
    }

    let _ = write!(u, "\nClinical trial {}\n", trial.nct_id);
    let _ = writeln!(u, "Title: {}", trial.title);
    let _ = writeln!(u, "Conditions: {}", trial.conditions.join("; "));
    let _ = writeln!(u, "Interventions: {}", trial.interventions.join("; "));
    let _ = writeln!(u, "Brief summary: {}", trial.brief_summary);

    let _ = write!(u, "\n{} criteria (each prefixed by its 0-based criterion ID):\n", capitalized(side));
    for c in criteria {
        let _ = writeln!(u, "{}. {}", c.index, c.text);
    }

    let labels = EligibilityLabel::vocabulary(side)
        .iter()
        .map(|l| alloc::format!("\"{}\"", l.display_text()))
        .collect::<alloc::vec::Vec<_>>()
        .join(", ");
    let _ = write!(
        u,
        "\nFor each {side} criterion above, in this order: (1) explain how the patient note relates to \
the criterion, (2) list the IDs of the patient sentences relevant to it (an empty list if none), \
(3) choose one eligibility label from {labels}, based on your explanation.\n\
Respond with a single JSON object keyed by criterion ID:\n\
{{\"<criterion ID>\": {{\"explanation\": \"...\", \"sentences\": [<sentence IDs>], \"label\": \"...\"}}}}\n"
    );
    Some((system_text(side), u))
}

fn capitalized(side: Side) -> String {
    match side {
        Side::Inclusion => "Inclusion".to_string(),
        Side::Exclusion => "Exclusion".to_string(),
    }
}
