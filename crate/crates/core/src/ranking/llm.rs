use alloc::string::{String, ToString};
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpus::{PatientNote, Side, TrialRecord};
use crate::gateway::{ChatRequest, Completion, RequestTag, Task};
use crate::matching::TrialMatchResult;
use crate::util::{outermost, strip_fences};
use crate::Result;

const RELEVANCE_KEY: &str = "relevance_score_R";
const ELIGIBILITY_KEY: &str = "eligibility_score_S";

/// Trial-level relevance (0..=100) and eligibility (-R..=R) from the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmAggregates {
    pub relevance: f64,
    pub eligibility: f64,
    pub raw_response: String,
    /// Set when a value had to be clamped or replaced by the zero fallback.
    pub clamped: bool,
    /// Set when the response could not be read at all.
    #[serde(default)]
    pub parse_failed: bool,
}

impl LlmAggregates {
    /// Clamps relevance into [0, 100] first, then eligibility into
    /// [-relevance, relevance]. Non-finite inputs become 0.
    pub fn checked(relevance: f64, eligibility: f64, raw_response: String) -> Self {
        let mut clamped = false;
        let mut fix = |v: f64, lo: f64, hi: f64| {
            let c = if v.is_finite() { v.clamp(lo, hi) } else { 0.0 };
            if c != v {
                clamped = true;
            }
            c
        };
        let r = fix(relevance, 0.0, 100.0);
        let s = fix(eligibility, -r, r);
        LlmAggregates {
            relevance: r,
            eligibility: s,
            raw_response,
            clamped,
            parse_failed: false,
        }
    }

    fn fallback(raw_response: String) -> Self {
        LlmAggregates {
            relevance: 0.0,
            eligibility: 0.0,
            raw_response,
            clamped: true,
            parse_failed: true,
        }
    }
}

pub fn build_aggregation_prompt(note: &PatientNote, trial: &TrialRecord, result: &TrialMatchResult) -> (String, String) {
    let system = String::from(
        "You are a clinical trial recruiter. Given a patient note, a clinical trial, and criterion-level \
eligibility assessments for that pair, you rate the patient's overall relevance to and eligibility \
for the trial. Answer with JSON only.",
    );
    let tag = RequestTag {
        task: Task::Aggregation,
        patient_id: note.patient_id.clone(),
        nct_id: Some(trial.nct_id.clone()),
    };
    let mut u = tag.render();
    u.push_str("\nPatient note (each sentence is prefixed by its 0-based sentence ID):\n");
    for (i, s) in note.sentences.iter().enumerate() {
        let _ = writeln!(u, "{i}. {s}");
    }
    let _ = write!(u, "\nClinical trial {}\nTitle: {}\n", trial.nct_id, trial.title);
    let _ = writeln!(u, "Conditions: {}", trial.conditions.join("; "));
    let _ = writeln!(u, "Interventions: {}", trial.interventions.join("; "));
    let _ = writeln!(u, "Brief summary: {}", trial.brief_summary);
    u.push_str("\nCriterion-level assessments:\n");
    for side in Side::BOTH {
        for p in result.predictions(side) {
            let text = trial
                .criteria(side)
                .get(p.criterion_index)
                .map(|c| c.text.as_str())
                .unwrap_or("");
            let _ = writeln!(
                u,
                "{side} criterion {}: {text}\n  explanation: {}\n  relevant sentences: {:?}\n  label: {}",
                p.criterion_index,
                p.explanation,
                p.relevant_sentences,
                p.label.display_text()
            );
        }
    }
    let _ = write!(
        u,
        "\nRate the pair with two numbers.\n\
The relevance score R is between 0 and 100: 0 means the patient is irrelevant to the trial, 100 means \
the patient is exactly the kind of patient the trial targets.\n\
The eligibility score S is between -R and R: -R means the patient is ineligible (meets exclusion \
criteria or fails inclusion criteria), R means the patient is fully eligible, 0 means undecided. \
The absolute value of S cannot exceed R.\n\
Respond with a JSON object: {{\"relevance_explanation\": \"...\", \"{RELEVANCE_KEY}\": <number>, \
\"eligibility_explanation\": \"...\", \"{ELIGIBILITY_KEY}\": <number>}}\n"
    );
    (system, u)
}

/// Reads R and S from a response. One repair pass (fences, outermost
/// object); numbers may arrive as JSON numbers or numeric strings. Anything
/// unreadable or non-finite yields the (0, 0) fallback flagged as clamped.
pub fn parse_aggregation_response(text: &str) -> LlmAggregates {
    let object = read_object(text);
    let values = object.as_ref().and_then(|o| Some((number(o.get(RELEVANCE_KEY)?)?, number(o.get(ELIGIBILITY_KEY)?)?)));
    match values {
        Some((r, s)) if r.is_finite() && s.is_finite() => LlmAggregates::checked(r, s, text.to_string()),
        _ => LlmAggregates::fallback(text.to_string()),
    }
}

fn read_object(text: &str) -> Option<Map<String, Value>> {
    if let Ok(Value::Object(m)) = serde_json::from_str(text.trim()) {
        return Some(m);
    }
    let cleaned = strip_fences(text);
    match serde_json::from_str(outermost(&cleaned, '{', '}')?) {
        Ok(Value::Object(m)) => Some(m),
        _ => None,
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    }
}

/// Asks the model for trial-level relevance and eligibility given the
/// criterion-level predictions of the pair.
pub fn llm_aggregate<G: Completion + ?Sized>(
    note: &PatientNote,
    trial: &TrialRecord,
    result: &TrialMatchResult,
    gateway: &G,
) -> Result<LlmAggregates> {
    let (system, user) = build_aggregation_prompt(note, trial, result);
    let request = ChatRequest::pipeline(gateway.model(), system, user, 1024);
    let response = gateway.complete(&request)?;
    Ok(parse_aggregation_response(&response.text))
}
