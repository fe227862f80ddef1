use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::PatientNote;
use crate::gateway::{ChatRequest, Completion, RequestTag, Task};
use crate::util::{outermost, strip_fences};
use crate::{Error, Result};

pub const MAX_KEYWORDS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordQuery {
    pub patient_id: String,
    /// Most important first.
    pub keywords: Vec<String>,
}

const SYSTEM: &str = "You are a clinical research coordinator who searches a registry of clinical trials \
for trials that may suit a patient. You answer with JSON only.";

pub fn build_keyword_prompt(note: &PatientNote) -> (String, String) {
    let tag = RequestTag {
        task: Task::Keywords,
        patient_id: note.patient_id.clone(),
        nct_id: None,
    };
    let mut user = tag.render();
    user.push_str("\nPatient note (one sentence per line, 0-based IDs):\n");
    for (i, s) in note.sentences.iter().enumerate() {
        let _ = writeln!(user, "{i}. {s}");
    }
    let _ = write!(
        user,
        "\nList up to {MAX_KEYWORDS} search keywords (conditions, diagnoses, key findings) that would \
locate clinical trials this patient could join. Rank the keywords by importance, most important \
first. Respond with a JSON object of the form {{\"keywords\": [\"keyword 1\", \"keyword 2\"]}}."
    );
    (SYSTEM.to_string(), user)
}

/// Reads the keyword list from a model response.
///
/// Accepts `{"keywords": [...]}` directly; otherwise one repair pass strips
/// code fences and takes the outermost object (or bare array). Keywords are
/// trimmed, deduplicated case-insensitively keeping the first spelling, and
/// truncated to [`MAX_KEYWORDS`].
pub fn parse_keyword_response(patient_id: &str, text: &str) -> Result<KeywordQuery> {
    let raw = match extract_list(text) {
        Some(list) => list,
        None => {
            return Err(Error::KeywordParse {
                reason: "no keyword list found".into(),
                raw: text.to_string(),
            })
        }
    };
    let mut seen = BTreeSet::new();
    let mut keywords = Vec::new();
    for item in raw {
        let Value::String(s) = item else { continue };
        let kw = s.trim();
        if kw.is_empty() || !seen.insert(kw.to_lowercase()) {
            continue;
        }
        keywords.push(kw.to_string());
        if keywords.len() == MAX_KEYWORDS {
            break;
        }
    }
    if keywords.is_empty() {
        return Err(Error::NoKeywords);
    }
    Ok(KeywordQuery {
        patient_id: patient_id.to_string(),
        keywords,
    })
}

fn extract_list(text: &str) -> Option<Vec<Value>> {
    fn from_value(v: Value) -> Option<Vec<Value>> {
        match v {
            Value::Object(mut map) => match map.remove("keywords")? {
                Value::Array(a) => Some(a),
                _ => None,
            },
            Value::Array(a) => Some(a),
            _ => None,
        }
    }
    if let Ok(v) = serde_json::from_str::<Value>(text.trim()) {
        return from_value(v);
    }
    let cleaned = strip_fences(text);
    outermost(&cleaned, '{', '}')
        .and_then(|s| serde_json::from_str::<Value>(s).ok())
        .and_then(from_value)
        .or_else(|| {
            outermost(&cleaned, '[', ']')
                .and_then(|s| serde_json::from_str::<Value>(s).ok())
                .and_then(from_value)
        })
}

/// Asks the model for an importance-ranked keyword list for `note`.
pub fn generate_keywords<G: Completion + ?Sized>(note: &PatientNote, gateway: &G) -> Result<KeywordQuery> {
    let (system, user) = build_keyword_prompt(note);
    let request = ChatRequest::pipeline(gateway.model(), system, user, 1024);
    let response = gateway.complete(&request)?;
    parse_keyword_response(&note.patient_id, &response.text)
}
