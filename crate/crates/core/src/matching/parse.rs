use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde_json::{Map, Value};

use super::{CriterionPrediction, EligibilityLabel, ParseStatus};
use crate::corpus::Side;
use crate::util::{outermost, strip_fences};

const MISSING_EXPLANATION: &str = "(no explanation given)";

/// Reads criterion-level predictions for criteria `0..expected`.
///
/// Never fails on content: whatever cannot be read becomes a failed
/// prediction (label not enough information, no sentences). See
/// [`parse_matching_response_range`] for the rules.
pub fn parse_matching_response(text: &str, expected: usize, side: Side, sentence_count: usize) -> Vec<CriterionPrediction> {
    parse_matching_response_range(text, 0..expected, side, sentence_count)
}

/// Reads predictions for criteria `range` from a response keyed by
/// criterion ID.
///
/// The response is first parsed strictly as one JSON object. If that fails,
/// one repair pass strips code fences and takes the outermost `{...}`;
/// everything read that way is marked repaired. Per criterion:
/// labels are normalized within the side's vocabulary (anything else fails
/// the criterion), sentence IDs outside `0..sentence_count` or not integers
/// are dropped (repaired), and missing criteria fail.
pub fn parse_matching_response_range(
    text: &str,
    range: Range<usize>,
    side: Side,
    sentence_count: usize,
) -> Vec<CriterionPrediction> {
    let (object, repaired) = match read_object(text) {
        Some(found) => found,
        None => {
            return range
                .map(|i| CriterionPrediction::failed(i, side, String::new()))
                .collect()
        }
    };
    range
        .map(|index| {
            let entry = object.get(&index.to_string());
            let mut p = read_entry(entry, index, side, sentence_count);
            if repaired && p.parse_status == ParseStatus::Ok {
                p.parse_status = ParseStatus::Repaired;
            }
            p
        })
        .collect()
}

fn read_object(text: &str) -> Option<(Map<String, Value>, bool)> {
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(text.trim()) {
        return Some((map, false));
    }
    let cleaned = strip_fences(text);
    let candidate = outermost(&cleaned, '{', '}')?;
    match serde_json::from_str::<Value>(candidate) {
        Ok(Value::Object(map)) => Some((map, true)),
        _ => None,
    }
}

fn read_entry(entry: Option<&Value>, index: usize, side: Side, sentence_count: usize) -> CriterionPrediction {
    // Either {"explanation", "sentences", "label"} or the positional
    // [explanation, sentences, label] triple.
    let (explanation, sentences, label) = match entry {
        Some(Value::Object(fields)) => (fields.get("explanation"), fields.get("sentences"), fields.get("label")),
        Some(Value::Array(items)) if items.len() == 3 => (items.first(), items.get(1), items.get(2)),
        _ => return CriterionPrediction::failed(index, side, String::new()),
    };

    let mut status = ParseStatus::Ok;
    let explanation = match explanation.and_then(Value::as_str).map(str::trim) {
        Some(e) if !e.is_empty() => e.to_string(),
        _ => {
            status = ParseStatus::Repaired;
            MISSING_EXPLANATION.to_string()
        }
    };

    let label = match label.and_then(Value::as_str).and_then(|l| EligibilityLabel::normalize(l, side)) {
        Some(l) => l,
        None => return CriterionPrediction::failed(index, side, explanation),
    };

    let mut ids = Vec::new();
    match sentences {
        Some(Value::Array(items)) => {
            for item in items {
                match sentence_id(item) {
                    Some(id) if id < sentence_count => ids.push(id),
                    _ => status = ParseStatus::Repaired,
                }
            }
        }
        Some(Value::Null) | None => status = ParseStatus::Repaired,
        Some(other) => match sentence_id(other) {
            Some(id) if id < sentence_count => {
                ids.push(id);
                status = ParseStatus::Repaired;
            }
            _ => status = ParseStatus::Repaired,
        },
    }
    ids.sort_unstable();
    ids.dedup();

    CriterionPrediction {
        criterion_index: index,
        side,
        explanation,
        relevant_sentences: ids,
        label,
        parse_status: status,
    }
}

fn sentence_id(v: &Value) -> Option<usize> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|x| usize::try_from(x).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const WELL_FORMED: &str =
        r#"{"0":{"explanation":"Patient is 58, criterion requires ≥18.","sentences":[0],"label":"included"}}"#;

    #[test]
    fn well_formed_parse() {
        let p = parse_matching_response(WELL_FORMED, 1, Side::Inclusion, 2);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].parse_status, ParseStatus::Ok);
        assert_eq!(p[0].label, EligibilityLabel::Included);
        assert_eq!(p[0].relevant_sentences, vec![0]);
        assert_eq!(p[0].explanation, "Patient is 58, criterion requires ≥18.");
    }

    #[test]
    fn fenced_payload_is_repaired() {
        let text = alloc::format!("```json\n{WELL_FORMED}\n```");
        let p = parse_matching_response(&text, 1, Side::Inclusion, 2);
        assert_eq!(p[0].parse_status, ParseStatus::Repaired);
        assert_eq!(p[0].label, EligibilityLabel::Included);
    }

    #[test]
    fn prose_response_falls_back() {
        let p = parse_matching_response("I cannot determine this.", 1, Side::Inclusion, 3);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].parse_status, ParseStatus::Failed);
        assert_eq!(p[0].label, EligibilityLabel::NotEnoughInformation);
        assert!(p[0].relevant_sentences.is_empty());
    }

    #[test]
    fn out_of_range_ids_dropped() {
        let text = r#"{"0":{"explanation":"e","sentences":[5, 1, -1, "2", 1.5, 1],"label":"Not Excluded"}}"#;
        let p = parse_matching_response(text, 1, Side::Exclusion, 3);
        assert_eq!(p[0].relevant_sentences, vec![1, 2]);
        assert_eq!(p[0].parse_status, ParseStatus::Repaired);
        assert_eq!(p[0].label, EligibilityLabel::NotExcluded);
    }

    #[test]
    fn wrong_side_label_fails_the_criterion() {
        let text = r#"{"0":{"explanation":"e","sentences":[0],"label":"excluded"}}"#;
        let p = parse_matching_response(text, 1, Side::Inclusion, 3);
        assert_eq!(p[0].parse_status, ParseStatus::Failed);
        assert!(p[0].relevant_sentences.is_empty());
        assert_eq!(p[0].explanation, "e");
    }

    #[test]
    fn missing_criteria_are_filled() {
        let text = r#"{"1":{"explanation":"e","sentences":[],"label":"not applicable"},"7":{}}"#;
        let p = parse_matching_response(text, 3, Side::Inclusion, 1);
        let status: Vec<_> = p.iter().map(|x| x.parse_status).collect();
        assert_eq!(status, [ParseStatus::Failed, ParseStatus::Ok, ParseStatus::Failed]);
        assert_eq!(p[1].criterion_index, 1);
    }

    #[test]
    fn positional_triples_accepted() {
        let text = r#"{"0": ["reason", [0, 1], "not enough information"]}"#;
        let p = parse_matching_response(text, 1, Side::Exclusion, 2);
        assert_eq!(p[0].parse_status, ParseStatus::Ok);
        assert_eq!(p[0].label, EligibilityLabel::NotEnoughInformation);
    }

    #[test]
    fn missing_explanation_is_repaired_not_failed() {
        let text = r#"{"0":{"sentences":[0],"label":"included"}}"#;
        let p = parse_matching_response(text, 1, Side::Inclusion, 1);
        assert_eq!(p[0].parse_status, ParseStatus::Repaired);
        assert!(p[0].is_well_formed(1));
    }

    #[test]
    fn range_reads_global_keys() {
        let text = r#"{"2":{"explanation":"e","sentences":[],"label":"included"}}"#;
        let p = parse_matching_response_range(text, 2..3, Side::Inclusion, 1);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].criterion_index, 2);
        assert_eq!(p[0].parse_status, ParseStatus::Ok);
    }
}
