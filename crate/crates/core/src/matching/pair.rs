use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::{
    build_matching_prompt_range, estimate_tokens, parse_matching_response_range, CallMetadata, CriterionPrediction,
    ParseStatus, TrialMatchResult,
};
use crate::corpus::{PatientNote, Side, TrialRecord};
use crate::gateway::{ChatRequest, Completion};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchOptions {
    /// Estimated-token ceiling for one user prompt; longer sides are split
    /// into several calls.
    pub prompt_token_budget: usize,
    pub max_output_tokens: u32,
    /// Ask once more when a call yields nothing but failed predictions.
    pub reask_on_failure: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            prompt_token_budget: 12_000,
            max_output_tokens: 4096,
            reask_on_failure: false,
        }
    }
}

const REASK_SUFFIX: &str = "\nYour previous answer could not be read. Reply with the JSON object only.\n";

/// Matches one patient against every criterion of one trial.
///
/// One call per side with criteria (none for an empty side), unless a side
/// exceeds the prompt budget and is split. Gateway failures are tagged with
/// the pair and side.
pub fn match_pair<G: Completion + ?Sized>(
    note: &PatientNote,
    trial: &TrialRecord,
    gateway: &G,
    options: &MatchOptions,
) -> Result<TrialMatchResult> {
    let mut meta = CallMetadata::default();
    let mut sides: [Vec<CriterionPrediction>; 2] = [Vec::new(), Vec::new()];
    for (slot, side) in sides.iter_mut().zip(Side::BOTH) {
        for range in chunk_ranges(note, trial, side, options.prompt_token_budget) {
            let (system, user) = build_matching_prompt_range(note, trial, side, range.clone())
                .expect("chunk ranges are non-empty and in bounds");
            let mut predictions = call(gateway, note, trial, side, system.clone(), user.clone(), &range, options, &mut meta)?;
            if options.reask_on_failure && predictions.iter().all(|p| p.parse_status == ParseStatus::Failed) {
                let mut retry_user = user;
                retry_user.push_str(REASK_SUFFIX);
                predictions = call(gateway, note, trial, side, system, retry_user, &range, options, &mut meta)?;
            }
            slot.extend(predictions);
        }
    }
    let [inclusion_predictions, exclusion_predictions] = sides;
    Ok(TrialMatchResult {
        patient_id: note.patient_id.clone(),
        nct_id: trial.nct_id.clone(),
        inclusion_predictions,
        exclusion_predictions,
        meta,
    })
}

#[allow(clippy::too_many_arguments)]
fn call<G: Completion + ?Sized>(
    gateway: &G,
    note: &PatientNote,
    trial: &TrialRecord,
    side: Side,
    system: String,
    user: String,
    range: &Range<usize>,
    options: &MatchOptions,
    meta: &mut CallMetadata,
) -> Result<Vec<CriterionPrediction>> {
    let request = ChatRequest::pipeline(gateway.model(), system, user, options.max_output_tokens);
    let response = gateway.complete(&request).map_err(|source| Error::Pair {
        patient_id: note.patient_id.clone(),
        nct_id: trial.nct_id.clone(),
        side,
        source,
    })?;
    meta.calls += 1;
    if !meta.backends.contains(&response.backend_id) {
        meta.backends.push(response.backend_id.clone());
    }
    Ok(parse_matching_response_range(&response.text, range.clone(), side, note.sentence_count()))
}

/// Splits a side's criteria so each prompt stays within `budget` estimated
/// tokens. A single criterion always gets its own call even if it alone
/// exceeds the budget.
fn chunk_ranges(note: &PatientNote, trial: &TrialRecord, side: Side, budget: usize) -> Vec<Range<usize>> {
    let n = trial.criteria(side).len();
    if n == 0 {
        return Vec::new();
    }
    let fits = |r: Range<usize>| {
        build_matching_prompt_range(note, trial, side, r)
            .map(|(s, u)| estimate_tokens(&s) + estimate_tokens(&u) <= budget)
            .unwrap_or(false)
    };
    if fits(0..n) {
        return alloc::vec![0..n];
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && fits(start..end + 1) {
            end += 1;
        }
        out.push(start..end);
        start = end;
    }
    out
}
