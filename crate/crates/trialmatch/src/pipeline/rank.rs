use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use trialmatch_core::corpus::{PatientNote, TrialRecord};
use trialmatch_core::eval::RankedRun;
use trialmatch_core::gateway::Completion;
use trialmatch_core::ranking::{llm_aggregate, rank_scored, Feature, LlmAggregates, TrialScore};

use super::{load_notes, load_trials, parallel_map, run_file, PairFailure, MATCHES, RANK_SUMMARY, SCORES};
use crate::config::Config;
use crate::formats::{read_matches, write_json, write_jsonl, write_run, ScoreRecord};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSummary {
    pub scored: usize,
    pub patients: usize,
    pub clamped: usize,
    pub parse_failed: usize,
    pub failures: Vec<PairFailure>,
}

fn zero_fallback(reason: String) -> LlmAggregates {
    LlmAggregates {
        relevance: 0.0,
        eligibility: 0.0,
        raw_response: reason,
        clamped: true,
        parse_failed: true,
    }
}

/// Per-patient runs ordered by a feature; `excluding` flips the sign so the
/// trials most likely to be excluded come first.
pub fn feature_runs(scores: &[TrialScore], feature: Feature, excluding: bool) -> Vec<RankedRun> {
    let mut by_patient: BTreeMap<&str, Vec<TrialScore>> = BTreeMap::new();
    for s in scores {
        by_patient.entry(&s.patient_id).or_default().push(s.clone());
    }
    by_patient
        .into_iter()
        .map(|(p, group)| {
            let mut entries = rank_scored(&group, feature);
            if excluding {
                entries.iter_mut().for_each(|e| e.1 = -e.1);
                entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            }
            RankedRun {
                patient_id: p.to_string(),
                entries,
            }
        })
        .collect()
}

/// Asks for trial-level relevance and eligibility on every matched pair,
/// combines them with the linear aggregates into `scores.jsonl`, and writes
/// ranking and excluding run files for every feature. A failed aggregation
/// call leaves R = S = 0 for that pair and is reported.
pub fn rank<G: Completion + Sync>(cfg: &Config, gateway: &G) -> Result<RankSummary> {
    let matches = read_matches(&cfg.artifact(MATCHES))?;
    let notes = load_notes(cfg)?;
    let trials = load_trials(cfg)?;
    let notes_by_id: HashMap<&str, &PatientNote> = notes.iter().map(|n| (n.patient_id.as_str(), n)).collect();
    let trials_by_id: HashMap<&str, &TrialRecord> = trials.iter().map(|t| (t.nct_id.as_str(), t)).collect();

    let outcomes = parallel_map(&matches, cfg.parallelism, |m| {
        let (Some(note), Some(trial)) = (notes_by_id.get(m.patient_id.as_str()), trials_by_id.get(m.nct_id.as_str()))
        else {
            return Err("unknown patient or trial".to_string());
        };
        llm_aggregate(note, trial, m, gateway).map_err(|e| e.to_string())
    });
    let mut failures = Vec::new();
    let mut scores = Vec::with_capacity(matches.len());
    for (m, outcome) in matches.iter().zip(outcomes) {
        let llm = outcome.unwrap_or_else(|error| {
            failures.push(PairFailure {
                patient_id: m.patient_id.clone(),
                nct_id: m.nct_id.clone(),
                error: error.clone(),
            });
            zero_fallback(error)
        });
        scores.push(TrialScore::new(m, llm));
    }
    scores.sort_by(|a, b| (&a.patient_id, &a.nct_id).cmp(&(&b.patient_id, &b.nct_id)));
    write_jsonl(&cfg.artifact(SCORES), scores.iter().map(ScoreRecord::from))?;
    for feature in Feature::ALL {
        let name = feature.as_str();
        let tag = format!("trialmatch-{name}");
        write_run(&cfg.artifact(&run_file("ranking", name)), &feature_runs(&scores, feature, false), &tag)?;
        write_run(&cfg.artifact(&run_file("excluding", name)), &feature_runs(&scores, feature, true), &tag)?;
    }
    let summary = RankSummary {
        scored: scores.len(),
        patients: scores
            .iter()
            .map(|s| s.patient_id.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        clamped: scores.iter().filter(|s| s.llm.clamped && !s.llm.parse_failed).count(),
        parse_failed: scores.iter().filter(|s| s.llm.parse_failed).count(),
        failures,
    };
    write_json(&cfg.artifact(RANK_SUMMARY), &summary)?;
    Ok(summary)
}
