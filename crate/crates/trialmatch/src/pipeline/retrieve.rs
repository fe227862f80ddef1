use serde::Serialize;
use trialmatch_core::eval::RankedRun;
use trialmatch_core::gateway::Completion;
use trialmatch_core::retrieval::{EmbeddingProvider, Retrieval, RetrievalResult};

use super::{load_notes, parallel_map, run_file, DENSE_INDEX, LEXICAL_INDEX, RETRIEVAL, RETRIEVE_SUMMARY};
use crate::config::Config;
use crate::formats::{load_dense, load_lexical, write_json, write_jsonl, write_run};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatientFailure {
    pub patient_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrieveSummary {
    pub patients: usize,
    pub retrieved: usize,
    pub dense: bool,
    pub lexical_only_patients: Vec<String>,
    pub max_candidates: usize,
    pub failures: Vec<PatientFailure>,
}

/// Generates keywords for every patient and fuses lexical and dense
/// rankings into at most `top` candidates each.
pub fn retrieve<G: Completion + Sync>(cfg: &Config, gateway: &G) -> Result<RetrieveSummary> {
    let lexical = load_lexical(&cfg.artifact(LEXICAL_INDEX))?;
    let dense_path = cfg.artifact(DENSE_INDEX);
    let dense = if dense_path.exists() {
        let snap = load_dense(&dense_path)?;
        let provider = snap.provider.open()?;
        Some((snap.index, provider))
    } else {
        None
    };
    let notes = load_notes(cfg)?;
    let fusion = cfg.fusion();
    fusion.validate()?;

    let outcomes = parallel_map(&notes, cfg.parallelism, |note| {
        let retrieval = Retrieval {
            lexical: &lexical,
            dense: dense
                .as_ref()
                .map(|(idx, p)| (idx, p.as_ref() as &dyn EmbeddingProvider)),
            config: fusion,
        };
        retrieval.retrieve(note, gateway)
    });

    let mut results: Vec<RetrievalResult> = Vec::new();
    let mut failures = Vec::new();
    for (note, outcome) in notes.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push(PatientFailure {
                patient_id: note.patient_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    results.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    write_jsonl(&cfg.artifact(RETRIEVAL), &results)?;
    let runs: Vec<RankedRun> = results
        .iter()
        .map(|r| RankedRun {
            patient_id: r.patient_id.clone(),
            entries: r.scored.clone(),
        })
        .collect();
    write_run(&cfg.artifact(&run_file("retrieval", "fused")), &runs, "trialmatch-retrieval")?;

    let summary = RetrieveSummary {
        patients: notes.len(),
        retrieved: results.len(),
        dense: dense.is_some(),
        lexical_only_patients: results
            .iter()
            .filter(|r| r.lexical_only && dense.is_some())
            .map(|r| r.patient_id.clone())
            .collect(),
        max_candidates: results.iter().map(|r| r.scored.len()).max().unwrap_or(0),
        failures,
    };
    write_json(&cfg.artifact(RETRIEVE_SUMMARY), &summary)?;
    Ok(summary)
}
