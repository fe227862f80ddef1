//! Stage runner. Each stage reads its inputs and its predecessors'
//! artifacts from disk and writes its own artifacts under `out_dir`.

mod assign;
mod baseline;
mod evaluate;
mod match_stage;
mod rank;
mod retrieve;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use serde::Serialize;
use trialmatch_core::corpus::{
    check_unique_ids, Cohort, LabelVocabulary, PatientNote, RelevanceJudgment, Side, TrialRecord,
};
use trialmatch_core::retrieval::{DenseIndex, HashEmbedder, LexicalIndex};

pub use assign::assign;
pub use baseline::{baseline, BaselineScore, BaselineSummary};
pub use evaluate::{evaluate, EvaluationOutput};
pub use match_stage::{match_cohort, match_stage, MatchSummary, PairFailure};
pub use rank::{feature_runs, rank, RankSummary};
pub use retrieve::{retrieve, PatientFailure, RetrieveSummary};

use crate::config::{Config, DenseMode};
use crate::formats::{
    load_embeddings, load_patients, load_qrels, parse_trial_corpus, require, save_dense, save_lexical, write_json,
    DenseProvider, DenseSnapshot, KeywordEmbeddings,
};
use crate::{Error, Result};

pub const CORPUS_SUMMARY: &str = "corpus_summary.json";
pub const LEXICAL_INDEX: &str = "lexical_index.json";
pub const DENSE_INDEX: &str = "dense_index.json";
pub const RETRIEVAL: &str = "retrieval.jsonl";
pub const RETRIEVE_SUMMARY: &str = "retrieve_summary.json";
pub const MATCHES: &str = "matches.jsonl";
pub const MATCH_SUMMARY: &str = "match_summary.json";
pub const SCORES: &str = "scores.jsonl";
pub const RANK_SUMMARY: &str = "rank_summary.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const RUNS_DIR: &str = "runs";

pub fn run_file(kind: &str, feature: &str) -> String {
    format!("{RUNS_DIR}/{kind}-{feature}.run")
}

pub fn load_trials(cfg: &Config) -> Result<Vec<TrialRecord>> {
    parse_trial_corpus(cfg.input(&cfg.trials, "trials")?)
}

pub fn load_notes(cfg: &Config) -> Result<Vec<PatientNote>> {
    load_patients(cfg.input(&cfg.patients, "patients")?)
}

pub fn vocabulary(cfg: &Config) -> Result<LabelVocabulary> {
    LabelVocabulary::by_name(&cfg.qrels_vocabulary)
        .ok_or_else(|| Error::Config(format!("unknown qrels vocabulary {:?}", cfg.qrels_vocabulary)))
}

pub fn load_judgments(cfg: &Config) -> Result<Vec<RelevanceJudgment>> {
    load_qrels(cfg.input(&cfg.qrels, "qrels")?, &vocabulary(cfg)?)
}

pub fn load_cohort(cfg: &Config) -> Result<Cohort> {
    let trials_ref = cfg.trials.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    Ok(Cohort::new(&cfg.cohort, load_notes(cfg)?, load_judgments(cfg)?, &trials_ref)?)
}

/// Order-preserving parallel map over at most `parallelism` threads.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], parallelism: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = parallelism.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let done: Vec<Vec<(usize, R)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(item) = items.get(i) else { break };
                        out.push((i, f(item)));
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for (i, r) in done.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots.into_iter().map(|r| r.expect("every index is visited")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub cohort: String,
    pub trials: usize,
    pub inclusion_criteria: usize,
    pub exclusion_criteria: usize,
    pub trials_without_criteria: usize,
    pub patients: usize,
    pub sentences: usize,
    pub judgments: usize,
    pub labels: BTreeMap<String, usize>,
}

/// Validates the corpora and records their sizes.
pub fn ingest(cfg: &Config) -> Result<IngestSummary> {
    let trials = load_trials(cfg)?;
    check_unique_ids(&trials)?;
    let notes = load_notes(cfg)?;
    let judgments = match &cfg.qrels {
        Some(_) => load_cohort(cfg)?.judgments,
        None => Vec::new(),
    };
    let mut labels = BTreeMap::new();
    for j in &judgments {
        *labels.entry(j.label.as_str().to_string()).or_insert(0) += 1;
    }
    let count = |side| trials.iter().map(|t| t.criteria(side).len()).sum();
    let summary = IngestSummary {
        cohort: cfg.cohort.clone(),
        trials: trials.len(),
        inclusion_criteria: count(Side::Inclusion),
        exclusion_criteria: count(Side::Exclusion),
        trials_without_criteria: trials
            .iter()
            .filter(|t| t.inclusion_criteria.is_empty() && t.exclusion_criteria.is_empty())
            .count(),
        patients: notes.len(),
        sentences: notes.iter().map(|n| n.sentence_count()).sum(),
        judgments: judgments.len(),
        labels,
    };
    write_json(&cfg.artifact(CORPUS_SUMMARY), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSummary {
    pub documents: usize,
    pub vocabulary: usize,
    pub average_length: f64,
    pub dense: Option<DenseProvider>,
    pub dense_documents: usize,
    pub warnings: Vec<String>,
}

/// Builds the lexical index and, unless disabled, the dense index.
pub fn index(cfg: &Config) -> Result<IndexSummary> {
    let trials = load_trials(cfg)?;
    check_unique_ids(&trials)?;
    let lexical = LexicalIndex::build(&trials, cfg.bm25)?;
    save_lexical(&cfg.artifact(LEXICAL_INDEX), &lexical)?;
    let mut warnings = Vec::new();
    let docs: Vec<(&str, String)> = trials.iter().map(|t| (t.nct_id.as_str(), t.document_text())).collect();
    let dense = match cfg.dense {
        DenseMode::None => None,
        DenseMode::Hash => {
            let provider = DenseProvider::Hash {
                dim: cfg.hash_dim,
                seed: cfg.seed,
            };
            let embedder = HashEmbedder::new(cfg.hash_dim, cfg.seed);
            let index = DenseIndex::encode(docs.iter().map(|(id, t)| (*id, t.as_str())), &embedder, cfg.similarity)?;
            Some(DenseSnapshot { provider, index })
        }
        DenseMode::File => {
            let vectors = load_embeddings(cfg.input(&cfg.embeddings, "embeddings")?)?;
            let kw_path = cfg
                .keyword_embeddings
                .clone()
                .ok_or_else(|| Error::Config("dense = \"file\" needs keyword_embeddings".into()))?;
            require(&kw_path)?;
            let known: std::collections::HashSet<&str> = trials.iter().map(|t| t.nct_id.as_str()).collect();
            let (kept, unknown): (Vec<_>, Vec<_>) = vectors.into_iter().partition(|(id, _)| known.contains(id.as_str()));
            if !unknown.is_empty() {
                warnings.push(format!("{} embedding(s) for unknown trials ignored", unknown.len()));
            }
            if kept.len() < trials.len() {
                warnings.push(format!("{} trial(s) have no embedding", trials.len() - kept.len()));
            }
            let index = DenseIndex::new(kept, cfg.similarity)?;
            let kw = KeywordEmbeddings::load(&kw_path)?;
            if trialmatch_core::retrieval::EmbeddingProvider::dim(&kw) != index.dim() {
                return Err(Error::Config("keyword and trial embeddings differ in dimension".into()));
            }
            Some(DenseSnapshot {
                provider: DenseProvider::File {
                    keyword_embeddings: kw_path,
                },
                index,
            })
        }
    };
    let dense_path = cfg.artifact(DENSE_INDEX);
    match &dense {
        Some(snapshot) => save_dense(&dense_path, snapshot)?,
        None if dense_path.exists() => std::fs::remove_file(&dense_path).map_err(|e| Error::io(&dense_path, e))?,
        None => {}
    }
    Ok(IndexSummary {
        documents: lexical.document_count(),
        vocabulary: lexical.vocabulary_size(),
        average_length: lexical.average_length(),
        dense_documents: dense.as_ref().map_or(0, |d| d.index.len()),
        dense: dense.map(|d| d.provider),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u32> = (0..100).collect();
        let out = parallel_map(&items, 7, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&Vec::<u32>::new(), 4, |x| *x).is_empty());
    }
}
