use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::Serialize;
use trialmatch_core::corpus::{PatientNote, TrialRecord};
use trialmatch_core::gateway::Completion;
use trialmatch_core::matching::{match_pair, MatchOptions, ParseStatus, TrialMatchResult};

use super::{load_notes, load_trials, MATCHES, MATCH_SUMMARY, RETRIEVAL};
use crate::config::Config;
use crate::formats::{read_jsonl_lenient, read_retrieval, write_json, write_jsonl};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PairFailure {
    pub patient_id: String,
    pub nct_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchSummary {
    pub pairs: usize,
    pub matched: usize,
    /// Pairs already present in the output before this run.
    pub reused: usize,
    pub failed_predictions: usize,
    pub failures: Vec<PairFailure>,
}

fn pair_key(r: &TrialMatchResult) -> (String, String) {
    (r.patient_id.clone(), r.nct_id.clone())
}

/// Matches every `(patient_id, nct_id)` pair and persists results to `out`.
///
/// Results are appended as they complete, so an interrupted run can be
/// resumed: pairs already in `out` are not sent again. When all work is
/// done the file is rewritten sorted by (patient_id, nct_id). Pairs whose
/// gateway calls fail are reported and left out.
#[allow(clippy::too_many_arguments)]
pub fn match_cohort<G: Completion + Sync>(
    notes: &[PatientNote],
    trials: &[TrialRecord],
    pairs: &[(String, String)],
    gateway: &G,
    options: &MatchOptions,
    parallelism: usize,
    out: &Path,
) -> Result<MatchSummary> {
    let mut existing: BTreeMap<(String, String), TrialMatchResult> = BTreeMap::new();
    if out.exists() {
        let (rows, _torn) = read_jsonl_lenient::<TrialMatchResult>(out)?;
        for r in rows {
            existing.insert(pair_key(&r), r);
        }
    } else if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let notes_by_id: HashMap<&str, &PatientNote> = notes.iter().map(|n| (n.patient_id.as_str(), n)).collect();
    let trials_by_id: HashMap<&str, &TrialRecord> = trials.iter().map(|t| (t.nct_id.as_str(), t)).collect();

    let mut failures = Vec::new();
    let mut wanted = BTreeSet::new();
    let mut todo = Vec::new();
    for (p, n) in pairs {
        if !wanted.insert((p.clone(), n.clone())) {
            continue;
        }
        let (Some(note), Some(trial)) = (notes_by_id.get(p.as_str()), trials_by_id.get(n.as_str())) else {
            failures.push(PairFailure {
                patient_id: p.clone(),
                nct_id: n.clone(),
                error: "unknown patient or trial".into(),
            });
            continue;
        };
        if !existing.contains_key(&(p.clone(), n.clone())) {
            todo.push((*note, *trial));
        }
    }
    let reused = wanted.iter().filter(|k| existing.contains_key(*k)).count();

    let mut log = open_append(out)?;
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut fresh = Vec::new();
    thread::scope(|s| -> Result<()> {
        for _ in 0..parallelism.clamp(1, todo.len().max(1)) {
            let tx = tx.clone();
            let (todo, next) = (&todo, &next);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((note, trial)) = todo.get(i) else { break };
                let outcome = match_pair(note, trial, gateway, options);
                if tx.send((note.patient_id.clone(), trial.nct_id.clone(), outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (patient_id, nct_id, outcome) in rx {
            match outcome {
                Ok(result) => {
                    let mut line = serde_json::to_vec(&result).expect("match results serialize");
                    line.push(b'\n');
                    log.write_all(&line).map_err(|e| Error::io(out, e))?;
                    log.flush().map_err(|e| Error::io(out, e))?;
                    fresh.push(result);
                }
                Err(e) => failures.push(PairFailure {
                    patient_id,
                    nct_id,
                    error: e.to_string(),
                }),
            }
        }
        Ok(())
    })?;
    drop(log);

    let matched = fresh.len();
    for r in fresh {
        existing.insert(pair_key(&r), r);
    }
    write_jsonl(out, existing.values())?;
    failures.sort();
    let failed_predictions = existing
        .iter()
        .filter(|(k, _)| wanted.contains(*k))
        .flat_map(|(_, r)| r.inclusion_predictions.iter().chain(&r.exclusion_predictions))
        .filter(|p| p.parse_status == ParseStatus::Failed)
        .count();
    Ok(MatchSummary {
        pairs: wanted.len(),
        matched,
        reused,
        failed_predictions,
        failures,
    })
}

fn open_append(path: &Path) -> Result<fs::File> {
    let torn = fs::read(path).map(|b| !b.is_empty() && !b.ends_with(b"\n")).unwrap_or(false);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    if torn {
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(f)
}

/// Matches each patient against its top `cfg.top` retrieved candidates.
pub fn match_stage<G: Completion + Sync>(cfg: &Config, gateway: &G) -> Result<MatchSummary> {
    let retrieval = read_retrieval(&cfg.artifact(RETRIEVAL))?;
    let notes = load_notes(cfg)?;
    let trials = load_trials(cfg)?;
    let pairs: Vec<(String, String)> = retrieval
        .iter()
        .flat_map(|r| {
            r.scored
                .iter()
                .take(cfg.top)
                .map(|(nct, _)| (r.patient_id.clone(), nct.clone()))
        })
        .collect();
    let summary = match_cohort(
        &notes,
        &trials,
        &pairs,
        gateway,
        &cfg.matching,
        cfg.parallelism,
        &cfg.artifact(MATCHES),
    )?;
    write_json(&cfg.artifact(MATCH_SUMMARY), &summary)?;
    Ok(summary)
}
