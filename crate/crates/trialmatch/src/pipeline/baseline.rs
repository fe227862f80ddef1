use std::path::Path;

use serde::Serialize;
use trialmatch_core::corpus::Side;
use trialmatch_core::eval::RankedRun;
use trialmatch_core::ranking::{baseline_combination, baseline_dual_encoder_scores, baseline_label_map, linear_from_labels};

use super::{run_file, RUNS_DIR};
use crate::config::Config;
use crate::formats::{load_baseline_nli, load_baseline_vectors, write_jsonl, write_run};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineScore {
    pub method: String,
    pub patient_id: String,
    pub nct_id: String,
    pub ranking: f64,
    pub excluding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub dual_encoder_pairs: usize,
    pub nli_pairs: usize,
}

fn runs(scores: &[BaselineScore], excluding: bool) -> Result<Vec<RankedRun>> {
    let mut grouped: std::collections::BTreeMap<&str, Vec<(String, f64)>> = Default::default();
    for s in scores {
        let v = if excluding { s.excluding } else { s.ranking };
        grouped.entry(&s.patient_id).or_default().push((s.nct_id.clone(), v));
    }
    grouped
        .into_iter()
        .map(|(p, e)| RankedRun::new(p, e).map_err(Error::from))
        .collect()
}

fn emit(cfg: &Config, method: &str, scores: &[BaselineScore]) -> Result<()> {
    let tag = format!("baseline-{method}");
    write_run(&cfg.artifact(&run_file("ranking", &tag)), &runs(scores, false)?, &tag)?;
    write_run(&cfg.artifact(&run_file("excluding", &tag)), &runs(scores, true)?, &tag)?;
    write_jsonl(&cfg.artifact(&format!("{RUNS_DIR}/{tag}.jsonl")), scores)
}

/// Scores externally encoded baselines: dual-encoder similarities from
/// criterion vectors and/or linear aggregation of per-criterion NLI labels.
/// Writes `runs/{ranking,excluding}-baseline-<method>.run` for each input.
pub fn baseline(cfg: &Config, vectors: Option<&Path>, nli: Option<&Path>) -> Result<BaselineSummary> {
    if vectors.is_none() && nli.is_none() {
        return Err(Error::Config("baseline needs --vectors and/or --nli".into()));
    }
    let mut summary = BaselineSummary {
        dual_encoder_pairs: 0,
        nli_pairs: 0,
    };
    if let Some(path) = vectors {
        let mut scores = Vec::new();
        for r in load_baseline_vectors(path)? {
            let (ranking, excluding) = baseline_dual_encoder_scores(&r.vectors)
                .map_err(|e| Error::format(path, format!("{}/{}: {e}", r.patient_id, r.nct_id)))?;
            scores.push(BaselineScore {
                method: "dual_encoder".into(),
                patient_id: r.patient_id,
                nct_id: r.nct_id,
                ranking,
                excluding,
            });
        }
        summary.dual_encoder_pairs = scores.len();
        emit(cfg, "dual_encoder", &scores)?;
    }
    if let Some(path) = nli {
        let mut scores = Vec::new();
        for r in load_baseline_nli(path)? {
            let linear = linear_from_labels(
                r.inclusion.iter().map(|&l| baseline_label_map(l, Side::Inclusion)),
                r.exclusion.iter().map(|&l| baseline_label_map(l, Side::Exclusion)),
            );
            let (ranking, excluding) = baseline_combination(&linear);
            scores.push(BaselineScore {
                method: "nli".into(),
                patient_id: r.patient_id,
                nct_id: r.nct_id,
                ranking,
                excluding,
            });
        }
        summary.nli_pairs = scores.len();
        emit(cfg, "nli", &scores)?;
    }
    Ok(summary)
}
