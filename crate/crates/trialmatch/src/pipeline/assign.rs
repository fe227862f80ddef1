use trialmatch_core::ranking::TrialScore;
use trialmatch_core::screening::{build_screening_assignment, ScreeningAssignment};

use super::rank::feature_runs;
use super::SCORES;
use crate::config::Config;
use crate::formats::{read_scores, write_json};
use crate::Result;

/// Splits the top `per_patient` trials of every patient (by the configured
/// feature) between two annotators, each pair assisted for exactly one of
/// them, and writes the assignment to `cfg.assignment_path()`.
///
/// The split needs an even number of pairs; with an odd total the last
/// pair in (patient, rank) order is left out and reported.
pub fn assign(cfg: &Config, annotators: &[String], per_patient: usize) -> Result<(ScreeningAssignment, Option<(String, String)>)> {
    let scores: Vec<TrialScore> = read_scores(&cfg.artifact(SCORES))?.iter().map(TrialScore::from).collect();
    let mut pairs: Vec<(String, String)> = feature_runs(&scores, cfg.feature, false)
        .into_iter()
        .flat_map(|run| {
            let p = run.patient_id;
            run.entries
                .into_iter()
                .take(per_patient)
                .map(move |(n, _)| (p.clone(), n))
        })
        .collect();
    let dropped = if pairs.len() % 2 == 1 { pairs.pop() } else { None };
    let assignment = build_screening_assignment(&pairs, annotators, cfg.seed)?;
    write_json(&cfg.assignment_path(), &assignment)?;
    Ok((assignment, dropped))
}
