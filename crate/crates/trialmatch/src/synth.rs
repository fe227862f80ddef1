//! Seeded synthetic cohorts with known answers, plus the mock fixtures that
//! make the full pipeline reproduce those answers offline.
//!
//! Every trial targets one condition and excludes one comorbidity. A
//! patient has one condition and a few comorbidities, so each pair is
//! eligible (same condition, no excluded comorbidity), excluded (same
//! condition, excluded comorbidity present) or irrelevant.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use trialmatch_core::corpus::{CriteriaSource, PatientNote, RelevanceLabel, Side, TrialRecord};
use trialmatch_core::gateway::Task;
use trialmatch_core::matching::EligibilityLabel;

use crate::formats::{write_atomic, write_jsonl, PatientLine, TrialLine};
use crate::gateway::Fixture;
use crate::{Error, Result};

const CONDITIONS: [&str; 8] = [
    "type 2 diabetes",
    "asthma",
    "rheumatoid arthritis",
    "chronic kidney disease",
    "heart failure",
    "psoriasis",
    "major depressive disorder",
    "osteoarthritis",
];

const COMORBIDITIES: [&str; 8] = [
    "hepatitis",
    "epilepsy",
    "stroke",
    "tuberculosis",
    "pancreatitis",
    "glaucoma",
    "lymphoma",
    "sarcoidosis",
];

const INTERVENTIONS: [&str; 6] = [
    "oral tablet",
    "subcutaneous injection",
    "inhaled therapy",
    "exercise program",
    "dietary supplement",
    "infusion",
];

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const PATIENTS_FILE: &str = "patients.jsonl";
pub const QRELS_FILE: &str = "qrels.txt";
pub const FIXTURES_FILE: &str = "mock_fixtures.jsonl";
pub const CONFIG_FILE: &str = "trialmatch.toml";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthOptions {
    pub patients: usize,
    pub trials: usize,
    pub seed: u64,
    /// Probability that a criterion-level label in the fixtures is replaced
    /// by a uniformly drawn label of the same side.
    pub noise: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            patients: 10,
            trials: 50,
            seed: 7,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCohort {
    pub trials: Vec<TrialRecord>,
    pub notes: Vec<PatientNote>,
    /// (patient, trial, label) for every pair.
    pub truth: Vec<(String, String, RelevanceLabel)>,
    pub fixtures: Vec<Fixture>,
}

struct Profile {
    id: String,
    age: u32,
    condition: usize,
    comorbidities: Vec<usize>,
}

struct TrialSpec {
    condition: usize,
    excluded: usize,
}

pub fn nct_id(i: usize) -> String {
    format!("NCT{:08}", 10_000_000 + i)
}

pub fn patient_id(i: usize) -> String {
    format!("P{:03}", i + 1)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn trial_record(i: usize, spec: &TrialSpec) -> Result<TrialRecord> {
    let condition = CONDITIONS[spec.condition];
    let comorbidity = COMORBIDITIES[spec.excluded];
    let intervention = INTERVENTIONS[i % INTERVENTIONS.len()];
    let record = TrialRecord::new(
        &nct_id(i),
        &format!("{} {} study {}", capitalize(condition), intervention, i + 1),
        vec![condition.to_string()],
        vec![intervention.to_string()],
        &format!("A study of {intervention} in adults with {condition}."),
        CriteriaSource::List(vec![
            format!("Diagnosis of {condition}."),
            "Age 18 years or older.".into(),
            "Adequate organ function.".into(),
        ]),
        CriteriaSource::List(vec![
            format!("History of {comorbidity}."),
            "Pregnancy or breastfeeding.".into(),
        ]),
    )?;
    Ok(record)
}

// Sentence 0: condition, 1: comorbidities, 2: pregnancy, 3: labs.
fn note_text(p: &Profile) -> String {
    let history: Vec<&str> = p.comorbidities.iter().map(|&c| COMORBIDITIES[c]).collect();
    format!(
        "{}-year-old patient with {}. Past history of {}. Not pregnant. Laboratory values within normal limits.",
        p.age,
        CONDITIONS[p.condition],
        history.join(" and "),
    )
}

fn truth(p: &Profile, t: &TrialSpec) -> RelevanceLabel {
    if p.condition != t.condition {
        RelevanceLabel::Irrelevant
    } else if p.comorbidities.contains(&t.excluded) {
        RelevanceLabel::Excluded
    } else {
        RelevanceLabel::Eligible
    }
}

fn entry(explanation: &str, sentences: &[usize], label: EligibilityLabel) -> serde_json::Value {
    json!({"explanation": explanation, "sentences": sentences, "label": label})
}

fn noisy(rng: &mut ChaCha8Rng, noise: f64, side: Side, label: EligibilityLabel) -> EligibilityLabel {
    if noise > 0.0 && rng.gen_bool(noise.min(1.0)) {
        *EligibilityLabel::vocabulary(side).choose(rng).expect("non-empty vocabulary")
    } else {
        label
    }
}

fn side_response(
    rng: &mut ChaCha8Rng,
    noise: f64,
    side: Side,
    items: &[(&str, &[usize], EligibilityLabel)],
) -> String {
    let mut map = serde_json::Map::new();
    for (i, (expl, sentences, label)) in items.iter().enumerate() {
        let label = noisy(rng, noise, side, *label);
        map.insert(i.to_string(), entry(expl, sentences, label));
    }
    serde_json::Value::Object(map).to_string()
}

fn pair_fixtures(rng: &mut ChaCha8Rng, noise: f64, p: &Profile, nct: &str, label: RelevanceLabel) -> [Fixture; 3] {
    use EligibilityLabel::*;
    let (inclusion, exclusion, r, s) = match label {
        RelevanceLabel::Eligible => (
            side_response(rng, noise, Side::Inclusion, &[
                ("The patient has the target condition.", &[0], Included),
                ("The patient is an adult.", &[0], Included),
                ("Labs are normal.", &[3], Included),
            ]),
            side_response(rng, noise, Side::Exclusion, &[
                ("The excluded comorbidity is not reported.", &[1], NotExcluded),
                ("The patient is not pregnant.", &[2], NotExcluded),
            ]),
            90.0,
            80.0,
        ),
        RelevanceLabel::Excluded => (
            side_response(rng, noise, Side::Inclusion, &[
                ("The patient has the target condition.", &[0], Included),
                ("The patient is an adult.", &[0], Included),
                ("Labs are normal.", &[3], Included),
            ]),
            side_response(rng, noise, Side::Exclusion, &[
                ("The patient has the excluded comorbidity.", &[1], Excluded),
                ("The patient is not pregnant.", &[2], NotExcluded),
            ]),
            80.0,
            -60.0,
        ),
        _ => (
            side_response(rng, noise, Side::Inclusion, &[
                ("The patient has a different condition.", &[0], NotIncluded),
                ("Not assessed for this condition.", &[], NotEnoughInformation),
                ("Not assessed for this condition.", &[], NotEnoughInformation),
            ]),
            side_response(rng, noise, Side::Exclusion, &[
                ("Not assessed for this condition.", &[], NotEnoughInformation),
                ("Not assessed for this condition.", &[], NotEnoughInformation),
            ]),
            5.0,
            0.0,
        ),
    };
    let r: f64 = r + rng.gen_range(-4.0..4.0);
    let s: f64 = s + rng.gen_range(-4.0..4.0);
    let aggregation = json!({
        "relevance_explanation": "Synthetic assessment.",
        "relevance_score_R": (r * 10.0).round() / 10.0,
        "eligibility_explanation": "Synthetic assessment.",
        "eligibility_score_S": (s * 10.0).round() / 10.0,
    })
    .to_string();
    [
        Fixture::tagged(Task::Inclusion, &p.id, Some(nct), inclusion),
        Fixture::tagged(Task::Exclusion, &p.id, Some(nct), exclusion),
        Fixture::tagged(Task::Aggregation, &p.id, Some(nct), aggregation),
    ]
}

/// Builds a cohort. Needs at least two trials per condition in use so that
/// every patient has both an eligible and an excluded trial.
pub fn generate(options: &SynthOptions) -> Result<SynthCohort> {
    if options.patients == 0 || options.trials < 4 {
        return Err(Error::Config("synthetic cohort needs at least 1 patient and 4 trials".into()));
    }
    if !(0.0..=1.0).contains(&options.noise) {
        return Err(Error::Config(format!("noise {} is outside [0, 1]", options.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let n_conditions = (options.trials / 2).min(CONDITIONS.len());
    let specs: Vec<TrialSpec> = (0..options.trials)
        .map(|i| TrialSpec {
            condition: i % n_conditions,
            excluded: (i / n_conditions) % COMORBIDITIES.len(),
        })
        .collect();

    let profiles: Vec<Profile> = (0..options.patients)
        .map(|i| {
            let condition = rng.gen_range(0..n_conditions);
            let own: Vec<usize> = specs
                .iter()
                .filter(|t| t.condition == condition)
                .map(|t| t.excluded)
                .collect();
            // One comorbidity excluded by some trial of the condition, at
            // most one more drawn freely, never all of them.
            let mut comorbidities = vec![*own.choose(&mut rng).expect("conditions have trials")];
            let extra = rng.gen_range(0..COMORBIDITIES.len());
            let mut distinct_own = own.clone();
            distinct_own.sort_unstable();
            distinct_own.dedup();
            if !comorbidities.contains(&extra) && (distinct_own.len() > 2 || !distinct_own.contains(&extra)) {
                comorbidities.push(extra);
            }
            comorbidities.sort_unstable();
            Profile {
                id: patient_id(i),
                age: rng.gen_range(25..80),
                condition,
                comorbidities,
            }
        })
        .collect();

    let trials = specs
        .iter()
        .enumerate()
        .map(|(i, s)| trial_record(i, s))
        .collect::<Result<Vec<_>>>()?;
    let notes = profiles
        .iter()
        .map(|p| PatientNote::new(&p.id, &note_text(p)).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;

    let mut truth_rows = Vec::new();
    let mut fixtures = Vec::new();
    for p in &profiles {
        let mut keywords = vec![CONDITIONS[p.condition].to_string()];
        keywords.extend(p.comorbidities.iter().map(|&c| COMORBIDITIES[c].to_string()));
        let kw = json!({"summary": "Synthetic patient.", "keywords": keywords}).to_string();
        fixtures.push(Fixture::tagged(Task::Keywords, &p.id, None, kw));
        for (i, spec) in specs.iter().enumerate() {
            let nct = nct_id(i);
            let label = truth(p, spec);
            fixtures.extend(pair_fixtures(&mut rng, options.noise, p, &nct, label));
            truth_rows.push((p.id.clone(), nct, label));
        }
    }
    Ok(SynthCohort {
        trials,
        notes,
        truth: truth_rows,
        fixtures,
    })
}

impl SynthCohort {
    pub fn qrels_text(&self) -> String {
        let mut out = String::new();
        for (p, n, label) in &self.truth {
            let _ = writeln!(out, "{p} 0 {n} {}", label.grade());
        }
        out
    }

    pub fn labels(&self) -> BTreeMap<(String, String), RelevanceLabel> {
        self.truth
            .iter()
            .map(|(p, n, l)| ((p.clone(), n.clone()), *l))
            .collect()
    }

    /// Writes the corpus, qrels, fixtures and a mock-backend config that
    /// points at them into `dir`. Returns the config path.
    pub fn write(&self, dir: &Path, seed: u64) -> Result<PathBuf> {
        write_jsonl(&dir.join(TRIALS_FILE), self.trials.iter().map(TrialLine::from))?;
        write_jsonl(
            &dir.join(PATIENTS_FILE),
            self.notes.iter().map(|n| PatientLine {
                patient_id: n.patient_id.clone(),
                text: n.raw_text.clone(),
            }),
        )?;
        write_atomic(&dir.join(QRELS_FILE), self.qrels_text().as_bytes())?;
        write_jsonl(&dir.join(FIXTURES_FILE), &self.fixtures)?;
        let config = format!(
            "cohort = \"synthetic\"\n\
             trials = \"{TRIALS_FILE}\"\n\
             patients = \"{PATIENTS_FILE}\"\n\
             qrels = \"{QRELS_FILE}\"\n\
             backend = \"mock\"\n\
             fixtures = \"{FIXTURES_FILE}\"\n\
             out_dir = \"out\"\n\
             seed = {seed}\n"
        );
        let path = dir.join(CONFIG_FILE);
        write_atomic(&path, config.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_patient_has_eligible_and_excluded_trials() {
        let c = generate(&SynthOptions::default()).unwrap();
        for n in &c.notes {
            let labels: Vec<_> = c.truth.iter().filter(|t| t.0 == n.patient_id).map(|t| t.2).collect();
            assert_eq!(labels.len(), 50);
            assert!(labels.contains(&RelevanceLabel::Eligible), "{}", n.patient_id);
            assert!(labels.contains(&RelevanceLabel::Excluded), "{}", n.patient_id);
        }
    }

    #[test]
    fn notes_have_four_sentences() {
        let c = generate(&SynthOptions::default()).unwrap();
        assert!(c.notes.iter().all(|n| n.sentence_count() == 4));
    }

    #[test]
    fn fixture_count() {
        let c = generate(&SynthOptions::default()).unwrap();
        assert_eq!(c.fixtures.len(), 10 + 10 * 50 * 3);
    }

    #[test]
    fn same_seed_same_cohort() {
        let a = generate(&SynthOptions::default()).unwrap();
        let b = generate(&SynthOptions::default()).unwrap();
        assert_eq!(a.fixtures, b.fixtures);
        assert_eq!(a.qrels_text(), b.qrels_text());
        let c = generate(&SynthOptions { seed: 8, ..Default::default() }).unwrap();
        assert_ne!(a.fixtures, c.fixtures);
    }

    #[test]
    fn rejects_bad_options() {
        assert!(generate(&SynthOptions { trials: 3, ..Default::default() }).is_err());
        assert!(generate(&SynthOptions { noise: 1.5, ..Default::default() }).is_err());
    }
}
