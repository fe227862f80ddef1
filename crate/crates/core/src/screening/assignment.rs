use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignedPair {
    pub patient_id: String,
    pub nct_id: String,
    pub assisted_annotator: String,
    pub unassisted_annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorTask {
    pub patient_id: String,
    pub nct_id: String,
    pub assisted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningAssignment {
    pub annotators: [String; 2],
    pub seed: u64,
    pub pairs: Vec<AssignedPair>,
}

impl ScreeningAssignment {
    /// The annotator's queue, in assignment order.
    pub fn tasks_for(&self, annotator: &str) -> Option<Vec<AnnotatorTask>> {
        if !self.annotators.iter().any(|a| a == annotator) {
            return None;
        }
        Some(
            self.pairs
                .iter()
                .map(|p| AnnotatorTask {
                    patient_id: p.patient_id.clone(),
                    nct_id: p.nct_id.clone(),
                    assisted: p.assisted_annotator == annotator,
                })
                .collect(),
        )
    }

    pub fn is_assisted(&self, patient_id: &str, nct_id: &str, annotator: &str) -> Option<bool> {
        self.pairs
            .iter()
            .find(|p| p.patient_id == patient_id && p.nct_id == nct_id)
            .map(|p| p.assisted_annotator == annotator)
    }
}

/// Every pair is screened once with assistance by one annotator and once
/// without by the other; each annotator gets exactly half of the pairs
/// assisted. Which half is drawn from `seed`.
pub fn build_screening_assignment(
    pairs: &[(String, String)],
    annotators: &[String],
    seed: u64,
) -> Result<ScreeningAssignment> {
    let [a, b] = annotators else {
        return Err(Error::Assignment(alloc::format!(
            "exactly 2 annotators required, got {}",
            annotators.len()
        )));
    };
    if a == b {
        return Err(Error::Assignment("annotators must be distinct".into()));
    }
    if !pairs.len().is_multiple_of(2) {
        return Err(Error::Assignment(alloc::format!("pair count {} is odd", pairs.len())));
    }
    let mut seen = BTreeSet::new();
    for p in pairs {
        if !seen.insert(p) {
            return Err(Error::Assignment(alloc::format!("duplicate pair {}/{}", p.0, p.1)));
        }
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let half = pairs.len() / 2;
    let mut assisted_by_a = alloc::vec![false; pairs.len()];
    for &i in &order[..half] {
        assisted_by_a[i] = true;
    }
    let out = pairs
        .iter()
        .zip(assisted_by_a)
        .map(|((patient_id, nct_id), by_a)| {
            let (with, without) = if by_a { (a, b) } else { (b, a) };
            AssignedPair {
                patient_id: patient_id.clone(),
                nct_id: nct_id.clone(),
                assisted_annotator: with.clone(),
                unassisted_annotator: without.clone(),
            }
        })
        .collect();
    Ok(ScreeningAssignment {
        annotators: [a.clone(), b.clone()],
        seed,
        pairs: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn pairs(n: usize) -> Vec<(String, String)> {
        (0..n).map(|i| (format!("case{}", i % 6), format!("NCT{:08}", i / 6))).collect()
    }

    fn annotators() -> Vec<String> {
        ["x".to_string(), "y".to_string()].to_vec()
    }

    fn check_balance(asg: &ScreeningAssignment, n: usize) {
        assert_eq!(asg.pairs.len(), n);
        for name in &asg.annotators {
            let tasks = asg.tasks_for(name).unwrap();
            assert_eq!(tasks.iter().filter(|t| t.assisted).count(), n / 2);
            assert_eq!(tasks.iter().filter(|t| !t.assisted).count(), n / 2);
        }
        for p in &asg.pairs {
            assert_ne!(p.assisted_annotator, p.unassisted_annotator);
        }
    }

    #[test]
    fn thirty_six_pairs() {
        let asg = build_screening_assignment(&pairs(36), &annotators(), 1).unwrap();
        check_balance(&asg, 36);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = build_screening_assignment(&pairs(4), &annotators(), 7).unwrap();
        let b = build_screening_assignment(&pairs(4), &annotators(), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_odd_counts_and_wrong_annotators() {
        assert!(build_screening_assignment(&pairs(3), &annotators(), 0).is_err());
        assert!(build_screening_assignment(&pairs(4), &annotators()[..1], 0).is_err());
        assert!(build_screening_assignment(&pairs(4), &["x".into(), "x".into()], 0).is_err());
        let dup = [("p".to_string(), "n".to_string()), ("p".to_string(), "n".to_string())];
        assert!(build_screening_assignment(&dup, &annotators(), 0).is_err());
    }

    #[test]
    fn unknown_annotator_has_no_queue() {
        let asg = build_screening_assignment(&pairs(2), &annotators(), 0).unwrap();
        assert!(asg.tasks_for("z").is_none());
        assert!(asg.is_assisted("case0", "NCT00000000", "x").is_some());
    }

    proptest! {
        #[test]
        fn balance_holds_for_all_even_counts(half in 1usize..=100, seed in any::<u64>()) {
            let n = half * 2;
            let asg = build_screening_assignment(&pairs(n), &annotators(), seed).unwrap();
            check_balance(&asg, n);
        }
    }
}
