use std::collections::BTreeMap;

use trialmatch_core::screening::{build_screening_assignment, screening_summary, Decision, ScreeningDecision};

fn decision(p: &str, n: &str, annotator: &str, assisted: bool, ms: u64) -> ScreeningDecision {
    ScreeningDecision {
        patient_id: p.into(),
        nct_id: n.into(),
        decision: Decision::Maybe,
        assisted,
        elapsed_ms: ms,
        annotator_id: annotator.into(),
        timestamp: "2024-05-01T12:00:00Z".into(),
    }
}

/// Six cases by six trials, every pair screened once in each mode, with
/// assisted time exactly half of unassisted time.
#[test]
fn half_time_saves_half_in_every_grouping() {
    let pairs: Vec<(String, String)> = (0..6)
        .flat_map(|c| (0..6).map(move |t| (format!("case{c}"), format!("trial{t}"))))
        .collect();
    let annotators = ["alice".to_string(), "bob".to_string()];
    let a = build_screening_assignment(&pairs, &annotators, 3).unwrap();
    let mut decisions = Vec::new();
    for (i, p) in a.pairs.iter().enumerate() {
        let base = 20_000 + 1_000 * i as u64;
        decisions.push(decision(&p.patient_id, &p.nct_id, &p.assisted_annotator, true, base / 2));
        decisions.push(decision(&p.patient_id, &p.nct_id, &p.unassisted_annotator, false, base));
    }
    let groups: BTreeMap<String, String> = (0..6)
        .map(|c| (format!("case{c}"), if c < 3 { "short" } else { "long" }.to_string()))
        .collect();
    let s = screening_summary(&decisions, Some(&groups), None);
    let overall = s.overall.unwrap();
    assert!((overall.saving - 0.5).abs() < 1e-12);
    assert_eq!((overall.assisted_n, overall.unassisted_n), (36, 36));
    assert_eq!(s.per_case.len(), 6);
    assert_eq!(s.per_trial.len(), 6);
    assert_eq!(s.per_case_group.len(), 2);
    let cells = s
        .per_case
        .values()
        .chain(s.per_trial.values())
        .chain(s.per_case_group.values());
    for cell in cells {
        assert!((cell.saving - 0.5).abs() < 1e-12, "{cell:?}");
    }
    // Per annotator the halves come from different pairs, so only check
    // both cells exist and are balanced.
    for cell in s.per_annotator.values() {
        assert_eq!((cell.assisted_n, cell.unassisted_n), (18, 18));
    }
}

#[test]
fn reported_means_give_the_expected_saving() {
    let decisions = [
        decision("c1", "t1", "a", true, 35_300),
        decision("c1", "t1", "b", false, 61_500),
    ];
    let s = screening_summary(&decisions, None, None);
    let saving = s.overall.unwrap().saving;
    assert!((saving - 0.426).abs() < 5e-4, "{saving}");
}

#[test]
fn accuracy_against_answer_key() {
    let mut wrong = decision("c1", "t2", "b", false, 10);
    wrong.decision = Decision::No;
    let decisions = [
        decision("c1", "t1", "a", true, 10),
        decision("c1", "t1", "b", false, 20),
        wrong,
    ];
    let key: BTreeMap<(String, String), Decision> = [
        (("c1".to_string(), "t1".to_string()), Decision::Maybe),
        (("c1".to_string(), "t2".to_string()), Decision::Maybe),
    ]
    .into();
    let overall = screening_summary(&decisions, None, Some(&key)).overall.unwrap();
    assert_eq!(overall.assisted_accuracy, Some(1.0));
    assert_eq!(overall.unassisted_accuracy, Some(0.5));
}
