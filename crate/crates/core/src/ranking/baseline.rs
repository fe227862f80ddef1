//! Aggregation math for encoder baselines. The encoders themselves are not
//! run here: vectors and NLI labels are supplied by the caller.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::LinearAggregates;
use crate::corpus::Side;
use crate::matching::EligibilityLabel;
use crate::retrieval::dense_dot;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCriterionVectors {
    pub patient_vector: Vec<f64>,
    pub inclusion_vectors: Vec<Vec<f64>>,
    pub exclusion_vectors: Vec<Vec<f64>>,
}

/// Dual-encoder scores: `(mean inclusion similarity - mean exclusion
/// similarity, mean exclusion similarity)`. An empty side contributes 0.
pub fn baseline_dual_encoder_scores(vectors: &BaselineCriterionVectors) -> Result<(f64, f64)> {
    let h = vectors.patient_vector.len();
    let mean_sim = |side: &[Vec<f64>]| -> Result<f64> {
        if side.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for v in side {
            if v.len() != h {
                return Err(Error::DimensionMismatch {
                    expected: h,
                    found: v.len(),
                });
            }
            total += dense_dot(&vectors.patient_vector, v);
        }
        Ok(total / side.len() as f64)
    };
    let inc = mean_sim(&vectors.inclusion_vectors)?;
    let exc = mean_sim(&vectors.exclusion_vectors)?;
    Ok((inc - exc, exc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Entailment,
    Contradiction,
    Neutral,
}

/// Maps an NLI label onto the side's eligibility vocabulary; neutral means
/// no relevant information.
pub fn baseline_label_map(nli: NliLabel, side: Side) -> EligibilityLabel {
    match (nli, side) {
        (NliLabel::Entailment, Side::Inclusion) => EligibilityLabel::Included,
        (NliLabel::Contradiction, Side::Inclusion) => EligibilityLabel::NotIncluded,
        (NliLabel::Entailment, Side::Exclusion) => EligibilityLabel::Excluded,
        (NliLabel::Contradiction, Side::Exclusion) => EligibilityLabel::NotExcluded,
        (NliLabel::Neutral, _) => EligibilityLabel::NotEnoughInformation,
    }
}

/// `(met_inc - unmet_inc - met_exc + unmet_exc,
///   1[unmet_inc > 0] + 1[met_exc > 0] - met_inc)`
pub fn baseline_combination(linear: &LinearAggregates) -> (f64, f64) {
    let ranking = linear.pct_met_inclusion - linear.pct_unmet_inclusion - linear.pct_met_exclusion
        + linear.pct_unmet_exclusion;
    let indicator = |c: bool| if c { 1.0 } else { 0.0 };
    let excluding = indicator(linear.pct_unmet_inclusion > 0.0) + indicator(linear.pct_met_exclusion > 0.0)
        - linear.pct_met_inclusion;
    (ranking, excluding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn dual_encoder_fixture() {
        let v = BaselineCriterionVectors {
            patient_vector: vec![1.0, 0.0],
            inclusion_vectors: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            exclusion_vectors: vec![vec![1.0, 0.0]],
        };
        assert_eq!(baseline_dual_encoder_scores(&v).unwrap(), (-0.5, 1.0));
    }

    #[test]
    fn orthogonal_patient() {
        let v = BaselineCriterionVectors {
            patient_vector: vec![0.0, 0.0, 1.0],
            inclusion_vectors: vec![vec![1.0, 0.0, 0.0]],
            exclusion_vectors: vec![vec![0.0, 1.0, 0.0]],
        };
        assert_eq!(baseline_dual_encoder_scores(&v).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn empty_exclusion_side() {
        let v = BaselineCriterionVectors {
            patient_vector: vec![1.0, 1.0],
            inclusion_vectors: vec![vec![1.0, 0.0], vec![1.0, 1.0]],
            exclusion_vectors: vec![],
        };
        assert_eq!(baseline_dual_encoder_scores(&v).unwrap(), (1.5, 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let v = BaselineCriterionVectors {
            patient_vector: vec![1.0, 1.0],
            inclusion_vectors: vec![vec![1.0]],
            exclusion_vectors: vec![],
        };
        assert!(matches!(baseline_dual_encoder_scores(&v), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn label_maps() {
        assert_eq!(baseline_label_map(NliLabel::Entailment, Side::Inclusion), EligibilityLabel::Included);
        assert_eq!(baseline_label_map(NliLabel::Contradiction, Side::Exclusion), EligibilityLabel::NotExcluded);
        assert_eq!(
            baseline_label_map(NliLabel::Neutral, Side::Inclusion),
            EligibilityLabel::NotEnoughInformation
        );
        assert_eq!(baseline_label_map(NliLabel::Entailment, Side::Exclusion), EligibilityLabel::Excluded);
        assert_eq!(baseline_label_map(NliLabel::Contradiction, Side::Inclusion), EligibilityLabel::NotIncluded);
    }

    fn lin(met: f64, unmet: f64, met_excl: f64, unmet_excl: f64) -> LinearAggregates {
        LinearAggregates {
            pct_met_inclusion: met,
            pct_unmet_inclusion: unmet,
            pct_met_exclusion: met_excl,
            pct_unmet_exclusion: unmet_excl,
            ..LinearAggregates::default()
        }
    }

    #[test]
    fn combination_fixtures() {
        assert_eq!(baseline_combination(&lin(0.5, 0.25, 0.5, 0.5)), (0.25, 1.5));
        assert_eq!(baseline_combination(&lin(1.0, 0.0, 0.0, 1.0)), (2.0, -1.0));
    }
}
