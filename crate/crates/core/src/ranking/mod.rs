//! Trial-level scoring from criterion-level predictions.

mod baseline;
mod linear;
mod llm;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baseline::{
    baseline_combination, baseline_dual_encoder_scores, baseline_label_map, BaselineCriterionVectors, NliLabel,
};
pub use linear::{linear_aggregate, linear_from_labels, LinearAggregates};
pub use llm::{build_aggregation_prompt, llm_aggregate, parse_aggregation_response, LlmAggregates};

use crate::matching::TrialMatchResult;
use crate::Error;

/// Feature combination of the linear and LLM aggregates:
///
/// `met_inc - 1[unmet_inc > 0] - 1[met_exc > 0] + R/100 + S/100`
///
/// Returns `(combined_ranking, exclusion_score)` with
/// `exclusion_score = -combined_ranking`.
pub fn combine(linear: &LinearAggregates, llm: &LlmAggregates) -> (f64, f64) {
    let indicator = |c: bool| if c { 1.0 } else { 0.0 };
    let combined = linear.pct_met_inclusion
        - indicator(linear.pct_unmet_inclusion > 0.0)
        - indicator(linear.pct_met_exclusion > 0.0)
        + llm.relevance / 100.0
        + llm.eligibility / 100.0;
    (combined, -combined)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    pub patient_id: String,
    pub nct_id: String,
    pub linear: LinearAggregates,
    pub llm: LlmAggregates,
    pub combined_ranking: f64,
    pub exclusion_score: f64,
}

impl TrialScore {
    pub fn new(result: &TrialMatchResult, llm: LlmAggregates) -> Self {
        let linear = linear_aggregate(result);
        let (combined_ranking, exclusion_score) = combine(&linear, &llm);
        TrialScore {
            patient_id: result.patient_id.clone(),
            nct_id: result.nct_id.clone(),
            linear,
            llm,
            combined_ranking,
            exclusion_score,
        }
    }
}

/// Scalar features a candidate list can be ordered by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    MetInc,
    NotInc,
    Excl,
    NotExcl,
    Relevance,
    Eligibility,
    Combination,
}

impl Feature {
    pub const ALL: [Feature; 7] = [
        Feature::MetInc,
        Feature::NotInc,
        Feature::Excl,
        Feature::NotExcl,
        Feature::Relevance,
        Feature::Eligibility,
        Feature::Combination,
    ];

    pub const LINEAR: [Feature; 4] = [Feature::MetInc, Feature::NotInc, Feature::Excl, Feature::NotExcl];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::MetInc => "met_inc",
            Feature::NotInc => "not_inc",
            Feature::Excl => "excl",
            Feature::NotExcl => "not_excl",
            Feature::Relevance => "relevance",
            Feature::Eligibility => "eligibility",
            Feature::Combination => "combination",
        }
    }

    pub fn raw(self, score: &TrialScore) -> f64 {
        match self {
            Feature::MetInc => score.linear.pct_met_inclusion,
            Feature::NotInc => score.linear.pct_unmet_inclusion,
            Feature::Excl => score.linear.pct_met_exclusion,
            Feature::NotExcl => score.linear.pct_unmet_exclusion,
            Feature::Relevance => score.llm.relevance,
            Feature::Eligibility => score.llm.eligibility,
            Feature::Combination => score.combined_ranking,
        }
    }

    /// Sign applied for the ranking task; the excluding task uses the opposite.
    pub fn ranking_sign(self) -> f64 {
        match self {
            Feature::NotInc | Feature::Excl => -1.0,
            _ => 1.0,
        }
    }

    pub fn ranking_score(self, score: &TrialScore) -> f64 {
        self.ranking_sign() * self.raw(score)
    }

    pub fn excluding_score(self, score: &TrialScore) -> f64 {
        -self.ranking_score(score)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Feature::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

/// Orders one patient's candidates by descending signed feature value,
/// ties by ascending trial id. Returns `(nct_id, signed value)`.
pub fn rank_scored(scores: &[TrialScore], feature: Feature) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = scores
        .iter()
        .map(|s| (s.nct_id.clone(), feature.ranking_score(s)))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn rank_trials(scores: &[TrialScore], feature: Feature) -> Vec<String> {
    rank_scored(scores, feature).into_iter().map(|(id, _)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(met: f64, unmet: f64, met_excl: f64) -> LinearAggregates {
        LinearAggregates {
            pct_met_inclusion: met,
            pct_unmet_inclusion: unmet,
            pct_met_exclusion: met_excl,
            ..LinearAggregates::default()
        }
    }

    fn llm(r: f64, s: f64) -> LlmAggregates {
        LlmAggregates::checked(r, s, String::new())
    }

    fn score(id: &str, lin: LinearAggregates, agg: LlmAggregates) -> TrialScore {
        let (combined_ranking, exclusion_score) = combine(&lin, &agg);
        TrialScore {
            patient_id: "p".into(),
            nct_id: id.into(),
            linear: lin,
            llm: agg,
            combined_ranking,
            exclusion_score,
        }
    }

    #[test]
    fn combination_fixtures() {
        assert_eq!(combine(&linear(1.0, 0.0, 0.0), &llm(80.0, 60.0)).0, 2.4);
        let (c, e) = combine(&linear(0.5, 0.25, 0.5), &llm(40.0, -20.0));
        assert_eq!(c, -1.3);
        assert_eq!(e, 1.3);
        assert_eq!(combine(&LinearAggregates::default(), &llm(0.0, 0.0)).0, 0.0);
    }

    #[test]
    fn ranking_by_combination_and_ties() {
        let a = score("NCT_B", linear(1.0, 0.0, 0.0), llm(80.0, 60.0));
        let b = score("NCT_A", linear(0.5, 0.25, 0.5), llm(40.0, -20.0));
        assert_eq!(rank_trials(&[b.clone(), a.clone()], Feature::Combination), ["NCT_B", "NCT_A"]);
        let c = score("NCT_C", linear(1.0, 0.0, 0.0), llm(80.0, 60.0));
        assert_eq!(rank_trials(&[c, a], Feature::Combination), ["NCT_B", "NCT_C"]);
    }

    #[test]
    fn exclusion_feature_ranks_with_negative_sign() {
        let clean = score("NCT_Z", linear(0.0, 0.0, 0.0), llm(0.0, 0.0));
        let excluded = score("NCT_A", linear(0.0, 0.0, 0.5), llm(0.0, 0.0));
        assert_eq!(rank_trials(&[excluded, clean], Feature::Excl), ["NCT_Z", "NCT_A"]);
    }

    #[test]
    fn unknown_feature() {
        assert_eq!("combination".parse::<Feature>().unwrap(), Feature::Combination);
        assert_eq!(
            "bogus".parse::<Feature>(),
            Err(Error::UnknownFeature("bogus".into()))
        );
    }

    #[test]
    fn indicator_step_is_exactly_one() {
        for eps in [1e-9, 0.1, 0.5, 1.0] {
            let with = combine(&linear(0.5, eps, 0.0), &llm(50.0, 10.0)).0;
            let without = combine(&linear(0.5, 0.0, 0.0), &llm(50.0, 10.0)).0;
            assert_eq!(without - with, 1.0);
        }
    }

    #[test]
    fn feature_names_round_trip() {
        for f in Feature::ALL {
            assert_eq!(f.as_str().parse::<Feature>().unwrap(), f);
        }
        let v = [Feature::MetInc];
        assert_eq!(v[0].ranking_sign(), 1.0);
    }
}
