use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::KeywordRanking;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Additive constant of reciprocal rank fusion.
    pub rrf_constant: f64,
    /// Entries ranked below this depth contribute nothing.
    pub per_keyword_cutoff: usize,
    pub candidate_count: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            rrf_constant: 20.0,
            per_keyword_cutoff: 1000,
            candidate_count: 500,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rrf_constant.is_finite() && self.rrf_constant > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "rrf constant must be positive, got {}",
                self.rrf_constant
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub patient_id: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Fused scores, descending, ties by trial id.
    pub scored: Vec<(String, f64)>,
    /// Set when the dense side was unavailable and only lexical rankings were fused.
    #[serde(default)]
    pub lexical_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Keyword-decayed reciprocal rank fusion.
///
/// Each (retriever, keyword `i`) ranking adds `1 / (i * (rank + C))` to every
/// trial it lists within the cutoff; trials missing from a ranking get
/// nothing from it. The output keeps the `candidate_count` best trials.
pub fn fuse(patient_id: &str, rankings: &[KeywordRanking], config: &FusionConfig) -> Result<RetrievalResult> {
    config.validate()?;
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for ranking in rankings {
        if ranking.keyword_index == 0 {
            return Err(Error::InvalidConfig("keyword indices are 1-based".into()));
        }
        let decay = ranking.keyword_index as f64;
        for (pos, (nct_id, _)) in ranking
            .ranked_trials
            .iter()
            .take(config.per_keyword_cutoff)
            .enumerate()
        {
            let rank = (pos + 1) as f64;
            *scores.entry(nct_id.as_str()).or_default() += 1.0 / (decay * (rank + config.rrf_constant));
        }
    }
    let mut scored: Vec<(String, f64)> = scores.into_iter().map(|(id, s)| (id.to_string(), s)).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(config.candidate_count);
    Ok(RetrievalResult {
        patient_id: patient_id.to_string(),
        keywords: Vec::new(),
        scored,
        lexical_only: false,
        warning: None,
    })
}
