//! First-stage retrieval: LLM keywords, per-keyword lexical and dense
//! rankings, and keyword-decayed reciprocal rank fusion.

mod dense;
mod fusion;
mod keywords;
mod lexical;
mod tokenize;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub(crate) use dense::dot as dense_dot;
pub use dense::{dense_rank, DenseIndex, EmbeddingProvider, HashEmbedder, Similarity};
pub use fusion::{fuse, FusionConfig, RetrievalResult};
pub use keywords::{
    build_keyword_prompt, generate_keywords, parse_keyword_response, KeywordQuery, MAX_KEYWORDS,
};
pub use lexical::{lexical_rank, Bm25Params, LexicalIndex};
pub use tokenize::tokenize;

use crate::corpus::PatientNote;
use crate::gateway::Completion;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retriever {
    Lexical,
    Dense,
}

impl fmt::Display for Retriever {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Retriever::Lexical => "lexical",
            Retriever::Dense => "dense",
        })
    }
}

/// One retriever's ranked list for one keyword. Rank of entry `k` is `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordRanking {
    pub retriever: Retriever,
    /// 1-based importance position of the keyword.
    pub keyword_index: usize,
    pub ranked_trials: Vec<(String, f64)>,
}

impl KeywordRanking {
    /// Sorts by descending native score, ties by ascending trial id, and
    /// keeps the first `cutoff` entries.
    pub(crate) fn from_scores(
        retriever: Retriever,
        keyword_index: usize,
        mut scored: Vec<(String, f64)>,
        cutoff: usize,
    ) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(cutoff);
        KeywordRanking {
            retriever,
            keyword_index,
            ranked_trials: scored,
        }
    }
}

/// Everything needed to run first-stage retrieval for a patient.
pub struct Retrieval<'a> {
    pub lexical: &'a LexicalIndex,
    pub dense: Option<(&'a DenseIndex, &'a dyn EmbeddingProvider)>,
    pub config: FusionConfig,
}

impl Retrieval<'_> {
    /// Ranks the corpus for an already generated keyword list.
    ///
    /// If the embedding provider fails on any keyword the dense side is
    /// dropped for this patient and the result is flagged `lexical_only`.
    pub fn run(&self, query: &KeywordQuery) -> Result<RetrievalResult> {
        let cutoff = self.config.per_keyword_cutoff;
        let mut rankings = Vec::with_capacity(query.keywords.len() * 2);
        for (i, kw) in query.keywords.iter().enumerate() {
            rankings.push(lexical_rank(kw, self.lexical, i + 1, cutoff));
        }
        let mut warning = None;
        if let Some((index, provider)) = self.dense {
            let mut dense = Vec::with_capacity(query.keywords.len());
            for (i, kw) in query.keywords.iter().enumerate() {
                match dense_rank(kw, index, provider, i + 1, cutoff) {
                    Ok(r) => dense.push(r),
                    Err(e) => {
                        warning = Some(alloc::format!("dense retrieval skipped: {e}"));
                        dense.clear();
                        break;
                    }
                }
            }
            rankings.extend(dense);
        }
        let mut result = fuse(&query.patient_id, &rankings, &self.config)?;
        result.keywords = query.keywords.clone();
        result.lexical_only = self.dense.is_none() || warning.is_some();
        result.warning = warning;
        Ok(result)
    }

    pub fn retrieve<G: Completion + ?Sized>(&self, note: &PatientNote, gateway: &G) -> Result<RetrievalResult> {
        let query = generate_keywords(note, gateway)?;
        self.run(&query)
    }
}
