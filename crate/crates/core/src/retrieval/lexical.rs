use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{tokenize, KeywordRanking, Retriever};
use crate::corpus::TrialRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.5, b: 0.75 }
    }
}

/// Okapi BM25 inverted index over trial documents. Frozen after build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalIndex {
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_length: f64,
    /// term -> (document ordinal, term frequency), ordinals ascending.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

impl LexicalIndex {
    /// Indexes title, conditions, interventions, brief summary and every
    /// criterion of each trial.
    pub fn build(corpus: &[TrialRecord], params: Bm25Params) -> Result<Self> {
        let docs: Vec<(&str, String)> = corpus.iter().map(|t| (t.nct_id.as_str(), t.document_text())).collect();
        Self::from_documents(docs.iter().map(|(id, text)| (*id, text.as_str())), params)
    }

    pub fn from_documents<'a>(docs: impl IntoIterator<Item = (&'a str, &'a str)>, params: Bm25Params) -> Result<Self> {
        if !(params.k1 >= 0.0 && (0.0..=1.0).contains(&params.b)) {
            return Err(Error::InvalidConfig(alloc::format!("BM25 parameters out of range: {params:?}")));
        }
        let mut doc_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for (ordinal, (id, text)) in docs.into_iter().enumerate() {
            let ordinal = ordinal as u32;
            let tokens = tokenize(text);
            doc_ids.push(id.to_string());
            doc_lengths.push(tokens.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((ordinal, count));
            }
        }
        if doc_ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_length = total as f64 / doc_ids.len() as f64;
        Ok(LexicalIndex {
            params,
            doc_ids,
            doc_lengths,
            avg_length,
            postings,
        })
    }

    pub fn document_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn average_length(&self) -> f64 {
        self.avg_length
    }

    pub fn document_length(&self, nct_id: &str) -> Option<u32> {
        let pos = self.doc_ids.iter().position(|d| d == nct_id)?;
        Some(self.doc_lengths[pos])
    }

    /// Number of distinct indexed terms.
    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Non-negative IDF variant `ln(1 + (N - n + 0.5) / (n + 0.5))`.
    fn idf(&self, doc_freq: usize) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = doc_freq as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    /// BM25 score of every document sharing at least one token with the query.
    pub fn score(&self, query: &str) -> Vec<(String, f64)> {
        let Bm25Params { k1, b } = self.params;
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for term in tokenize(query) {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for &(doc, tf) in list {
                let tf = f64::from(tf);
                let len = f64::from(self.doc_lengths[doc as usize]);
                let norm = 1.0 - b + b * len / self.avg_length;
                *acc.entry(doc).or_default() += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
        }
        acc.into_iter()
            .map(|(doc, s)| (self.doc_ids[doc as usize].clone(), s))
            .collect()
    }
}

/// Top-`cutoff` trials for one keyword by BM25; keywords with no known
/// token yield an empty ranking.
pub fn lexical_rank(keyword: &str, index: &LexicalIndex, keyword_index: usize, cutoff: usize) -> KeywordRanking {
    KeywordRanking::from_scores(Retriever::Lexical, keyword_index, index.score(keyword), cutoff)
}
