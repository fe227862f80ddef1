use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{tokenize, KeywordRanking, Retriever};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    #[default]
    InnerProduct,
    Cosine,
}

/// Encodes query keywords into the same space as the indexed trials.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> core::result::Result<Vec<f64>, String>;
}

/// Exact-scan dense index of per-trial vectors sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseIndex {
    dim: usize,
    similarity: Similarity,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl DenseIndex {
    pub fn new(entries: Vec<(String, Vec<f64>)>, similarity: Similarity) -> Result<Self> {
        let dim = match entries.first() {
            Some((_, v)) => v.len(),
            None => return Err(Error::EmptyCorpus),
        };
        let mut ids = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        for (id, v) in entries {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidRecord(alloc::format!("non-finite embedding for {id}")));
            }
            ids.push(id);
            vectors.push(v);
        }
        Ok(DenseIndex {
            dim,
            similarity,
            ids,
            vectors,
        })
    }

    /// Embeds every `(id, text)` document with `provider`.
    pub fn encode<'a>(
        docs: impl IntoIterator<Item = (&'a str, &'a str)>,
        provider: &dyn EmbeddingProvider,
        similarity: Similarity,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (id, text) in docs {
            let v = provider.embed(text).map_err(|message| Error::Embedding {
                keyword: id.to_string(),
                message,
            })?;
            entries.push((id.to_string(), v));
        }
        Self::new(entries, similarity)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.vectors.iter().map(Vec::as_slice))
    }

    pub fn search(&self, query: &[f64]) -> Result<Vec<(String, f64)>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let qnorm = norm(query);
        Ok(self
            .ids
            .iter()
            .zip(&self.vectors)
            .map(|(id, v)| {
                let dot = dot(query, v);
                let s = match self.similarity {
                    Similarity::InnerProduct => dot,
                    Similarity::Cosine => {
                        let denom = qnorm * norm(v);
                        if denom > 0.0 {
                            dot / denom
                        } else {
                            0.0
                        }
                    }
                };
                (id.clone(), s)
            })
            .collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Top-`cutoff` trials for one keyword by vector similarity.
pub fn dense_rank(
    keyword: &str,
    index: &DenseIndex,
    provider: &dyn EmbeddingProvider,
    keyword_index: usize,
    cutoff: usize,
) -> Result<KeywordRanking> {
    let query = provider.embed(keyword).map_err(|message| Error::Embedding {
        keyword: keyword.to_string(),
        message,
    })?;
    let scored = index.search(&query)?;
    Ok(KeywordRanking::from_scores(Retriever::Dense, keyword_index, scored, cutoff))
}

/// Deterministic feature-hashing embedder: each token is hashed into a
/// signed bucket and the bag is L2-normalized. Texts sharing tokens get
/// positive inner product, which is enough to exercise the dense path
/// without a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashEmbedder { dim, seed }
    }

    fn hash(&self, token: &str) -> u64 {
        // FNV-1a, seeded through the offset basis.
        let mut h = 0xcbf2_9ce4_8422_2325u64 ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for b in token.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> core::result::Result<Vec<f64>, String> {
        if self.dim == 0 {
            return Err("embedding dimension is zero".into());
        }
        let mut v = vec![0.0; self.dim];
        for token in tokenize(text) {
            let h = self.hash(&token);
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let n = norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        Ok(v)
    }
}
