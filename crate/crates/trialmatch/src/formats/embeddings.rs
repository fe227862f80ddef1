use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use trialmatch_core::retrieval::EmbeddingProvider;

use super::read_text;
use crate::{Error, Result};

#[derive(Deserialize)]
struct VectorLine {
    id: String,
    vector: Vec<f64>,
}

/// Parses `embeddings.jsonl`: `{"id", "vector"}` per line, optionally
/// preceded by a `{"dim": h}` header. Every vector must have the same length
/// (the header's, when present) and finite components.
pub fn parse_embeddings(path: &Path, text: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut dim: Option<usize> = None;
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_err = |message: String| Error::Line {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let value: Value = serde_json::from_str(line).map_err(|e| line_err(e.to_string()))?;
        if out.is_empty() && dim.is_none() && value.get("dim").is_some() && value.get("vector").is_none() {
            let h = value["dim"]
                .as_u64()
                .filter(|&h| h > 0)
                .ok_or_else(|| line_err("dim must be a positive integer".into()))?;
            dim = Some(h as usize);
            continue;
        }
        let row: VectorLine = serde_json::from_value(value).map_err(|e| line_err(e.to_string()))?;
        let expected = *dim.get_or_insert(row.vector.len());
        if row.vector.len() != expected {
            return Err(line_err(format!("vector has {} components, expected {expected}", row.vector.len())));
        }
        if row.vector.iter().any(|x| !x.is_finite()) {
            return Err(line_err("vector has a non-finite component".into()));
        }
        if seen.insert(row.id.clone(), i + 1).is_some() {
            return Err(line_err(format!("duplicate id {}", row.id)));
        }
        out.push((row.id, row.vector));
    }
    Ok(out)
}

pub fn load_embeddings(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    parse_embeddings(path, &read_text(path)?)
}

/// File-backed lookup of precomputed keyword vectors. Keywords are matched
/// exactly first, then trimmed and lowercased.
#[derive(Debug, Clone)]
pub struct KeywordEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl KeywordEmbeddings {
    pub fn new(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let dim = entries.first().map(|(_, v)| v.len()).unwrap_or(0);
        let mut vectors = HashMap::with_capacity(entries.len() * 2);
        for (k, v) in entries {
            vectors.entry(k.trim().to_lowercase()).or_insert_with(|| v.clone());
            vectors.insert(k, v);
        }
        Ok(KeywordEmbeddings { dim, vectors })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(load_embeddings(path)?)
    }
}

impl EmbeddingProvider for KeywordEmbeddings {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> std::result::Result<Vec<f64>, String> {
        self.vectors
            .get(text)
            .or_else(|| self.vectors.get(&text.trim().to_lowercase()))
            .cloned()
            .ok_or_else(|| format!("no precomputed vector for {text:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("embeddings.jsonl")
    }

    #[test]
    fn header_fixes_the_dimension() {
        let text = "{\"dim\": 2}\n{\"id\":\"a\",\"vector\":[1,0]}\n{\"id\":\"b\",\"vector\":[0,1]}\n";
        assert_eq!(parse_embeddings(p(), text).unwrap().len(), 2);
        let bad = "{\"dim\": 3}\n{\"id\":\"a\",\"vector\":[1,0]}\n";
        assert!(matches!(parse_embeddings(p(), bad), Err(Error::Line { line: 2, .. })));
    }

    #[test]
    fn ragged_vectors_are_rejected() {
        let text = "{\"id\":\"a\",\"vector\":[1,0]}\n{\"id\":\"b\",\"vector\":[0,1,2]}\n";
        assert!(matches!(parse_embeddings(p(), text), Err(Error::Line { line: 2, .. })));
    }

    #[test]
    fn keyword_lookup_falls_back_to_lowercase() {
        let kw = KeywordEmbeddings::new(vec![("Lung Cancer".into(), vec![1.0, 2.0])]).unwrap();
        assert_eq!(kw.embed("lung cancer ").unwrap(), vec![1.0, 2.0]);
        assert!(kw.embed("asthma").is_err());
        assert_eq!(kw.dim(), 2);
    }
}
