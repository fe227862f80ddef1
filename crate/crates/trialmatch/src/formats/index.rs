use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use trialmatch_core::retrieval::{DenseIndex, EmbeddingProvider, HashEmbedder, LexicalIndex};

use super::{read_json, write_json, KeywordEmbeddings};
use crate::{Error, Result};

const LEXICAL_FORMAT: &str = "trialmatch-lexical-index";
const DENSE_FORMAT: &str = "trialmatch-dense-index";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize, Deserialize)]
struct LexicalBody {
    index: LexicalIndex,
}

fn check<T>(path: &Path, env: Envelope<T>, format: &str) -> Result<T> {
    if env.format != format {
        return Err(Error::format(path, format!("expected a {format} file, found {}", env.format)));
    }
    if env.version != VERSION {
        return Err(Error::format(
            path,
            format!("unsupported {format} version {} (this build reads {VERSION})", env.version),
        ));
    }
    Ok(env.body)
}

fn load<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    check(path, read_json::<Envelope<T>>(path)?, format)
}

pub fn save_lexical(path: &Path, index: &LexicalIndex) -> Result<()> {
    write_json(
        path,
        &Envelope {
            format: LEXICAL_FORMAT.into(),
            version: VERSION,
            body: LexicalBody { index: index.clone() },
        },
    )
}

pub fn load_lexical(path: &Path) -> Result<LexicalIndex> {
    load::<LexicalBody>(path, LEXICAL_FORMAT).map(|b| b.index)
}

/// How keywords are embedded at query time for a saved dense index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenseProvider {
    Hash { dim: usize, seed: u64 },
    File { keyword_embeddings: PathBuf },
}

impl DenseProvider {
    pub fn open(&self) -> Result<Box<dyn EmbeddingProvider + Send + Sync>> {
        Ok(match self {
            DenseProvider::Hash { dim, seed } => Box::new(HashEmbedder::new(*dim, *seed)),
            DenseProvider::File { keyword_embeddings } => Box::new(KeywordEmbeddings::load(keyword_embeddings)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSnapshot {
    pub provider: DenseProvider,
    pub index: DenseIndex,
}

pub fn save_dense(path: &Path, snapshot: &DenseSnapshot) -> Result<()> {
    write_json(
        path,
        &Envelope {
            format: DENSE_FORMAT.into(),
            version: VERSION,
            body: snapshot.clone(),
        },
    )
}

pub fn load_dense(path: &Path) -> Result<DenseSnapshot> {
    load(path, DENSE_FORMAT)
}
