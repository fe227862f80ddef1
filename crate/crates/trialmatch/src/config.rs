//! Run configuration, read from TOML or JSON and overridable from the CLI.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use trialmatch_core::eval::EvalConfig;
use trialmatch_core::matching::MatchOptions;
use trialmatch_core::ranking::Feature;
use trialmatch_core::retrieval::{Bm25Params, FusionConfig, Similarity};

use crate::formats::read_text;
use crate::gateway::{
    Backend, BackendError, Gateway, GatewayOptions, MockBackend, RemoteBackend, ResponseCache,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Remote,
    Mock,
}

/// Source of trial vectors for dense retrieval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseMode {
    /// Feature-hashing pseudo-embeddings, seeded by `seed`.
    #[default]
    Hash,
    /// Precomputed vectors from `embeddings` and `keyword_embeddings`.
    File,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// When set, every request must carry `Authorization: Bearer <token>`.
    pub token: Option<String>,
    /// Defaults to `<out_dir>/decisions.jsonl`.
    pub decisions_log: Option<PathBuf>,
    /// Defaults to `<out_dir>/assignment.json`.
    pub assignment: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1:8080".into(),
            token: None,
            decisions_log: None,
            assignment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub cohort: String,
    pub trials: Option<PathBuf>,
    pub patients: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    /// `trec` (grade 1 = excluded) or `sigir` (grade 1 = potential).
    pub qrels_vocabulary: String,
    pub embeddings: Option<PathBuf>,
    pub keyword_embeddings: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Candidates kept per patient after retrieval.
    pub top: usize,
    pub feature: Feature,
    pub backend: BackendKind,
    /// Fixture file for the mock backend.
    pub fixtures: Option<PathBuf>,
    pub seed: u64,
    pub parallelism: usize,
    /// Response cache on/off. Unset: on for remote, off for mock.
    pub cache: Option<bool>,
    /// Defaults to `<out_dir>/llm_cache.jsonl`.
    pub cache_path: Option<PathBuf>,
    pub request_timeout_secs: u64,
    pub dense: DenseMode,
    pub hash_dim: usize,
    pub similarity: Similarity,
    pub bm25: Bm25Params,
    pub fusion: FusionConfig,
    pub matching: MatchOptions,
    pub gateway: GatewayOptions,
    pub eval: EvalConfig,
    pub server: ServerConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            cohort: "default".into(),
            trials: None,
            patients: None,
            qrels: None,
            qrels_vocabulary: "trec".into(),
            embeddings: None,
            keyword_embeddings: None,
            out_dir: PathBuf::from("out"),
            top: 500,
            feature: Feature::Combination,
            backend: BackendKind::Remote,
            fixtures: None,
            seed: 0,
            parallelism: 8,
            cache: None,
            cache_path: None,
            request_timeout_secs: 120,
            dense: DenseMode::Hash,
            hash_dim: 256,
            similarity: Similarity::InnerProduct,
            bm25: Bm25Params::default(),
            fusion: FusionConfig::default(),
            matching: MatchOptions::default(),
            gateway: GatewayOptions::default(),
            eval: EvalConfig::default(),
            server: ServerConfig::default(),
        }
    }
}

impl Config {
    /// Parses `.json` files as JSON and anything else as TOML. Relative
    /// paths inside the file are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg: Config = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?
        };
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.trials,
            &mut self.patients,
            &mut self.qrels,
            &mut self.embeddings,
            &mut self.keyword_embeddings,
            &mut self.fixtures,
            &mut self.cache_path,
            &mut self.server.decisions_log,
            &mut self.server.assignment,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    pub fn fusion(&self) -> FusionConfig {
        FusionConfig {
            candidate_count: self.top,
            ..self.fusion
        }
    }

    pub fn input<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("--{flag} is required for this command")))
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn decisions_log(&self) -> PathBuf {
        self.server
            .decisions_log
            .clone()
            .unwrap_or_else(|| self.artifact("decisions.jsonl"))
    }

    pub fn assignment_path(&self) -> PathBuf {
        self.server
            .assignment
            .clone()
            .unwrap_or_else(|| self.artifact("assignment.json"))
    }

    /// Builds the configured gateway: backend, model name and cache.
    pub fn gateway(&self) -> Result<Gateway> {
        let (backend, model): (Box<dyn Backend>, String) = match self.backend {
            BackendKind::Mock => {
                let mut mock = MockBackend::new();
                if let Some(f) = &self.fixtures {
                    mock.register(f)?;
                }
                (Box::new(mock), "mock-model".into())
            }
            BackendKind::Remote => {
                let (remote, model) = RemoteBackend::from_env(Duration::from_secs(self.request_timeout_secs))
                    .map_err(|e| match e {
                        BackendError::Config(m) => Error::Config(m),
                        other => Error::Config(format!("{other:?}")),
                    })?;
                (Box::new(remote), model)
            }
        };
        let mut gw = Gateway::new(&model, backend, self.gateway.clone());
        let cache_on = self.cache.unwrap_or(self.backend == BackendKind::Remote);
        if cache_on {
            let path = self.cache_path.clone().unwrap_or_else(|| self.artifact("llm_cache.jsonl"));
            let cache = ResponseCache::open(&path).map_err(|e| Error::io(&path, e))?;
            if cache.skipped_lines() > 0 {
                eprintln!(
                    "warning: skipped {} unreadable line(s) in {}",
                    cache.skipped_lines(),
                    path.display()
                );
            }
            gw = gw.with_cache(cache);
        }
        Ok(gw)
    }
}
