use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use trialmatch_core::gateway::{ChatRequest, RequestTag, Task};

use super::{cache_key, Backend, BackendError};
use crate::formats::{parse_jsonl, read_text};
use crate::{Error, Result};

/// Every unmatched request is answered with text starting with this.
pub const MOCK_REFUSAL_PREFIX: &str = "MOCK_REFUSAL";

/// Which requests a fixture answers. Exactly one of: the cache key, the
/// exact user text, or the (task, patient, trial) header of the prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matcher {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "side")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nct_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureError {
    pub status: u16,
    #[serde(default)]
    pub message: String,
}

/// One line of a fixture file: a matcher and either a response text or a
/// scripted backend error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    #[serde(rename = "match")]
    pub matcher: Matcher,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<FixtureError>,
}

impl Fixture {
    pub fn tagged(task: Task, patient_id: &str, nct_id: Option<&str>, response: String) -> Self {
        Fixture {
            matcher: Matcher {
                task: Some(task),
                patient_id: Some(patient_id.to_string()),
                nct_id: nct_id.map(str::to_string),
                ..Matcher::default()
            },
            response: Some(response),
            error: None,
        }
    }
}

type Reply = std::result::Result<String, FixtureError>;

/// Deterministic replay backend.
#[derive(Debug, Default)]
pub struct MockBackend {
    by_key: HashMap<String, Reply>,
    by_text: HashMap<String, Reply>,
    by_tag: HashMap<RequestTag, Reply>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_key(&mut self, key: &str, response: &str) {
        self.by_key.insert(key.to_string(), Ok(response.to_string()));
    }

    pub fn insert(&mut self, fixture: Fixture) -> std::result::Result<(), String> {
        let reply = match (fixture.response, fixture.error) {
            (Some(r), None) => Ok(r),
            (None, Some(e)) => Err(e),
            _ => return Err("fixture needs exactly one of response, error".into()),
        };
        let m = fixture.matcher;
        let tag_fields = m.task.is_some() || m.patient_id.is_some() || m.nct_id.is_some();
        match (m.key, m.user_text, tag_fields) {
            (Some(k), None, false) => {
                self.by_key.insert(k, reply);
            }
            (None, Some(t), false) => {
                self.by_text.insert(t, reply);
            }
            (None, None, true) => {
                let (Some(task), Some(patient_id)) = (m.task, m.patient_id) else {
                    return Err("header matcher needs task and patient_id".into());
                };
                self.by_tag.insert(
                    RequestTag {
                        task,
                        patient_id,
                        nct_id: m.nct_id,
                    },
                    reply,
                );
            }
            _ => return Err("matcher needs exactly one of key, user_text, or task/patient_id/nct_id".into()),
        }
        Ok(())
    }

    /// Loads a JSONL fixture file and returns how many fixtures it held.
    pub fn register(&mut self, path: &Path) -> Result<usize> {
        let text = read_text(path)?;
        self.register_text(path, &text)
    }

    pub fn register_text(&mut self, path: &Path, text: &str) -> Result<usize> {
        let fixtures: Vec<Fixture> = parse_jsonl(path, text)?;
        let n = fixtures.len();
        for f in fixtures {
            self.insert(f).map_err(|m| Error::format(path, m))?;
        }
        Ok(n)
    }

    pub fn len(&self) -> usize {
        self.by_key.len() + self.by_text.len() + self.by_tag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lookup(&self, request: &ChatRequest) -> Option<&Reply> {
        self.by_key
            .get(&cache_key(request))
            .or_else(|| self.by_text.get(&request.user_text))
            .or_else(|| RequestTag::extract(&request.user_text).and_then(|t| self.by_tag.get(&t)))
    }
}

impl Backend for MockBackend {
    fn id(&self) -> &str {
        "mock"
    }

    fn call(&self, request: &ChatRequest) -> std::result::Result<String, BackendError> {
        match self.lookup(request) {
            Some(Ok(text)) => Ok(text.clone()),
            Some(Err(e)) => Err(BackendError::from_status(e.status, e.message.clone())),
            None => Ok(format!(
                "{MOCK_REFUSAL_PREFIX}: no fixture matches request {}",
                &cache_key(request)[..16]
            )),
        }
    }
}
