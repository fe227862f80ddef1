use std::time::Duration;

use serde_json::{json, Value};
use trialmatch_core::gateway::ChatRequest;

use super::{Backend, BackendError};

pub const ENV_ENDPOINT: &str = "TRIALMATCH_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "TRIALMATCH_LLM_MODEL";
pub const ENV_KEY: &str = "TRIALMATCH_LLM_KEY";

/// Client for an OpenAI-compatible chat-completions endpoint.
pub struct RemoteBackend {
    url: String,
    key: String,
    agent: ureq::Agent,
}

impl RemoteBackend {
    /// `endpoint` may be the API base or the full chat-completions URL.
    pub fn new(endpoint: &str, key: &str, timeout: Duration) -> Result<Self, BackendError> {
        if endpoint.trim().is_empty() {
            return Err(BackendError::Config("LLM endpoint is empty".into()));
        }
        if key.trim().is_empty() {
            return Err(BackendError::Config("LLM credential is empty".into()));
        }
        let base = endpoint.trim().trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(RemoteBackend {
            url,
            key: key.to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        })
    }

    /// Reads endpoint, model and credential from the environment. Returns
    /// the backend and the model name.
    pub fn from_env(timeout: Duration) -> Result<(Self, String), BackendError> {
        let var = |name: &str| {
            std::env::var(name)
                .ok()
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| BackendError::Config(format!("environment variable {name} is not set")))
        };
        let endpoint = var(ENV_ENDPOINT)?;
        let model = var(ENV_MODEL)?;
        let key = var(ENV_KEY)?;
        Ok((Self::new(&endpoint, &key, timeout)?, model))
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

fn content(body: &Value) -> Option<String> {
    body.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

impl Backend for RemoteBackend {
    fn id(&self) -> &str {
        "remote"
    }

    fn call(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        let response = self
            .agent
            .post(&self.url)
            .set("Authorization", &format!("Bearer {}", self.key))
            .send_json(body);
        match response {
            Ok(resp) => {
                let value: Value = resp.into_json().map_err(|e| BackendError::Retryable {
                    status: None,
                    message: format!("unreadable response body: {e}"),
                })?;
                content(&value).ok_or_else(|| BackendError::Fatal {
                    status: 200,
                    message: "response has no choices[0].message.content".into(),
                })
            }
            Err(ureq::Error::Status(status, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                Err(BackendError::from_status(status, text))
            }
            Err(ureq::Error::Transport(t)) => Err(BackendError::Retryable {
                status: None,
                message: t.to_string(),
            }),
        }
    }
}
