//! Chat-completion contract shared by every stage that consults an LLM.
//!
//! Concrete backends (remote HTTP, fixture-replay mock) and the caching,
//! retrying gateway are implemented in the `trialmatch` crate.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    /// Request as issued by the pipeline: temperature is always 0.
    pub fn pipeline(model: &str, system_text: String, user_text: String, max_output_tokens: u32) -> Self {
        ChatRequest {
            model: model.to_owned(),
            system_text,
            user_text,
            temperature: 0.0,
            max_output_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub backend_id: String,
    pub cached: bool,
    pub latency_ms: f64,
    /// Backend attempts spent on this response (0 when served from cache).
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GatewayError {
    /// Missing endpoint, model or credential, or a malformed fixture table.
    Config(String),
    /// The retry budget ran out on transient failures.
    Transport { attempts: u32, message: String },
    /// Non-retryable rejection from the backend.
    Backend { status: u16, message: String },
    /// Pipeline requests must be deterministic.
    NonZeroTemperature(f64),
    EmptyText,
}

impl fmt::Display for GatewayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GatewayError::Config(m) => write!(f, "configuration error: {m}"),
            GatewayError::Transport { attempts, message } => {
                write!(f, "transport error after {attempts} attempts: {message}")
            }
            GatewayError::Backend { status, message } => write!(f, "backend returned {status}: {message}"),
            GatewayError::NonZeroTemperature(t) => write!(f, "temperature must be 0, got {t}"),
            GatewayError::EmptyText => f.write_str("request text is empty"),
        }
    }
}

impl core::error::Error for GatewayError {}

pub trait Completion {
    /// Model name stamped on every request built by the pipeline.
    fn model(&self) -> &str;

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

impl<T: Completion + ?Sized> Completion for &T {
    fn model(&self) -> &str {
        (**self).model()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

/// Which pipeline stage produced a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Keywords,
    Inclusion,
    Exclusion,
    Aggregation,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Keywords => "keywords",
            Task::Inclusion => "inclusion",
            Task::Exclusion => "exclusion",
            Task::Aggregation => "aggregation",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        match s.trim() {
            "keywords" => Some(Task::Keywords),
            "inclusion" => Some(Task::Inclusion),
            "exclusion" => Some(Task::Exclusion),
            "aggregation" => Some(Task::Aggregation),
            _ => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const TAG_OPEN: &str = "### request";
const TAG_CLOSE: &str = "### end request";

/// Structured header placed at the top of every pipeline prompt so that
/// replay fixtures can be keyed by (patient, trial, task) instead of the
/// full prompt text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestTag {
    pub task: Task,
    pub patient_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nct_id: Option<String>,
}

impl RequestTag {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(TAG_OPEN);
        out.push_str("\ntask: ");
        out.push_str(self.task.as_str());
        out.push_str("\npatient_id: ");
        out.push_str(&self.patient_id);
        if let Some(nct) = &self.nct_id {
            out.push_str("\nnct_id: ");
            out.push_str(nct);
        }
        out.push('\n');
        out.push_str(TAG_CLOSE);
        out.push('\n');
        out
    }

    /// Recovers the header from a prompt. Returns `None` when the prompt
    /// carries no well-formed header.
    pub fn extract(user_text: &str) -> Option<RequestTag> {
        let mut lines = user_text.lines();
        if lines.next()?.trim() != TAG_OPEN {
            return None;
        }
        let mut task = None;
        let mut patient_id = None;
        let mut nct_id = None;
        for line in lines {
            let line = line.trim();
            if line == TAG_CLOSE {
                return Some(RequestTag {
                    task: task?,
                    patient_id: patient_id?,
                    nct_id,
                });
            }
            let (key, value) = line.split_once(':')?;
            let value = value.trim().to_string();
            match key.trim() {
                "task" => task = Task::parse(&value),
                "patient_id" => patient_id = Some(value),
                "nct_id" => nct_id = Some(value),
                _ => {}
            }
        }
        None
    }
}
