//! The LLM gateway: one [`Completion`] implementation that fronts a remote
//! or mock backend with a persistent response cache, bounded in-flight
//! concurrency, optional token-bucket rate limiting and retries with
//! jittered exponential backoff.

mod cache;
mod limit;
mod mock;
mod remote;

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trialmatch_core::gateway::{ChatRequest, ChatResponse, Completion, GatewayError};

pub use cache::ResponseCache;
pub use limit::{InFlight, TokenBucket};
pub use mock::{Fixture, FixtureError, Matcher, MockBackend, MOCK_REFUSAL_PREFIX};
pub use remote::{RemoteBackend, ENV_ENDPOINT, ENV_KEY, ENV_MODEL};

/// Failure of a single backend attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendError {
    /// Worth another attempt: rate limiting, server errors, IO.
    Retryable { status: Option<u16>, message: String },
    Fatal { status: u16, message: String },
    Config(String),
}

impl BackendError {
    pub fn from_status(status: u16, message: String) -> Self {
        if status == 429 || status >= 500 {
            BackendError::Retryable {
                status: Some(status),
                message,
            }
        } else {
            BackendError::Fatal { status, message }
        }
    }
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn call(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayOptions {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
    pub max_in_flight: usize,
    /// 0 disables rate limiting.
    pub requests_per_second: f64,
    pub burst: u32,
}

impl Default for GatewayOptions {
    fn default() -> Self {
        GatewayOptions {
            max_attempts: 5,
            backoff_base_ms: 500,
            backoff_cap_ms: 30_000,
            max_in_flight: 8,
            requests_per_second: 0.0,
            burst: 1,
        }
    }
}

/// Content hash used as the cache key: SHA-256 over the model, both texts
/// and the temperature.
pub fn cache_key(request: &ChatRequest) -> String {
    let material = serde_json::to_string(&(
        &request.model,
        &request.system_text,
        &request.user_text,
        request.temperature,
    ))
    .expect("strings and floats serialize");
    hex::encode(Sha256::digest(material.as_bytes()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GatewayStats {
    pub requests: u64,
    pub cache_hits: u64,
    /// Backend attempts, retries included.
    pub backend_attempts: u64,
}

pub struct Gateway {
    model: String,
    backend: Box<dyn Backend>,
    cache: Option<ResponseCache>,
    options: GatewayOptions,
    in_flight: InFlight,
    bucket: Option<TokenBucket>,
    requests: AtomicU64,
    cache_hits: AtomicU64,
    attempts: AtomicU64,
}

impl Gateway {
    pub fn new(model: &str, backend: Box<dyn Backend>, options: GatewayOptions) -> Self {
        let bucket = (options.requests_per_second > 0.0)
            .then(|| TokenBucket::new(options.requests_per_second, options.burst.max(1)));
        Gateway {
            model: model.to_string(),
            backend,
            cache: None,
            in_flight: InFlight::new(options.max_in_flight.max(1)),
            bucket,
            options,
            requests: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
            attempts: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            requests: self.requests.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            backend_attempts: self.attempts.load(Ordering::Relaxed),
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let exp = self
            .options
            .backoff_base_ms
            .saturating_mul(1u64 << (attempt - 1).min(20))
            .min(self.options.backoff_cap_ms);
        // Jitter in [exp/2, exp].
        let ms = if exp < 2 { exp } else { rand::thread_rng().gen_range(exp / 2..=exp) };
        Duration::from_millis(ms)
    }
}

impl Completion for Gateway {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        if request.temperature != 0.0 {
            return Err(GatewayError::NonZeroTemperature(request.temperature));
        }
        if request.user_text.trim().is_empty() || request.system_text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        self.requests.fetch_add(1, Ordering::Relaxed);
        let started = Instant::now();
        let key = cache_key(request);
        if let Some(text) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(ChatResponse {
                text,
                backend_id: self.backend.id().to_string(),
                cached: true,
                latency_ms: started.elapsed().as_secs_f64() * 1e3,
                attempts: 0,
            });
        }

        let _permit = self.in_flight.acquire();
        let max_attempts = self.options.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            if let Some(bucket) = &self.bucket {
                bucket.acquire();
            }
            self.attempts.fetch_add(1, Ordering::Relaxed);
            match self.backend.call(request) {
                Ok(text) => {
                    if let Some(cache) = &self.cache {
                        cache
                            .put(&key, &text)
                            .map_err(|e| GatewayError::Config(format!("cache write failed: {e}")))?;
                    }
                    return Ok(ChatResponse {
                        text,
                        backend_id: self.backend.id().to_string(),
                        cached: false,
                        latency_ms: started.elapsed().as_secs_f64() * 1e3,
                        attempts: attempt,
                    });
                }
                Err(BackendError::Retryable { message, .. }) => {
                    if attempt >= max_attempts {
                        return Err(GatewayError::Transport {
                            attempts: attempt,
                            message,
                        });
                    }
                    thread::sleep(self.backoff(attempt));
                }
                Err(BackendError::Fatal { status, message }) => {
                    return Err(GatewayError::Backend { status, message });
                }
                Err(BackendError::Config(m)) => return Err(GatewayError::Config(m)),
            }
        }
    }
}
