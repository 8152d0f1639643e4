//! Uniform access to model backends with response caching, retries,
//! rate limiting and token/cost accounting.

mod backends;
mod cache;
mod cost;
mod http;
mod limit;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use backends::{LiveStubBackend, OracleBackend, RandomBackend, ReplayBackend};
pub use cache::{cache_key, cache_key_bytes, CachedReply, ResponseCache};
pub use cost::{
    estimate_cost, estimate_image_tokens, estimate_text_tokens, CostEstimate, Pricing, PricingTable,
    CHARS_PER_TOKEN, IMAGE_TILE_PX, LARGE_IMAGE_TOKENS, SMALL_IMAGE_TOKENS,
};
pub use http::{request_body, HttpBackend};
pub use limit::Limiter;

use crate::error::{Error, Result};
use crate::promptkit::Prompt;
use crate::synthgen::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Oracle,
    Random,
    Replay,
    LiveStub,
    Http,
}

impl BackendKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(BackendKind::Oracle),
            "random" => Ok(BackendKind::Random),
            "replay" => Ok(BackendKind::Replay),
            "live_stub" | "live-stub" => Ok(BackendKind::LiveStub),
            "http" => Ok(BackendKind::Http),
            _ => Err(Error::Config(format!(
                "unknown backend {s} (expected oracle, random, replay, live_stub or http)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub model: String,
    pub backend: BackendKind,
    pub temperature: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub requests_per_second: Option<f64>,
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub timeout_s: f64,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Seed of the random backend. The runner derives one from the
    /// master seed when unset.
    pub random_seed: Option<u64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            model: "model".into(),
            backend: BackendKind::Oracle,
            temperature: 0.1,
            max_retries: 3,
            max_in_flight: 4,
            requests_per_second: None,
            endpoint: None,
            api_key_env: None,
            timeout_s: 120.0,
            backoff_ms: 500,
            random_seed: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(0.0..=1.0).contains(&self.temperature) {
            errs.push(format!("model {}: temperature {} outside [0, 1]", self.model, self.temperature));
        }
        if self.model.trim().is_empty() {
            errs.push("model name is empty".into());
        }
        if self.max_in_flight == 0 {
            errs.push(format!("model {}: max_in_flight must be at least 1", self.model));
        }
        if self.backend == BackendKind::Http && self.endpoint.is_none() {
            errs.push(format!("model {}: http backend needs an endpoint", self.model));
        }
        if !(self.timeout_s > 0.0) {
            errs.push(format!("model {}: timeout_s must be positive", self.model));
        }
        errs
    }
}

/// A backend's answer before caching and accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub text: String,
    /// Exact prompt token count when the backend reports one.
    pub prompt_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallError {
    /// Worth retrying: transport failures, throttling, server errors.
    Transient(String),
    ContextLength(String),
    Auth(String),
    Fatal(String),
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, prompt: &Prompt, config: &ModelConfig) -> Result<Reply, CallError>;
    /// Replay backends never count as being called.
    fn is_replay(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// The prompt did not fit the model's context window.
    ContextLength,
    /// Retries exhausted on transient errors.
    Transport,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseError {
    pub kind: FailureKind,
    pub message: String,
}

/// Exactly one of `text` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub text: Option<String>,
    pub error: Option<ResponseError>,
    pub prompt_tokens: u64,
    pub image_count: usize,
    pub latency_ms: u64,
    pub backend: String,
    pub cache_hit: bool,
}

pub fn build_backend(config: &ModelConfig, answers: Option<Arc<HashMap<String, Label>>>) -> Result<Box<dyn Backend>> {
    Ok(match config.backend {
        BackendKind::Oracle => Box::new(OracleBackend::new(
            answers.ok_or_else(|| Error::Config("oracle backend needs an answer key".into()))?,
        )),
        BackendKind::Random => Box::new(RandomBackend::new(config.random_seed.unwrap_or(0))),
        BackendKind::Replay => Box::new(ReplayBackend),
        BackendKind::LiveStub => Box::new(LiveStubBackend),
        BackendKind::Http => Box::new(HttpBackend::from_config(config)?),
    })
}

pub struct Gateway {
    pub config: ModelConfig,
    backend: Box<dyn Backend>,
    cache: ResponseCache,
    limiter: Limiter,
    calls: AtomicU64,
}

impl Gateway {
    pub fn new(config: ModelConfig, backend: Box<dyn Backend>, cache: ResponseCache) -> Result<Self> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(Error::ConfigList(errs));
        }
        let limiter = Limiter::new(config.max_in_flight, config.requests_per_second);
        Ok(Self {
            config,
            backend,
            cache,
            limiter,
            calls: AtomicU64::new(0),
        })
    }

    /// Backend invocations so far (cache hits and replay lookups excluded).
    pub fn backend_calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    fn estimate_tokens(prompt: &Prompt) -> u64 {
        estimate_text_tokens(prompt.text_chars())
            + prompt
                .image_parts()
                .map(|i| estimate_image_tokens(i.width_px, i.height_px))
                .sum::<u64>()
    }

    /// Answers `prompt`, from cache when possible. Only authentication
    /// failures are returned as errors; every other failure is reported in
    /// the response.
    pub fn invoke(&self, prompt: &Prompt) -> Result<ModelResponse> {
        let key = cache_key(prompt, &self.config.model, self.config.temperature);
        let lock = self.cache.key_lock(&key);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let estimate = Self::estimate_tokens(prompt);
        let images = prompt.image_parts().count();
        let respond = |text: Option<String>, error: Option<ResponseError>, tokens: Option<u64>, ms: u64, hit: bool| {
            ModelResponse {
                text,
                error,
                prompt_tokens: tokens.unwrap_or(estimate),
                image_count: images,
                latency_ms: ms,
                backend: self.backend.id().to_string(),
                cache_hit: hit,
            }
        };
        if let Some(c) = self.cache.get(&key)? {
            let err = c.context_length_error.map(|m| ResponseError {
                kind: FailureKind::ContextLength,
                message: m,
            });
            let text = if err.is_some() { None } else { c.text };
            return Ok(respond(text, err, c.prompt_tokens, 0, true));
        }
        if self.backend.is_replay() {
            return Ok(respond(
                None,
                Some(ResponseError {
                    kind: FailureKind::Backend,
                    message: format!("replay cache miss for {}", prompt.instance_id),
                }),
                None,
                0,
                false,
            ));
        }
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let ms = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(ms));
            }
            let started = Instant::now();
            let result = {
                let _permit = self.limiter.acquire();
                self.calls.fetch_add(1, Ordering::SeqCst);
                self.backend.complete(prompt, &self.config)
            };
            let ms = started.elapsed().as_millis() as u64;
            match result {
                Ok(r) => {
                    self.cache.put(
                        &key,
                        &CachedReply {
                            text: Some(r.text.clone()),
                            context_length_error: None,
                            prompt_tokens: r.prompt_tokens,
                            backend: self.backend.id().to_string(),
                        },
                    )?;
                    return Ok(respond(Some(r.text), None, r.prompt_tokens, ms, false));
                }
                Err(CallError::Transient(m)) => last = m,
                Err(CallError::ContextLength(m)) => {
                    self.cache.put(
                        &key,
                        &CachedReply {
                            text: None,
                            context_length_error: Some(m.clone()),
                            prompt_tokens: None,
                            backend: self.backend.id().to_string(),
                        },
                    )?;
                    let err = ResponseError {
                        kind: FailureKind::ContextLength,
                        message: format!("{} prompt exceeds the context window: {m}", prompt.modality),
                    };
                    return Ok(respond(None, Some(err), None, ms, false));
                }
                Err(CallError::Auth(m)) => {
                    return Err(Error::Config(format!(
                        "backend {} rejected the credentials: {m}",
                        self.backend.id()
                    )))
                }
                Err(CallError::Fatal(m)) => {
                    let err = ResponseError {
                        kind: FailureKind::Backend,
                        message: m,
                    };
                    return Ok(respond(None, Some(err), None, ms, false));
                }
            }
        }
        Ok(respond(
            None,
            Some(ResponseError {
                kind: FailureKind::Transport,
                message: format!("gave up after {} attempts: {last}", self.config.max_retries + 1),
            }),
            None,
            0,
            false,
        ))
    }
}

#[cfg(test)]
mod tests;
