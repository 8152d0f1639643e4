//! Chat-completions style HTTP backend with inline base64 PNG parts.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::promptkit::{Part, Prompt};

use super::{Backend, CallError, ModelConfig, Reply};

/// Request JSON: one user message whose content interleaves text and
/// `image_url` parts carrying data URLs.
pub fn request_body(prompt: &Prompt, config: &ModelConfig) -> Value {
    let content: Vec<Value> = prompt
        .parts
        .iter()
        .map(|p| match p {
            Part::Text(t) => json!({"type": "text", "text": t}),
            Part::Image(i) => json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{}", STANDARD.encode(i.png.as_slice()))}
            }),
        })
        .collect();
    json!({
        "model": config.model,
        "temperature": config.temperature,
        "messages": [{"role": "user", "content": content}],
    })
}

pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    api_key: String,
}

impl HttpBackend {
    /// Reads the API key from the environment variable named in the config.
    pub fn from_config(config: &ModelConfig) -> Result<Self> {
        let endpoint = config
            .endpoint
            .as_deref()
            .ok_or_else(|| Error::Config(format!("model {} needs an endpoint", config.model)))?;
        let var = config.api_key_env.as_deref().unwrap_or("PLOTBENCH_API_KEY");
        let api_key = std::env::var(var)
            .map_err(|_| Error::Config(format!("environment variable {var} with the API key is not set")))?;
        Ok(Self::new(endpoint, api_key, Duration::from_secs_f64(config.timeout_s.max(0.001))))
    }

    pub fn new(endpoint: &str, api_key: String, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            agent,
            url: format!("{}/chat/completions", endpoint.trim_end_matches('/')),
            api_key,
        }
    }
}

fn is_context_length(body: &str) -> bool {
    let b = body.to_ascii_lowercase();
    b.contains("context_length") || b.contains("context length") || b.contains("maximum context")
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        "http"
    }

    fn complete(&self, prompt: &Prompt, config: &ModelConfig) -> Result<Reply, CallError> {
        let body = request_body(prompt, config);
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| CallError::Transient(format!("transport: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| CallError::Transient(format!("reading body: {e}")))?;
        match status {
            200..=299 => {
                let v: Value =
                    serde_json::from_str(&text).map_err(|e| CallError::Fatal(format!("malformed reply: {e}")))?;
                let content = v["choices"][0]["message"]["content"]
                    .as_str()
                    .ok_or_else(|| CallError::Fatal("reply has no message content".into()))?;
                Ok(Reply {
                    text: content.to_string(),
                    prompt_tokens: v["usage"]["prompt_tokens"].as_u64(),
                })
            }
            401 | 403 => Err(CallError::Auth(format!("HTTP {status}"))),
            400 | 413 if is_context_length(&text) => Err(CallError::ContextLength(text)),
            408 | 429 | 500..=599 => Err(CallError::Transient(format!("HTTP {status}"))),
            _ => Err(CallError::Fatal(format!("HTTP {status}: {text}"))),
        }
    }
}
