//! Offline backends: scripted oracle, uniform random, replay-only and a
//! stub that exercises request encoding without a network.

use std::collections::HashMap;
use std::sync::Arc;

use crate::promptkit::Prompt;
use crate::rng::{sha256_hex, Rng64};
use crate::seed;
use crate::synthgen::Label;

use super::http::request_body;
use super::{Backend, CallError, ModelConfig, Reply};

fn answer(label: &Label) -> String {
    format!("Answer: {label}")
}

/// Answers every prompt with the ground truth of its instance.
pub struct OracleBackend {
    answers: Arc<HashMap<String, Label>>,
}

impl OracleBackend {
    pub fn new(answers: Arc<HashMap<String, Label>>) -> Self {
        Self { answers }
    }
}

impl Backend for OracleBackend {
    fn id(&self) -> &str {
        "oracle"
    }

    fn complete(&self, prompt: &Prompt, _config: &ModelConfig) -> Result<Reply, CallError> {
        match self.answers.get(&prompt.instance_id) {
            Some(l) => Ok(Reply {
                text: answer(l),
                prompt_tokens: None,
            }),
            None => Err(CallError::Fatal(format!("oracle has no answer for {}", prompt.instance_id))),
        }
    }
}

/// Picks an admissible answer uniformly, seeded by the prompt content.
pub struct RandomBackend {
    seed: u64,
}

impl RandomBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl Backend for RandomBackend {
    fn id(&self) -> &str {
        "random"
    }

    fn complete(&self, prompt: &Prompt, _config: &ModelConfig) -> Result<Reply, CallError> {
        let values = prompt.schema.values();
        if values.is_empty() {
            return Err(CallError::Fatal("schema admits no values".into()));
        }
        let h = sha256_hex(&prompt.content_bytes());
        let mut rng = Rng64::seed_from(seed!(self.seed, "random_backend", h.as_str()));
        let pick = &values[rng.below(values.len() as u64) as usize];
        Ok(Reply {
            text: answer(pick),
            prompt_tokens: None,
        })
    }
}

/// Serves only from the response cache; every miss is an error.
pub struct ReplayBackend;

impl Backend for ReplayBackend {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&self, prompt: &Prompt, _config: &ModelConfig) -> Result<Reply, CallError> {
        Err(CallError::Fatal(format!("replay cache miss for {}", prompt.instance_id)))
    }

    fn is_replay(&self) -> bool {
        true
    }
}

/// Builds the full live request body, then answers with the first
/// admissible value instead of sending it.
pub struct LiveStubBackend;

impl Backend for LiveStubBackend {
    fn id(&self) -> &str {
        "live_stub"
    }

    fn complete(&self, prompt: &Prompt, config: &ModelConfig) -> Result<Reply, CallError> {
        let body = request_body(prompt, config);
        let first = prompt.schema.values().into_iter().next();
        match (body.get("messages"), first) {
            (Some(_), Some(l)) => Ok(Reply {
                text: answer(&l),
                prompt_tokens: None,
            }),
            _ => Err(CallError::Fatal("stub could not build a request".into())),
        }
    }
}
