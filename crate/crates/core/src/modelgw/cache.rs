//! On-disk response cache keyed by a content hash of the request.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::promptkit::Prompt;

/// SHA-256 over the prompt's canonical bytes, the model name and the
/// temperature's bit pattern, each length-prefixed.
pub fn cache_key(prompt: &Prompt, model: &str, temperature: f64) -> String {
    cache_key_bytes(&prompt.content_bytes(), model, temperature)
}

pub fn cache_key_bytes(prompt_bytes: &[u8], model: &str, temperature: f64) -> String {
    let mut h = Sha256::new();
    for part in [prompt_bytes, model.as_bytes(), &temperature.to_bits().to_le_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A stored backend outcome. Only outcomes that would repeat on retry are
/// stored: successful replies and context-length failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_length_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    pub backend: String,
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ResponseCache {
    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            locks: Mutex::default(),
        }
    }

    /// A cache that never stores anything.
    pub fn disabled() -> Self {
        Self::default()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(&key[..2]).join(format!("{key}.json")))
    }

    /// Lock serialising lookups and writes for one key.
    pub fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        let mut m = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        m.entry(key.to_string()).or_default().clone()
    }

    pub fn get(&self, key: &str) -> Result<Option<CachedReply>> {
        let Some(p) = self.path(key) else {
            return Ok(None);
        };
        match fs::read(&p) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(p, e)),
        }
    }

    pub fn put(&self, key: &str, reply: &CachedReply) -> Result<()> {
        let Some(p) = self.path(key) else {
            return Ok(());
        };
        let parent = p.parent().expect("cache path has a parent");
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        write_atomic(&p, &serde_json::to_vec(reply)?)
    }
}
