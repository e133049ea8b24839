use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ChatRequest;
use crate::util::{sha256_hex, write_atomic};

/// Content digest of a request under a prompt version.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn for_request(request: &ChatRequest, prompt_version: &str) -> CacheKey {
        let canonical = json!({
            "model": request.model,
            "messages": request.messages,
            "sampling": request.sampling,
            "prompt_version": prompt_version,
            "tag": request.cache_tag,
        });
        CacheKey(sha256_hex(canonical.to_string().as_bytes()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEnvelope {
    pub digest: String,
    pub model: String,
    pub prompt_version: String,
    pub content: String,
    #[serde(default)]
    pub provider_meta: BTreeMap<String, Value>,
}

/// One JSON file per digest, sharded by the first two hex characters.
#[derive(Debug)]
pub struct DiskCache {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl DiskCache {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<DiskCache> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(DiskCache {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        let digest = key.as_str();
        self.root.join(&digest[..2]).join(format!("{digest}.json"))
    }

    fn lock_for(&self, key: &CacheKey) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(key.as_str().to_string()).or_default().clone()
    }

    /// Corrupt entries are treated as misses and later overwritten.
    pub fn get(&self, key: &CacheKey) -> io::Result<Option<CacheEnvelope>> {
        let path = self.path_for(key);
        let lock = self.lock_for(key);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        match serde_json::from_str::<CacheEnvelope>(&text) {
            Ok(env) if env.digest == key.as_str() => Ok(Some(env)),
            Ok(_) | Err(_) => {
                log::warn!("ignoring unreadable cache entry {}", path.display());
                Ok(None)
            }
        }
    }

    pub fn put(&self, key: &CacheKey, envelope: &CacheEnvelope) -> io::Result<()> {
        let path = self.path_for(key);
        let lock = self.lock_for(key);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut text = serde_json::to_string_pretty(envelope).map_err(io::Error::other)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())
    }
}
