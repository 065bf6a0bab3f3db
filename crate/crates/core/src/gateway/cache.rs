use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::GatewayError;

/// One cached exchange with an endpoint.
///
/// `request_body` holds the canonical JSON string that was hashed into `key`,
/// so an entry can be audited without replaying the request. `retrieved_at`
/// records when the live call happened; replays keep the original timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub endpoint: String,
    pub route: String,
    pub key: String,
    pub request_body: String,
    pub response_body: serde_json::Value,
    pub retrieved_at: DateTime<Utc>,
}

/// Content-addressed store for endpoint responses.
///
/// Entries live under `root/{endpoint}/{key prefix}/{key}.json` and are
/// written atomically (temp file then rename). A `manifest.jsonl` in the root
/// gains one line per newly stored entry, in insertion order, so a run can be
/// audited or shipped to another machine as a flat list.
#[derive(Debug)]
pub struct ResponseCache {
    root: PathBuf,
    manifest: Mutex<fs::File>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Debug, Serialize)]
struct ManifestLine<'a> {
    key: &'a str,
    endpoint: &'a str,
    route: &'a str,
    retrieved_at: &'a DateTime<Utc>,
}

impl ResponseCache {
    /// Opens (or creates) a cache rooted at `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)
            .map_err(|e| GatewayError::Cache(format!("create {}: {e}", root.display())))?;
        let manifest_path = root.join("manifest.jsonl");
        let manifest = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&manifest_path)
            .map_err(|e| GatewayError::Cache(format!("open {}: {e}", manifest_path.display())))?;
        Ok(ResponseCache {
            root,
            manifest: Mutex::new(manifest),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, endpoint: &str, key: &str) -> PathBuf {
        let prefix = &key[..key.len().min(2)];
        self.root.join(endpoint).join(prefix).join(format!("{key}.json"))
    }

    /// Looks up a stored response. A malformed entry file is an error rather
    /// than a miss so that silent re-fetching never masks cache corruption.
    pub fn get(&self, endpoint: &str, key: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.entry_path(endpoint, key);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                return Ok(None);
            }
            Err(e) => {
                return Err(GatewayError::Cache(format!("read {}: {e}", path.display())));
            }
        };
        let entry: CacheEntry = serde_json::from_str(&raw)
            .map_err(|e| GatewayError::Cache(format!("corrupt entry {}: {e}", path.display())))?;
        if entry.key != key {
            return Err(GatewayError::Cache(format!(
                "entry {} claims key {}",
                path.display(),
                entry.key
            )));
        }
        self.hits.fetch_add(1, Ordering::Relaxed);
        Ok(Some(entry))
    }

    /// Stores an entry unless one already exists for its key. Returns whether
    /// the entry was newly written.
    pub fn put(&self, entry: &CacheEntry) -> Result<bool, GatewayError> {
        let path = self.entry_path(&entry.endpoint, &entry.key);
        if path.exists() {
            return Ok(false);
        }
        let dir = path.parent().expect("entry path has a parent");
        fs::create_dir_all(dir)
            .map_err(|e| GatewayError::Cache(format!("create {}: {e}", dir.display())))?;
        let body = serde_json::to_string(entry)
            .map_err(|e| GatewayError::Cache(format!("encode entry: {e}")))?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, &body)
            .map_err(|e| GatewayError::Cache(format!("write {}: {e}", tmp.display())))?;
        fs::rename(&tmp, &path)
            .map_err(|e| GatewayError::Cache(format!("rename {}: {e}", path.display())))?;

        let line = serde_json::to_string(&ManifestLine {
            key: &entry.key,
            endpoint: &entry.endpoint,
            route: &entry.route,
            retrieved_at: &entry.retrieved_at,
        })
        .map_err(|e| GatewayError::Cache(format!("encode manifest line: {e}")))?;
        let mut manifest = self.manifest.lock().expect("manifest lock poisoned");
        writeln!(manifest, "{line}")
            .map_err(|e| GatewayError::Cache(format!("append manifest: {e}")))?;
        Ok(true)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}
