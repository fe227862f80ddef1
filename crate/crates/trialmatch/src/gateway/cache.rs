use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    response: String,
    ts: String,
}

/// Append-only JSONL response cache keyed by request content hash.
pub struct ResponseCache {
    path: PathBuf,
    entries: RwLock<HashMap<String, String>>,
    writer: Mutex<File>,
    skipped: usize,
}

impl ResponseCache {
    /// Loads existing entries, skipping unreadable lines, and opens the file
    /// for appending.
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut entries = HashMap::new();
        let mut skipped = 0;
        let mut needs_newline = false;
        if path.exists() {
            let text = fs::read_to_string(path)?;
            needs_newline = !text.is_empty() && !text.ends_with('\n');
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                match serde_json::from_str::<CacheLine>(line) {
                    Ok(c) => {
                        entries.insert(c.key, c.response);
                    }
                    Err(_) => skipped += 1,
                }
            }
        }
        let mut writer = OpenOptions::new().create(true).append(true).open(path)?;
        if needs_newline {
            // Seal a torn tail so the next entry starts on its own line.
            writer.write_all(b"\n")?;
        }
        Ok(ResponseCache {
            path: path.to_path_buf(),
            entries: RwLock::new(entries),
            writer: Mutex::new(writer),
            skipped,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Lines ignored while loading.
    pub fn skipped_lines(&self) -> usize {
        self.skipped
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).get(key).cloned()
    }

    pub fn put(&self, key: &str, response: &str) -> io::Result<()> {
        let mut writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        {
            let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
            if entries.contains_key(key) {
                return Ok(());
            }
            entries.insert(key.to_string(), response.to_string());
        }
        let line = CacheLine {
            key: key.to_string(),
            response: response.to_string(),
            ts: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        let mut bytes = serde_json::to_vec(&line).map_err(io::Error::other)?;
        bytes.push(b'\n');
        writer.write_all(&bytes)?;
        writer.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let c = ResponseCache::open(&p).unwrap();
        c.put("k1", "v1").unwrap();
        c.put("k1", "ignored").unwrap();
        drop(c);
        let c = ResponseCache::open(&p).unwrap();
        assert_eq!(c.get("k1").as_deref(), Some("v1"));
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn corrupt_tail_is_skipped_and_sealed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        fs::write(&p, "{\"key\":\"a\",\"response\":\"x\",\"ts\":\"t\"}\n{\"key\":\"b\",\"resp").unwrap();
        let c = ResponseCache::open(&p).unwrap();
        assert_eq!((c.len(), c.skipped_lines()), (1, 1));
        c.put("c", "y").unwrap();
        drop(c);
        let c = ResponseCache::open(&p).unwrap();
        assert_eq!(c.get("c").as_deref(), Some("y"));
        assert_eq!(c.skipped_lines(), 1);
    }
}
