//! On-disk record/replay cache.
//!
//! Layout under the cache root:
//!
//! ```text
//! transit/v1/{from}__{to}__{HH}.json   transit options for a departure hour
//! chat/v1/{sha256}.json                one chat request and its response
//! ```

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::RwLock;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CACHE_LAYOUT_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Serve from the cache only; never touch the network.
    #[default]
    Replay,
    /// Serve hits from the cache, fetch and store misses.
    Record,
    /// Always fetch, and refresh the cache with the result.
    Live,
}

impl fmt::Display for CacheMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Replay => "replay",
            Self::Record => "record",
            Self::Live => "live",
        })
    }
}

impl FromStr for CacheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "replay" => Ok(Self::Replay),
            "record" => Ok(Self::Record),
            "live" => Ok(Self::Live),
            other => Err(format!(
                "unknown mode `{other}` (expected replay, record or live)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: corrupt cache entry: {message}")]
    Corrupt { path: PathBuf, message: String },
}

/// Single writer, many readers: writes go to a temporary file that is
/// renamed into place under the write lock.
#[derive(Debug)]
pub struct ReplayCache {
    root: PathBuf,
    lock: RwLock<()>,
}

fn file_safe(part: &str) -> String {
    part.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl ReplayCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            lock: RwLock::new(()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn transit_path(&self, from: &str, to: &str, hour: u16) -> PathBuf {
        self.root
            .join("transit")
            .join(CACHE_LAYOUT_VERSION)
            .join(format!(
                "{}__{}__{hour:02}.json",
                file_safe(from),
                file_safe(to)
            ))
    }

    pub fn chat_path(&self, digest: &str) -> PathBuf {
        self.root
            .join("chat")
            .join(CACHE_LAYOUT_VERSION)
            .join(format!("{}.json", file_safe(digest)))
    }

    pub fn load<T: DeserializeOwned>(&self, path: &Path) -> Result<Option<T>, CacheError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let text = match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => {
                return Err(CacheError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CacheError::Corrupt {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
    }

    pub fn store<T: Serialize>(&self, path: &Path, value: &T) -> Result<(), CacheError> {
        let io = |source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        };
        let text = serde_json::to_string_pretty(value).expect("cache values serialize");
        let _guard = self.lock.write().unwrap_or_else(|e| e.into_inner());
        let dir = path.parent().expect("cache paths have a parent");
        fs::create_dir_all(dir).map_err(io)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let mut file = fs::File::create(&tmp).map_err(io)?;
        file.write_all(text.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(io)?;
        drop(file);
        fs::rename(&tmp, path).map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_stable() {
        let cache = ReplayCache::new("/c");
        assert_eq!(
            cache.transit_path("hotel", "palace", 9),
            PathBuf::from("/c/transit/v1/hotel__palace__09.json")
        );
        assert_eq!(
            cache.transit_path("a/b", "c d", 14),
            PathBuf::from("/c/transit/v1/a_b__c_d__14.json")
        );
        assert_eq!(
            cache.chat_path("ab12"),
            PathBuf::from("/c/chat/v1/ab12.json")
        );
    }

    #[test]
    fn modes_parse() {
        assert_eq!("Replay".parse::<CacheMode>(), Ok(CacheMode::Replay));
        assert_eq!("live".parse::<CacheMode>(), Ok(CacheMode::Live));
        assert!("offline".parse::<CacheMode>().is_err());
    }

    #[test]
    fn corrupt_entries_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReplayCache::new(dir.path());
        let path = cache.chat_path("x");
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, "{not json").unwrap();
        assert!(matches!(
            cache.load::<serde_json::Value>(&path),
            Err(CacheError::Corrupt { .. })
        ));
    }

    proptest! {
        #[test]
        fn store_then_load_round_trips(values in proptest::collection::vec((any::<i64>(), "[a-z ]{0,12}"), 0..8)) {
            let dir = tempfile::tempdir().unwrap();
            let cache = ReplayCache::new(dir.path());
            let path = cache.transit_path("a", "b", 7);
            prop_assert_eq!(cache.load::<Vec<(i64, String)>>(&path).unwrap(), None);
            cache.store(&path, &values).unwrap();
            prop_assert_eq!(cache.load::<Vec<(i64, String)>>(&path).unwrap(), Some(values));
        }
    }
}
