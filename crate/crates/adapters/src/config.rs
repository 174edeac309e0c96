//! Remote-service settings read from the environment.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;
use travelsim_core::PoiCatalog;

use crate::cache::{CacheMode, ReplayCache};
use crate::http::{HermeticTransport, HttpTransport, ReqwestTransport};
use crate::remote::{Endpoint, RemoteChatClient, RemoteTransitProvider};

pub const ENV_MAP_ENDPOINT: &str = "TRAVELSIM_MAP_ENDPOINT";
pub const ENV_MAP_KEY: &str = "TRAVELSIM_MAP_KEY";
pub const ENV_CHAT_ENDPOINT: &str = "TRAVELSIM_CHAT_ENDPOINT";
pub const ENV_CHAT_MODEL: &str = "TRAVELSIM_CHAT_MODEL";
pub const ENV_CHAT_KEY: &str = "TRAVELSIM_CHAT_KEY";
pub const ENV_MODE: &str = "TRAVELSIM_MODE";
pub const ENV_CACHE_DIR: &str = "TRAVELSIM_CACHE_DIR";
pub const ENV_TIMEOUT_SECS: &str = "TRAVELSIM_TIMEOUT_SECS";

pub const DEFAULT_CACHE_DIR: &str = ".travelsim-cache";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} is not set")]
    Missing(&'static str),
    #[error("{name}: {message}")]
    Invalid { name: &'static str, message: String },
    #[error("{0}")]
    Transport(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    pub mode: CacheMode,
    pub cache_dir: PathBuf,
    pub timeout: Duration,
    pub map: Option<Endpoint>,
    pub chat: Option<(Endpoint, String)>,
}

impl RemoteConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|name| std::env::var(name).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let get = |name: &str| {
            lookup(name)
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
        };
        let mode = match get(ENV_MODE) {
            Some(v) => v.parse().map_err(|message| ConfigError::Invalid {
                name: ENV_MODE,
                message,
            })?,
            None => CacheMode::Replay,
        };
        let timeout = match get(ENV_TIMEOUT_SECS) {
            Some(v) => Duration::from_secs(v.parse().map_err(|_| ConfigError::Invalid {
                name: ENV_TIMEOUT_SECS,
                message: format!("`{v}`"),
            })?),
            None => DEFAULT_TIMEOUT,
        };
        let map = get(ENV_MAP_ENDPOINT).map(|url| Endpoint {
            url,
            api_key: get(ENV_MAP_KEY),
        });
        let chat = match get(ENV_CHAT_ENDPOINT) {
            Some(url) => {
                let model = get(ENV_CHAT_MODEL).ok_or(ConfigError::Missing(ENV_CHAT_MODEL))?;
                Some((
                    Endpoint {
                        url,
                        api_key: get(ENV_CHAT_KEY),
                    },
                    model,
                ))
            }
            None => None,
        };
        Ok(Self {
            mode,
            cache_dir: get(ENV_CACHE_DIR)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)),
            timeout,
            map,
            chat,
        })
    }

    /// The transport for this mode: hermetic in replay mode, real otherwise.
    pub fn transport(&self) -> Result<Arc<dyn HttpTransport>, ConfigError> {
        Ok(match self.mode {
            CacheMode::Replay => Arc::new(HermeticTransport::default()),
            _ => Arc::new(
                ReqwestTransport::new(self.timeout)
                    .map_err(|e| ConfigError::Transport(e.to_string()))?,
            ),
        })
    }

    pub fn transit_provider(
        &self,
        catalog: PoiCatalog,
        transport: Arc<dyn HttpTransport>,
        cache: Arc<ReplayCache>,
    ) -> Result<RemoteTransitProvider, ConfigError> {
        let endpoint = self
            .map
            .clone()
            .ok_or(ConfigError::Missing(ENV_MAP_ENDPOINT))?;
        Ok(RemoteTransitProvider::new(
            endpoint, catalog, transport, cache, self.mode,
        ))
    }

    pub fn chat_client(
        &self,
        transport: Arc<dyn HttpTransport>,
        cache: Arc<ReplayCache>,
    ) -> Result<RemoteChatClient, ConfigError> {
        let (endpoint, model) = self
            .chat
            .clone()
            .ok_or(ConfigError::Missing(ENV_CHAT_ENDPOINT))?;
        Ok(RemoteChatClient::new(
            endpoint, model, transport, cache, self.mode,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: BTreeMap<String, String> = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults_to_replay() {
        let config = RemoteConfig::from_lookup(lookup(&[])).unwrap();
        assert_eq!(config.mode, CacheMode::Replay);
        assert_eq!(config.cache_dir, PathBuf::from(DEFAULT_CACHE_DIR));
        assert!(config.map.is_none() && config.chat.is_none());
    }

    #[test]
    fn reads_endpoints() {
        let config = RemoteConfig::from_lookup(lookup(&[
            (ENV_MODE, "record"),
            (ENV_CHAT_ENDPOINT, "http://chat"),
            (ENV_CHAT_MODEL, "m"),
            (ENV_MAP_ENDPOINT, "http://map"),
            (ENV_MAP_KEY, "k"),
            (ENV_TIMEOUT_SECS, "5"),
        ]))
        .unwrap();
        assert_eq!(config.mode, CacheMode::Record);
        assert_eq!(config.timeout, Duration::from_secs(5));
        assert_eq!(
            config.map,
            Some(Endpoint {
                url: "http://map".into(),
                api_key: Some("k".into())
            })
        );
        assert_eq!(config.chat.unwrap().1, "m");
    }

    #[test]
    fn chat_endpoint_needs_a_model() {
        let err =
            RemoteConfig::from_lookup(lookup(&[(ENV_CHAT_ENDPOINT, "http://chat")])).unwrap_err();
        assert_eq!(err, ConfigError::Missing(ENV_CHAT_MODEL));
        let err = RemoteConfig::from_lookup(lookup(&[(ENV_MODE, "sometimes")])).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { name: ENV_MODE, .. }));
    }
}
