//! Where data and services come from: a fixture bundle, or live services
//! backed by a bundle's static tables.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use travelsim_adapters::{
    load_fixture_bundle, FixtureBundle, HttpTransport, RemoteConfig, ReplayCache,
};
use travelsim_core::chat::ChatClient;
use travelsim_core::sandbox::TransitProvider;

use crate::{Failure, GlobalArgs};

struct Live {
    config: RemoteConfig,
    transport: Arc<dyn HttpTransport>,
    cache: Arc<ReplayCache>,
}

pub struct Sources {
    pub bundle: FixtureBundle,
    live: Option<Live>,
}

impl Sources {
    pub fn load(global: &GlobalArgs) -> Result<Self, Failure> {
        let dir = Self::bundle_dir(global)?;
        let bundle = load_fixture_bundle(&dir)
            .map_err(|e| Failure::usage(format!("cannot load bundle: {e}")))?;
        let live = if global.live {
            let config = RemoteConfig::from_env().map_err(|e| Failure::usage(e.to_string()))?;
            let transport = config
                .transport()
                .map_err(|e| Failure::usage(e.to_string()))?;
            let cache = Arc::new(ReplayCache::new(config.cache_dir.clone()));
            Some(Live {
                config,
                transport,
                cache,
            })
        } else {
            None
        };
        Ok(Self { bundle, live })
    }

    fn bundle_dir(global: &GlobalArgs) -> Result<PathBuf, Failure> {
        match (&global.fixture, global.live, &global.data) {
            (Some(_), true, _) => Err(Failure::usage(
                "--fixture and --live are mutually exclusive",
            )),
            (Some(dir), false, None) => Ok(dir.clone()),
            (Some(_), false, Some(_)) => Err(Failure::usage("--data only applies to --live runs")),
            (None, true, Some(dir)) => Ok(dir.clone()),
            (None, true, None) => Err(Failure::usage(
                "--live needs --data DIR for POIs, restaurants and profiles",
            )),
            (None, false, _) => Err(Failure::usage(
                "select a data source with --fixture DIR or --live",
            )),
        }
    }

    pub fn label(&self) -> String {
        let name = &self.bundle.manifest.name;
        match &self.live {
            Some(live) => format!("live ({} mode, data {name})", live.config.mode),
            None => format!("fixture {name}"),
        }
    }

    pub fn is_live(&self) -> bool {
        self.live.is_some()
    }

    /// A fresh chat client; fixture clients start their canned queues from the top.
    pub fn chat_client(&self) -> Result<Box<dyn ChatClient>, Failure> {
        match &self.live {
            None => Ok(Box::new(self.bundle.chat_client())),
            Some(live) => Ok(Box::new(
                live.config
                    .chat_client(live.transport.clone(), live.cache.clone())
                    .map_err(|e| Failure::usage(e.to_string()))?,
            )),
        }
    }

    pub fn transit(&self) -> Result<Box<dyn TransitProvider>, Failure> {
        match &self.live {
            None => Ok(Box::new(self.bundle.transit())),
            Some(live) => Ok(Box::new(
                live.config
                    .transit_provider(
                        self.bundle.catalog.clone(),
                        live.transport.clone(),
                        live.cache.clone(),
                    )
                    .map_err(|e| Failure::usage(e.to_string()))?,
            )),
        }
    }

    pub fn bundle_file(&self, name: &str) -> PathBuf {
        self.bundle.dir.join(name)
    }
}

pub fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}
