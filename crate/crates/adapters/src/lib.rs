//! Concrete providers and chat clients for travelsim: file-backed fixture
//! bundles for deterministic runs and HTTP adapters behind a record/replay
//! cache for live ones.

pub mod bundle;
pub mod cache;
pub mod config;
pub mod http;
pub mod remote;

pub use bundle::{
    load_fixture_bundle, BundleError, BundleManifest, FixtureBundle, BUNDLE_SCHEMA_VERSION,
};
pub use cache::{CacheError, CacheMode, ReplayCache, CACHE_LAYOUT_VERSION};
pub use config::{ConfigError, RemoteConfig};
pub use http::{
    HermeticTransport, HttpRequest, HttpResponse, HttpTransport, ReqwestTransport, TransportError,
};
pub use remote::{ChatExchange, Endpoint, RemoteChatClient, RemoteTransitProvider};
