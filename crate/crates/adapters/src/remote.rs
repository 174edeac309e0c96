//! Remote map and chat services behind the record/replay cache.

use std::sync::{Arc, Mutex};

use log::{debug, info};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use travelsim_core::chat::{
    ChatClient, ChatError, ChatMessage, ChatRequest, ChatResponse, SamplingParams,
};
use travelsim_core::sandbox::{ProviderError, TransitOption, TransitProvider};
use travelsim_core::{ClockTime, Poi, PoiCatalog};

use crate::cache::{CacheMode, ReplayCache};
use crate::http::{HttpRequest, HttpResponse, HttpTransport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub url: String,
    pub api_key: Option<String>,
}

impl Endpoint {
    fn headers(&self) -> Vec<(String, String)> {
        self.api_key
            .iter()
            .map(|k| ("Authorization".to_string(), format!("Bearer {k}")))
            .collect()
    }
}

fn status_error(response: &HttpResponse) -> Option<String> {
    match response.status {
        200..=299 => None,
        401 | 403 => Some(format!(
            "authentication rejected (HTTP {})",
            response.status
        )),
        status => Some(format!(
            "HTTP {status}: {}",
            response.body.chars().take(200).collect::<String>()
        )),
    }
}

/// Transit options from an HTTP map service.
///
/// The service receives `{"origin", "destination", "departure"}`, where each
/// endpoint carries the POI id, name and coordinates, and answers with
/// `{"options": [TransitOption, ...]}`. Responses are cached per
/// `(from, to, departure hour)`.
pub struct RemoteTransitProvider {
    endpoint: Endpoint,
    catalog: PoiCatalog,
    transport: Arc<dyn HttpTransport>,
    cache: Arc<ReplayCache>,
    mode: CacheMode,
}

#[derive(Deserialize)]
struct TransitReply {
    options: Vec<TransitOption>,
}

impl RemoteTransitProvider {
    pub fn new(
        endpoint: Endpoint,
        catalog: PoiCatalog,
        transport: Arc<dyn HttpTransport>,
        cache: Arc<ReplayCache>,
        mode: CacheMode,
    ) -> Self {
        Self {
            endpoint,
            catalog,
            transport,
            cache,
            mode,
        }
    }

    fn resolve(&self, place: &str) -> Result<&Poi, ProviderError> {
        self.catalog
            .resolve(place)
            .ok_or_else(|| ProviderError::UnknownPlace(place.to_string()))
    }

    fn fetch(
        &self,
        from: &Poi,
        to: &Poi,
        depart: ClockTime,
    ) -> Result<Vec<TransitOption>, ProviderError> {
        let place = |p: &Poi| json!({"id": p.id, "name": p.name, "lat": p.location.lat, "lon": p.location.lon});
        let request = HttpRequest {
            url: self.endpoint.url.clone(),
            headers: self.endpoint.headers(),
            body: json!({"origin": place(from), "destination": place(to), "departure": depart.to_string()}),
        };
        let response = self
            .transport
            .post_json(&request)
            .map_err(|e| ProviderError::Service(e.to_string()))?;
        if let Some(message) = status_error(&response) {
            return Err(ProviderError::Service(message));
        }
        let reply: TransitReply = serde_json::from_str(&response.body)
            .map_err(|e| ProviderError::Service(format!("malformed map response: {e}")))?;
        Ok(reply.options)
    }
}

impl TransitProvider for RemoteTransitProvider {
    fn query(
        &self,
        from: &str,
        to: &str,
        depart: ClockTime,
    ) -> Result<Vec<TransitOption>, ProviderError> {
        let (a, b) = (self.resolve(from)?, self.resolve(to)?);
        let path = self.cache.transit_path(&a.id, &b.id, depart.minutes() / 60);
        let service = |e: crate::cache::CacheError| ProviderError::Service(e.to_string());
        if self.mode != CacheMode::Live {
            if let Some(options) = self
                .cache
                .load::<Vec<TransitOption>>(&path)
                .map_err(service)?
            {
                return Ok(options);
            }
            if self.mode == CacheMode::Replay {
                return Err(ProviderError::Service(format!(
                    "no cached transit for {} -> {} (replay mode)",
                    a.id, b.id
                )));
            }
        }
        let options = self.fetch(a, b, depart)?;
        self.cache.store(&path, &options).map_err(service)?;
        Ok(options)
    }
}

/// A completion exchange as logged and cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub tag: String,
    pub request: serde_json::Value,
    pub response: ChatResponse,
    pub cached: bool,
}

/// An OpenAI-compatible `chat/completions` client behind the cache.
///
/// Cache entries are keyed by the SHA-256 of the request body (model,
/// messages and sampling parameters); the tag is not part of the key.
pub struct RemoteChatClient {
    endpoint: Endpoint,
    model: String,
    transport: Arc<dyn HttpTransport>,
    cache: Arc<ReplayCache>,
    mode: CacheMode,
    log: Mutex<Vec<ChatExchange>>,
}

#[derive(Deserialize)]
struct CompletionReply {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
    #[serde(default)]
    reasoning_content: Option<String>,
}

impl RemoteChatClient {
    pub fn new(
        endpoint: Endpoint,
        model: impl Into<String>,
        transport: Arc<dyn HttpTransport>,
        cache: Arc<ReplayCache>,
        mode: CacheMode,
    ) -> Self {
        Self {
            endpoint,
            model: model.into(),
            transport,
            cache,
            mode,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn request_body(
        &self,
        messages: &[ChatMessage],
        params: &SamplingParams,
    ) -> serde_json::Value {
        let mut body =
            json!({"model": self.model, "messages": messages, "temperature": params.temperature});
        if let Some(seed) = params.seed {
            body["seed"] = seed.into();
        }
        if let Some(max) = params.max_tokens {
            body["max_tokens"] = max.into();
        }
        body
    }

    pub fn digest(body: &serde_json::Value) -> String {
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    }

    /// Every exchange so far, in completion order.
    pub fn transcript(&self) -> Vec<ChatExchange> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn fetch(&self, body: &serde_json::Value) -> Result<ChatResponse, ChatError> {
        let url = format!(
            "{}/chat/completions",
            self.endpoint.url.trim_end_matches('/')
        );
        let request = HttpRequest {
            url,
            headers: self.endpoint.headers(),
            body: body.clone(),
        };
        let response = self.transport.post_json(&request).map_err(|e| match e {
            TransportError::Timeout(d) => ChatError::Timeout(d.as_secs()),
            other => ChatError::Transport(other.to_string()),
        })?;
        if let Some(message) = status_error(&response) {
            return Err(ChatError::Transport(message));
        }
        let reply: CompletionReply = serde_json::from_str(&response.body)
            .map_err(|e| ChatError::Protocol(format!("malformed completion payload: {e}")))?;
        let message = reply
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ChatError::Protocol("completion has no choices".into()))?
            .message;
        let text = message
            .content
            .ok_or_else(|| ChatError::Protocol("completion message has no content".into()))?;
        Ok(ChatResponse {
            text,
            reasoning: message.reasoning_content,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CachedChat {
    request: serde_json::Value,
    response: ChatResponse,
}

impl ChatClient for RemoteChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ChatError> {
        let body = self.request_body(&request.messages, &request.params);
        let path = self.cache.chat_path(&Self::digest(&body));
        let cache_err = |e: crate::cache::CacheError| ChatError::Transport(e.to_string());
        let mut hit = None;
        if self.mode != CacheMode::Live {
            hit = self
                .cache
                .load::<CachedChat>(&path)
                .map_err(cache_err)?
                .map(|c| c.response);
            if hit.is_none() && self.mode == CacheMode::Replay {
                return Err(ChatError::Transport(format!(
                    "no cached completion for `{}` (replay mode)",
                    request.tag
                )));
            }
        }
        let cached = hit.is_some();
        let response = match hit {
            Some(response) => response,
            None => {
                let response = self.fetch(&body)?;
                self.cache
                    .store(
                        &path,
                        &CachedChat {
                            request: body.clone(),
                            response: response.clone(),
                        },
                    )
                    .map_err(cache_err)?;
                response
            }
        };
        info!(
            "chat `{}` completed ({} chars{})",
            request.tag,
            response.text.len(),
            if cached { ", cached" } else { "" }
        );
        debug!("chat `{}` request: {body}", request.tag);
        debug!("chat `{}` response: {}", request.tag, response.text);
        self.log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(ChatExchange {
                tag: request.tag.clone(),
                request: body,
                response: response.clone(),
                cached,
            });
        Ok(response)
    }
}
