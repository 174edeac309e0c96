use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use travelsim_adapters::{
    load_fixture_bundle, CacheMode, Endpoint, HermeticTransport, HttpTransport, RemoteChatClient,
    RemoteTransitProvider, ReplayCache, ReqwestTransport,
};
use travelsim_core::chat::{ChatClient, ChatError, ChatMessage, ChatRequest, SamplingParams};
use travelsim_core::sandbox::{ProviderError, TransitOption, TransitProvider};
use travelsim_core::stamina::TransitMode;
use travelsim_core::{ClockTime, Money, PoiCatalog};

/// Serves `responses` in order, one per connection, and returns the request bodies.
fn canned_server(responses: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some((name, value)) = line.split_once(':') {
                    if name.eq_ignore_ascii_case("content-length") {
                        length = value.trim().parse().unwrap();
                    }
                }
            }
            let mut buf = vec![0u8; length];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (url, handle)
}

fn catalog() -> PoiCatalog {
    load_fixture_bundle(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/beijing-mini"
    ))
    .unwrap()
    .catalog
}

fn request(text: &str) -> ChatRequest {
    ChatRequest {
        tag: "policy".into(),
        messages: vec![ChatMessage::user(text)],
        params: SamplingParams::default(),
    }
}

fn real() -> Arc<dyn HttpTransport> {
    Arc::new(ReqwestTransport::new(Duration::from_secs(10)).unwrap())
}

fn options() -> Vec<TransitOption> {
    vec![TransitOption {
        mode: TransitMode::Taxi,
        duration_min: 12,
        cost: Money(2100),
        description: "taxi".into(),
    }]
}

#[test]
fn live_chat_against_canned_server_is_recorded_then_replayed() {
    let reply = r#"{"choices": [{"message": {"role": "assistant", "content": "{\"decision\": \"day_end\"}", "reasoning_content": "tired"}}]}"#;
    let (url, server) = canned_server(vec![(200, reply.to_string())]);
    let dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(ReplayCache::new(dir.path()));
    let endpoint = Endpoint {
        url,
        api_key: Some("secret".into()),
    };
    let client = RemoteChatClient::new(
        endpoint.clone(),
        "test-model",
        real(),
        cache.clone(),
        CacheMode::Record,
    );
    let response = client.complete(&request("hello")).unwrap();
    assert_eq!(response.text, r#"{"decision": "day_end"}"#);
    assert_eq!(response.reasoning.as_deref(), Some("tired"));
    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["model"], "test-model");
    assert_eq!(sent["messages"][0]["content"], "hello");
    let transcript = client.transcript();
    assert_eq!(transcript.len(), 1);
    assert!(!transcript[0].cached);

    let hermetic = Arc::new(HermeticTransport::default());
    let replay = RemoteChatClient::new(
        endpoint,
        "test-model",
        hermetic.clone(),
        cache,
        CacheMode::Replay,
    );
    assert_eq!(replay.complete(&request("hello")).unwrap(), response);
    assert!(replay.transcript()[0].cached);
    assert!(matches!(
        replay.complete(&request("other")),
        Err(ChatError::Transport(_))
    ));
    assert_eq!(hermetic.attempts(), 0);
}

#[test]
fn malformed_chat_payload_is_a_protocol_error() {
    let (url, server) = canned_server(vec![
        (200, r#"{"unexpected": true}"#.into()),
        (200, r#"{"choices": []}"#.into()),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let client = RemoteChatClient::new(
        Endpoint { url, api_key: None },
        "m",
        real(),
        Arc::new(ReplayCache::new(dir.path())),
        CacheMode::Live,
    );
    assert!(matches!(
        client.complete(&request("a")),
        Err(ChatError::Protocol(_))
    ));
    assert!(matches!(
        client.complete(&request("b")),
        Err(ChatError::Protocol(_))
    ));
    server.join().unwrap();
}

#[test]
fn auth_failure_is_a_transport_error() {
    let (url, server) = canned_server(vec![(401, "{}".into())]);
    let dir = tempfile::tempdir().unwrap();
    let client = RemoteChatClient::new(
        Endpoint { url, api_key: None },
        "m",
        real(),
        Arc::new(ReplayCache::new(dir.path())),
        CacheMode::Live,
    );
    match client.complete(&request("a")) {
        Err(ChatError::Transport(m)) => assert!(m.contains("authentication")),
        other => panic!("unexpected {other:?}"),
    }
    server.join().unwrap();
}

#[test]
fn transit_is_cached_per_hour_and_replayed_offline() {
    let body = serde_json::json!({ "options": options() }).to_string();
    let (url, server) = canned_server(vec![(200, body)]);
    let dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(ReplayCache::new(dir.path()));
    let endpoint = Endpoint {
        url,
        api_key: Some("k".into()),
    };
    let live = RemoteTransitProvider::new(
        endpoint.clone(),
        catalog(),
        real(),
        cache.clone(),
        CacheMode::Record,
    );
    let nine = ClockTime::hm(9, 5).unwrap();
    assert_eq!(
        live.query("hotel", "Palace Museum", nine).unwrap(),
        options()
    );
    let sent: serde_json::Value = serde_json::from_str(&server.join().unwrap()[0]).unwrap();
    assert_eq!(sent["origin"]["id"], "hotel");
    assert_eq!(sent["departure"], "09:05");
    assert!(cache.transit_path("hotel", "palace", 9).is_file());

    let hermetic = Arc::new(HermeticTransport::default());
    let replay = RemoteTransitProvider::new(
        endpoint,
        catalog(),
        hermetic.clone(),
        cache,
        CacheMode::Replay,
    );
    assert_eq!(
        replay
            .query("hotel", "palace", ClockTime::hm(9, 50).unwrap())
            .unwrap(),
        options()
    );
    assert!(matches!(
        replay.query("hotel", "palace", ClockTime::hm(10, 0).unwrap()),
        Err(ProviderError::Service(_))
    ));
    assert!(matches!(
        replay.query("hotel", "Atlantis", nine),
        Err(ProviderError::UnknownPlace(_))
    ));
    assert_eq!(hermetic.attempts(), 0);
}

#[test]
fn replay_prefers_the_cache_over_a_disagreeing_service() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(ReplayCache::new(dir.path()));
    cache
        .store(&cache.transit_path("hotel", "palace", 9), &options())
        .unwrap();
    let other = vec![TransitOption {
        mode: TransitMode::Walking,
        duration_min: 40,
        cost: Money(0),
        description: String::new(),
    }];
    let (url, server) = canned_server(vec![(
        200,
        serde_json::json!({ "options": other }).to_string(),
    )]);
    let endpoint = Endpoint { url, api_key: None };
    let nine = ClockTime::hm(9, 0).unwrap();
    let replay = RemoteTransitProvider::new(
        endpoint.clone(),
        catalog(),
        real(),
        cache.clone(),
        CacheMode::Replay,
    );
    assert_eq!(replay.query("hotel", "palace", nine).unwrap(), options());
    let live =
        RemoteTransitProvider::new(endpoint, catalog(), real(), cache.clone(), CacheMode::Live);
    assert_eq!(live.query("hotel", "palace", nine).unwrap(), other);
    server.join().unwrap();
    assert_eq!(
        cache
            .load::<Vec<TransitOption>>(&cache.transit_path("hotel", "palace", 9))
            .unwrap(),
        Some(other)
    );
}

#[test]
fn unreachable_map_service_is_an_environment_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let dir = tempfile::tempdir().unwrap();
    let provider = RemoteTransitProvider::new(
        Endpoint { url, api_key: None },
        catalog(),
        real(),
        Arc::new(ReplayCache::new(dir.path())),
        CacheMode::Live,
    );
    assert!(matches!(
        provider.query("hotel", "palace", ClockTime::hm(9, 0).unwrap()),
        Err(ProviderError::Service(_))
    ));
}
