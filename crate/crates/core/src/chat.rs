//! Chat-model client contract shared by the planning pipeline, the
//! traveler policy and the feedback evaluator.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            seed: None,
            max_tokens: None,
        }
    }
}

/// One completion request.
///
/// `tag` names the pipeline step issuing the call (for example
/// `decompose#2` or `plan.aspect#1`); it is not sent to remote services but
/// keys fixture responses and cache entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub tag: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default)]
    pub params: SamplingParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChatError {
    #[error("no scripted response left for `{0}`")]
    Exhausted(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("request timed out after {0} s")]
    Timeout(u64),
}

/// A chat-completion backend. Implementations must accept concurrent calls.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ChatError>;
}

/// Replays canned responses keyed by request tag.
///
/// An exact tag match pops responses in order. A tag `base#i` without an
/// exact entry takes element `i` of the `base` list (the last one when the
/// list is shorter), so concurrently issued indexed calls stay deterministic.
#[derive(Debug, Default)]
pub struct ScriptedChatClient {
    queues: Mutex<BTreeMap<String, VecDeque<String>>>,
    indexed: BTreeMap<String, Vec<String>>,
    calls: Mutex<Vec<ChatRequest>>,
}

impl ScriptedChatClient {
    pub fn new(responses: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            queues: Mutex::new(
                responses
                    .iter()
                    .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                    .collect(),
            ),
            indexed: responses,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    /// Every request received so far, in arrival order.
    pub fn calls(&self) -> Vec<ChatRequest> {
        self.calls.lock().expect("call log poisoned").clone()
    }
}

impl ChatClient for ScriptedChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ChatError> {
        self.calls
            .lock()
            .expect("call log poisoned")
            .push(request.clone());
        let mut queues = self.queues.lock().expect("queues poisoned");
        if let Some(queue) = queues.get_mut(&request.tag) {
            return queue
                .pop_front()
                .map(|text| ChatResponse {
                    text,
                    reasoning: None,
                })
                .ok_or_else(|| ChatError::Exhausted(request.tag.clone()));
        }
        let (base, index) = request
            .tag
            .rsplit_once('#')
            .and_then(|(base, i)| Some((base, i.parse::<usize>().ok()?)))
            .ok_or_else(|| ChatError::Exhausted(request.tag.clone()))?;
        let list = self
            .indexed
            .get(base)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| ChatError::Exhausted(request.tag.clone()))?;
        let text = list[index.min(list.len() - 1)].clone();
        Ok(ChatResponse {
            text,
            reasoning: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(tag: &str) -> ChatRequest {
        ChatRequest {
            tag: tag.into(),
            messages: vec![ChatMessage::user("hi")],
            params: SamplingParams::default(),
        }
    }

    #[test]
    fn exact_tags_pop_in_order() {
        let client = ScriptedChatClient::new(BTreeMap::from([(
            "a".to_string(),
            vec!["1".to_string(), "2".to_string()],
        )]));
        assert_eq!(client.complete(&request("a")).unwrap().text, "1");
        assert_eq!(client.complete(&request("a")).unwrap().text, "2");
        assert_eq!(
            client.complete(&request("a")),
            Err(ChatError::Exhausted("a".into()))
        );
        assert_eq!(client.calls().len(), 3);
    }

    #[test]
    fn indexed_tags_select_by_position() {
        let client = ScriptedChatClient::new(BTreeMap::from([(
            "d".to_string(),
            vec!["x".to_string(), "y".to_string()],
        )]));
        assert_eq!(client.complete(&request("d#1")).unwrap().text, "y");
        assert_eq!(client.complete(&request("d#0")).unwrap().text, "x");
        assert_eq!(client.complete(&request("d#9")).unwrap().text, "y");
        assert!(client.complete(&request("e#0")).is_err());
    }
}
