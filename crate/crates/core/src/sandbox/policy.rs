//! Traveler policies: the component that picks the next action.

use std::collections::VecDeque;

use thiserror::Error;

use crate::chat::{ChatClient, ChatError, ChatMessage, ChatRequest, SamplingParams};
use crate::model::{normalize_place, Activity, ClockTime, PlanEntry};

use super::{DecisionRequest, PolicyDecision, TransitOption, DAY_END};

const TRAVELER_SYSTEM: &str = include_str!("../../templates/v1/traveler_system.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("scripted policy ran out of decisions after {0}")]
    Exhausted(usize),
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error("{0}")]
    Other(String),
}

/// Chooses the next action given the history so far.
///
/// The returned text may carry free-form reasoning before the JSON decision
/// object; the engine stores it verbatim.
pub trait TravelerPolicy {
    fn decide(&mut self, request: &DecisionRequest<'_>) -> Result<String, PolicyError>;
}

/// Replays a fixed list of responses, one per decision.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    responses: VecDeque<String>,
    used: usize,
}

impl ScriptedPolicy {
    pub fn new(responses: Vec<String>) -> Self {
        Self {
            responses: responses.into(),
            used: 0,
        }
    }

    /// One response per non-blank line.
    pub fn from_jsonl(text: &str) -> Self {
        Self::new(
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect(),
        )
    }
}

impl TravelerPolicy for ScriptedPolicy {
    fn decide(&mut self, _request: &DecisionRequest<'_>) -> Result<String, PolicyError> {
        let next = self
            .responses
            .pop_front()
            .ok_or(PolicyError::Exhausted(self.used))?;
        self.used += 1;
        Ok(next)
    }
}

/// Follows the plan to the minute: waits, then leaves each place just in
/// time to reach the next planned one by its start time using the fastest
/// transport the traveler may use.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoPolicy;

impl EchoPolicy {
    fn fastest<'a>(
        request: &'a DecisionRequest<'_>,
        destination: &str,
    ) -> Option<&'a TransitOption> {
        let key = normalize_place(destination);
        request
            .options
            .transit
            .iter()
            .find(|c| normalize_place(&c.destination) == key)?
            .options
            .iter()
            .filter(|o| request.profile.stamina_rule.transit_rate(o.mode).is_ok())
            .min_by_key(|o| o.duration_min)
    }

    fn transit(
        request: &DecisionRequest<'_>,
        destination: &str,
    ) -> Result<PolicyDecision, PolicyError> {
        let option = Self::fastest(request, destination)
            .ok_or_else(|| PolicyError::Other(format!("no usable transport to `{destination}`")))?;
        let state = request.current();
        Ok(PolicyDecision {
            decision: Activity::Transit.as_str().into(),
            departure: Some(state.location.clone()),
            destination: Some(destination.to_string()),
            transport_mode: Some(option.mode.as_str().into()),
            arrival_time: state
                .time
                .checked_add(option.duration_min)
                .map(|t| t.to_string()),
            ..Default::default()
        })
    }

    fn stay(request: &DecisionRequest<'_>, entry: &PlanEntry, until: ClockTime) -> PolicyDecision {
        let activity = match entry.activity {
            Activity::Sightsee if request.options.legal.contains(&Activity::Sightsee) => {
                Activity::Sightsee
            }
            Activity::Dine => Activity::Dine,
            _ => Activity::Rest,
        };
        PolicyDecision {
            decision: activity.as_str().into(),
            end_time: Some(until.to_string()),
            ..Default::default()
        }
    }

    fn next_decision(request: &DecisionRequest<'_>) -> Result<PolicyDecision, PolicyError> {
        let state = request.current();
        let today: Vec<&PlanEntry> = request.plan.day_entries(state.day).collect();
        let day_end = || PolicyDecision {
            decision: DAY_END.into(),
            ..Default::default()
        };
        let Some(index) = today.iter().rposition(|e| e.start_time <= state.time) else {
            return match today.first() {
                Some(first) => Ok(PolicyDecision {
                    decision: Activity::Rest.as_str().into(),
                    end_time: Some(first.start_time.to_string()),
                    ..Default::default()
                }),
                None => Ok(day_end()),
            };
        };
        let entry = today[index];
        let here = normalize_place(&state.location);
        if normalize_place(&entry.place) != here {
            return Self::transit(request, &entry.place);
        }
        match today.get(index + 1) {
            Some(next) if normalize_place(&next.place) != here => {
                let travel = Self::fastest(request, &next.place)
                    .map(|o| o.duration_min)
                    .unwrap_or(0);
                let depart = next.start_time.minutes().saturating_sub(travel as u16);
                if depart > state.time.minutes() {
                    let until = ClockTime::from_minutes(depart).expect("before a valid time");
                    Ok(Self::stay(request, entry, until))
                } else {
                    Self::transit(request, &next.place)
                }
            }
            Some(next) => Ok(Self::stay(request, entry, next.start_time)),
            None => match entry.end_time {
                Some(end) if end > state.time && entry.activity != Activity::Transit => {
                    Ok(Self::stay(request, entry, end))
                }
                _ => Ok(day_end()),
            },
        }
    }
}

impl TravelerPolicy for EchoPolicy {
    fn decide(&mut self, request: &DecisionRequest<'_>) -> Result<String, PolicyError> {
        let decision = Self::next_decision(request)?;
        Ok(serde_json::to_string(&decision).expect("decision serializes"))
    }
}

/// Asks a chat model for each decision.
pub struct ChatPolicy<'a> {
    client: &'a dyn ChatClient,
    params: SamplingParams,
}

impl<'a> ChatPolicy<'a> {
    pub fn new(client: &'a dyn ChatClient, params: SamplingParams) -> Self {
        Self { client, params }
    }

    pub fn system_prompt(request: &DecisionRequest<'_>) -> String {
        let rule =
            serde_json::to_string_pretty(&request.profile.stamina_rule).expect("rule serializes");
        TRAVELER_SYSTEM
            .replace("{profile}", &request.profile.describe())
            .replace("{stamina_rule}", &rule)
    }
}

impl TravelerPolicy for ChatPolicy<'_> {
    fn decide(&mut self, request: &DecisionRequest<'_>) -> Result<String, PolicyError> {
        let body = serde_json::to_string(request).map_err(|e| PolicyError::Other(e.to_string()))?;
        let chat = ChatRequest {
            tag: "policy".into(),
            messages: vec![
                ChatMessage::system(Self::system_prompt(request)),
                ChatMessage::user(body),
            ],
            params: self.params.clone(),
        };
        Ok(self.client.complete(&chat)?.text)
    }
}
