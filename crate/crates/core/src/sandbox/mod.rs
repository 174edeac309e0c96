//! Event-driven travel simulation.
//!
//! A traveler starts at the plan's origin terminal and, one decision at a
//! time, transits, rests, dines or sightsees until it declares the day over.
//! The engine owns the clock, the purse and the stamina meter: whatever the
//! policy reports about its own stamina or spending is logged but never used.

mod engine;
pub mod policy;
pub mod providers;
pub mod trace;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Activity, ClockTime, Money};
use crate::stamina::{stamina_state, StaminaState, StaminaValue, TransitMode};

pub use engine::{
    canonical_place, day_start, group_fare, legal_actions, next_planned_location, run_simulation,
    step, LegalActions, Providers, SimConfig, SimError, SimulationAbort, StepError,
};
pub use policy::{ChatPolicy, EchoPolicy, PolicyError, ScriptedPolicy, TravelerPolicy};
pub use providers::{
    DiningOption, DiningProvider, ProviderError, RestaurantRecord, SightseeExperience,
    SightseeProvider, TableDining, TableSightsee, TableTransit, TransitOption, TransitProvider,
    TransitRecord,
};
pub use trace::{
    extract_simulated_trajectory, DecisionRecord, Trace, TraceError, TraceHeader, TRACE_SCHEMA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Transit,
    Rest,
    Dine,
    Sightsee,
    Arrival,
    DayEnd,
}

impl From<Activity> for EventKind {
    fn from(activity: Activity) -> Self {
        match activity {
            Activity::Transit => Self::Transit,
            Activity::Rest => Self::Rest,
            Activity::Dine => Self::Dine,
            Activity::Sightsee => Self::Sightsee,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub start: ClockTime,
    pub end: ClockTime,
    pub cost: Money,
    #[serde(default)]
    pub detail: String,
}

/// The traveler's situation after an event: time, place, stamina, outlay
/// and the event that led here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelerState {
    pub day: u32,
    pub time: ClockTime,
    pub location: String,
    pub stamina: StaminaValue,
    pub outlay: Money,
    pub event: Event,
}

impl TravelerState {
    pub fn stamina_state(&self) -> StaminaState {
        stamina_state(self.stamina.value())
    }
}

/// A fully resolved action the engine can execute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Transit {
        destination: String,
        mode: TransitMode,
    },
    Rest {
        duration_min: u32,
    },
    Dine {
        duration_min: Option<u32>,
        restaurant: Option<String>,
    },
    Sightsee {
        duration_min: Option<u32>,
    },
}

impl Action {
    pub fn kind(&self) -> Activity {
        match self {
            Self::Transit { .. } => Activity::Transit,
            Self::Rest { .. } => Activity::Rest,
            Self::Dine { .. } => Activity::Dine,
            Self::Sightsee { .. } => Activity::Sightsee,
        }
    }
}

/// What a policy decision asks the engine to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Act(Action),
    DayEnd,
}

pub const DAY_END: &str = "day_end";

/// The decision object exchanged with traveler policies, with the field
/// names used on the wire.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub decision: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
    #[serde(
        rename = "transport mode",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub transport_mode: Option<String>,
    #[serde(
        rename = "arrival time",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub arrival_time: Option<String>,
    #[serde(rename = "end time", default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<String>,
    #[serde(
        rename = "remaining stamina",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub remaining_stamina: Option<f64>,
    #[serde(
        rename = "total expense",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub total_expense: Option<f64>,
    #[serde(
        rename = "next planned location",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub next_planned_location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restaurant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionParseError(pub String);

impl fmt::Display for DecisionParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DecisionParseError {}

impl PolicyDecision {
    /// Splits a raw policy response into its free-text thought and decision.
    pub fn parse_response(raw: &str) -> Result<(String, PolicyDecision), DecisionParseError> {
        let (thought, value) = crate::text::split_json_object(raw).ok_or_else(|| {
            DecisionParseError("response contains no JSON decision object".into())
        })?;
        let decision =
            serde_json::from_value(value).map_err(|e| DecisionParseError(e.to_string()))?;
        Ok((thought.trim().to_string(), decision))
    }

    /// Resolves the wire record into an engine decision at clock time `now`.
    pub fn to_decision(&self, now: ClockTime) -> Result<Decision, DecisionParseError> {
        let err = |m: String| DecisionParseError(m);
        let duration_until =
            |field: &str, value: &Option<String>| -> Result<Option<u32>, DecisionParseError> {
                let Some(text) = value else { return Ok(None) };
                let end: ClockTime = text.parse().map_err(|e| err(format!("{field}: {e}")))?;
                if end <= now {
                    return Err(err(format!(
                        "{field} {end} is not after the current time {now}"
                    )));
                }
                Ok(Some(u32::from(end.minutes() - now.minutes())))
            };
        let decision = self.decision.trim().to_lowercase();
        if decision == DAY_END {
            return Ok(Decision::DayEnd);
        }
        let activity: Activity = decision
            .parse()
            .map_err(|_| err(format!("unknown decision `{}`", self.decision)))?;
        let action = match activity {
            Activity::Transit => {
                let destination = self
                    .destination
                    .clone()
                    .filter(|d| !d.trim().is_empty())
                    .ok_or_else(|| err("transit requires a destination".into()))?;
                let mode = self
                    .transport_mode
                    .as_deref()
                    .ok_or_else(|| err("transit requires a transport mode".into()))?
                    .parse()
                    .map_err(|e| err(format!("transport mode: {e}")))?;
                Action::Transit {
                    destination: destination.trim().to_string(),
                    mode,
                }
            }
            Activity::Rest => Action::Rest {
                duration_min: duration_until("end time", &self.end_time)?
                    .ok_or_else(|| err("rest requires an end time".into()))?,
            },
            Activity::Dine => Action::Dine {
                duration_min: duration_until("end time", &self.end_time)?,
                restaurant: self.restaurant.clone(),
            },
            Activity::Sightsee => Action::Sightsee {
                duration_min: duration_until("end time", &self.end_time)?,
            },
        };
        Ok(Decision::Act(action))
    }
}

/// A transit query result offered to the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitChoice {
    pub destination: String,
    pub options: Vec<TransitOption>,
}

/// Everything the engine tells the policy besides the history and the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOptions {
    pub legal: Vec<Activity>,
    pub destinations: Vec<String>,
    pub stamina_state: StaminaState,
    pub transit: Vec<TransitChoice>,
    pub dining: Vec<DiningOption>,
    pub steps_left_today: u32,
}

/// The request handed to a policy (and serialized for remote policies).
#[derive(Debug, Clone, Serialize)]
pub struct DecisionRequest<'a> {
    pub history: &'a [TravelerState],
    pub plan: &'a crate::model::Plan,
    pub profile: &'a crate::model::TravelerProfile,
    pub options: &'a DecisionOptions,
}

impl DecisionRequest<'_> {
    pub fn current(&self) -> &TravelerState {
        self.history
            .last()
            .expect("history always holds the initial state")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(h: u16, m: u16) -> ClockTime {
        ClockTime::hm(h, m).unwrap()
    }

    #[test]
    fn wire_field_names() {
        let d = PolicyDecision {
            decision: "transit".into(),
            departure: Some("Beijing West Railway Station".into()),
            destination: Some("Hotel".into()),
            transport_mode: Some("taxi".into()),
            arrival_time: Some("10:35".into()),
            remaining_stamina: Some(4.5),
            total_expense: Some(45.0),
            next_planned_location: Some("Hotel".into()),
            ..Default::default()
        };
        let json = serde_json::to_value(&d).unwrap();
        for key in [
            "decision",
            "departure",
            "destination",
            "transport mode",
            "arrival time",
            "remaining stamina",
            "total expense",
            "next planned location",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json.get("end time").is_none());
    }

    #[test]
    fn parse_react_response() {
        let raw = "Thought: we are exhausted, take a taxi.\n{\"decision\": \"transit\", \"destination\": \"Hotel\", \"transport mode\": \"Taxi\", \"remaining stamina\": 4.5}";
        let (thought, d) = PolicyDecision::parse_response(raw).unwrap();
        assert_eq!(thought, "Thought: we are exhausted, take a taxi.");
        assert_eq!(
            d.to_decision(at(10, 0)).unwrap(),
            Decision::Act(Action::Transit {
                destination: "Hotel".into(),
                mode: TransitMode::Taxi
            })
        );
    }

    #[test]
    fn end_times_become_durations() {
        let rest = PolicyDecision {
            decision: "rest".into(),
            end_time: Some("11:30".into()),
            ..Default::default()
        };
        assert_eq!(
            rest.to_decision(at(10, 45)).unwrap(),
            Decision::Act(Action::Rest { duration_min: 45 })
        );
        assert!(rest.to_decision(at(11, 30)).is_err());
        let dine = PolicyDecision {
            decision: "dine".into(),
            ..Default::default()
        };
        assert_eq!(
            dine.to_decision(at(12, 0)).unwrap(),
            Decision::Act(Action::Dine {
                duration_min: None,
                restaurant: None
            })
        );
        let end = PolicyDecision {
            decision: "day_end".into(),
            ..Default::default()
        };
        assert_eq!(end.to_decision(at(20, 0)).unwrap(), Decision::DayEnd);
    }

    #[test]
    fn malformed_decisions() {
        for bad in [
            PolicyDecision {
                decision: "fly".into(),
                ..Default::default()
            },
            PolicyDecision {
                decision: "transit".into(),
                transport_mode: Some("taxi".into()),
                ..Default::default()
            },
            PolicyDecision {
                decision: "transit".into(),
                destination: Some("X".into()),
                transport_mode: Some("rocket".into()),
                ..Default::default()
            },
            PolicyDecision {
                decision: "rest".into(),
                ..Default::default()
            },
            PolicyDecision {
                decision: "rest".into(),
                end_time: Some("25:00".into()),
                ..Default::default()
            },
        ] {
            assert!(bad.to_decision(at(9, 0)).is_err(), "{bad:?}");
        }
        assert!(PolicyDecision::parse_response("I will rest now.").is_err());
        assert!(PolicyDecision::parse_response("{\"destination\": \"x\"}").is_err());
    }
}
