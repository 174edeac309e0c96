//! Rule-based stamina engine.
//!
//! A traveler group shares one stamina value bounded by `[0, cap]`, where
//! the cap is the profile's initial stamina. Sightseeing, resting and
//! transit change stamina at an hourly rate pro-rated by minutes; dining
//! changes it once per meal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Activity;

const BUILTIN_RULES: &str = include_str!("../data/stamina_rules.json");

#[derive(Debug, Error, PartialEq)]
pub enum StaminaError {
    #[error("transport mode `{0}` is not allowed for this traveler")]
    ForbiddenMode(TransitMode),
    #[error("{0}")]
    Argument(String),
    #[error("invalid stamina rule: {0}")]
    Rule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitMode {
    BusMetro,
    Taxi,
    Walking,
    Cycling,
}

impl TransitMode {
    pub const ALL: [TransitMode; 4] = [Self::BusMetro, Self::Taxi, Self::Walking, Self::Cycling];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::BusMetro => "bus_metro",
            Self::Taxi => "taxi",
            Self::Walking => "walking",
            Self::Cycling => "cycling",
        }
    }
}

impl fmt::Display for TransitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransitMode {
    type Err = StaminaError;

    /// Accepts the canonical names plus the loose spellings models tend to use.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric() || *c == '/')
            .collect();
        match key.as_str() {
            "busmetro"
            | "bus/metro"
            | "bus"
            | "metro"
            | "subway"
            | "publictransport"
            | "publictransportation" => Ok(Self::BusMetro),
            "taxi" | "car" | "cab" => Ok(Self::Taxi),
            "walking" | "walk" => Ok(Self::Walking),
            "cycling" | "cycle" | "bike" | "bicycle" => Ok(Self::Cycling),
            _ => Err(StaminaError::Argument(format!(
                "unknown transport mode `{s}`"
            ))),
        }
    }
}

/// Per-traveler-type exertion and recovery rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaminaRule {
    pub sightseeing_per_hr: f64,
    pub dining_per_event: f64,
    pub resting_per_hr: f64,
    pub transit_per_hr: BTreeMap<TransitMode, f64>,
    #[serde(default)]
    pub forbidden_modes: BTreeSet<TransitMode>,
    #[serde(default = "default_arrival_penalty")]
    pub arrival_penalty: f64,
}

fn default_arrival_penalty() -> f64 {
    2.0
}

impl StaminaRule {
    /// One of the shipped example rules: `single`, `couple`, `family`,
    /// `family_with_elder` or `group`.
    pub fn builtin(key: &str) -> Option<StaminaRule> {
        builtin_rules().remove(key)
    }

    pub fn validate(&self) -> Result<(), StaminaError> {
        let rates = [
            self.sightseeing_per_hr,
            self.dining_per_event,
            self.resting_per_hr,
            self.arrival_penalty,
        ];
        if !rates
            .iter()
            .chain(self.transit_per_hr.values())
            .all(|r| r.is_finite())
        {
            return Err(StaminaError::Rule("rates must be finite".into()));
        }
        if self.arrival_penalty < 0.0 {
            return Err(StaminaError::Rule(
                "arrival penalty must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Hourly rate for a mode. Modes that are forbidden or have no rate entry
    /// cannot be used.
    pub fn transit_rate(&self, mode: TransitMode) -> Result<f64, StaminaError> {
        if self.forbidden_modes.contains(&mode) {
            return Err(StaminaError::ForbiddenMode(mode));
        }
        self.transit_per_hr
            .get(&mode)
            .copied()
            .ok_or(StaminaError::ForbiddenMode(mode))
    }

    pub fn allowed_modes(&self) -> Vec<TransitMode> {
        TransitMode::ALL
            .into_iter()
            .filter(|m| self.transit_rate(*m).is_ok())
            .collect()
    }
}

/// All shipped example rules keyed by traveler type.
pub fn builtin_rules() -> BTreeMap<String, StaminaRule> {
    serde_json::from_str(BUILTIN_RULES).expect("builtin stamina rules are valid JSON")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaminaValue {
    value: f64,
    cap: f64,
}

impl StaminaValue {
    /// A value clamped into `[0, cap]`.
    pub fn new(value: f64, cap: f64) -> Self {
        Self {
            value: value.clamp(0.0, cap),
            cap,
        }
    }

    pub fn full(cap: f64) -> Self {
        Self { value: cap, cap }
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn cap(self) -> f64 {
        self.cap
    }

    fn shifted(self, delta: f64) -> Self {
        Self::new(self.value + delta, self.cap)
    }
}

/// Applies one activity's stamina delta.
pub fn apply_activity(
    stamina: StaminaValue,
    rule: &StaminaRule,
    activity: Activity,
    duration_min: u32,
    mode: Option<TransitMode>,
) -> Result<StaminaValue, StaminaError> {
    let hours = f64::from(duration_min) / 60.0;
    let delta = match (activity, mode) {
        (Activity::Transit, Some(mode)) => rule.transit_rate(mode)? * hours,
        (Activity::Transit, None) => {
            return Err(StaminaError::Argument(
                "transit requires a transport mode".into(),
            ))
        }
        (_, Some(_)) => {
            return Err(StaminaError::Argument(format!(
                "{activity} does not take a transport mode"
            )))
        }
        (Activity::Sightsee, None) => rule.sightseeing_per_hr * hours,
        (Activity::Rest, None) => rule.resting_per_hr * hours,
        (Activity::Dine, None) => rule.dining_per_event,
    };
    Ok(stamina.shifted(delta))
}

/// Applies the one-off penalty for arriving in a new city.
pub fn apply_arrival_penalty(stamina: StaminaValue, rule: &StaminaRule) -> StaminaValue {
    stamina.shifted(-rule.arrival_penalty)
}

/// Overnight recovery: eight hours of rest at the resting rate, capped.
pub fn overnight_recovery(stamina: StaminaValue, rule: &StaminaRule) -> StaminaValue {
    stamina.shifted(8.0 * rule.resting_per_hr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StaminaState {
    #[serde(rename = "Very Tired")]
    VeryTired,
    #[serde(rename = "Slightly Tired")]
    SlightlyTired,
    Good,
    Energetic,
}

impl StaminaState {
    pub fn label(self) -> &'static str {
        match self {
            Self::VeryTired => "Very Tired",
            Self::SlightlyTired => "Slightly Tired",
            Self::Good => "Good",
            Self::Energetic => "Energetic",
        }
    }
}

impl fmt::Display for StaminaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps a stamina value to the traveler-facing state. 6.0 itself is "Good".
pub fn stamina_state(value: f64) -> StaminaState {
    if value > 6.0 {
        StaminaState::Energetic
    } else if value >= 4.0 {
        StaminaState::Good
    } else if value >= 2.0 {
        StaminaState::SlightlyTired
    } else {
        StaminaState::VeryTired
    }
}
