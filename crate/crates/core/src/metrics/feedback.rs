//! Traveler feedback at POI, day and trip granularity.

use serde::{Deserialize, Serialize};

use crate::chat::{ChatClient, ChatMessage, ChatRequest, SamplingParams};
use crate::model::{PoiCatalog, TravelerProfile};
use crate::sandbox::{EventKind, Trace, TravelerState};

use super::per::{aggregate_per, DimScores, PerWeights};
use super::MetricsError;

const EVALUATOR_SYSTEM: &str = include_str!("../../templates/v1/evaluator_system.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerPoi,
    PerDay,
    PerTrip,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PerPoi => "per_poi",
            Self::PerDay => "per_day",
            Self::PerTrip => "per_trip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub granularity: Granularity,
    pub day: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poi: Option<String>,
    pub scores: DimScores,
    pub commentary: String,
    /// The evaluator returned scores outside 0-100 that were clamped.
    #[serde(default)]
    pub clamped: bool,
}

/// The slice of a journey an evaluator is asked about.
#[derive(Debug, Clone, Copy)]
pub struct EvaluationWindow<'a> {
    pub granularity: Granularity,
    /// Day being judged; 0 for the whole trip.
    pub day: u32,
    pub poi: Option<&'a str>,
    pub states: &'a [TravelerState],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub scores: DimScores,
    #[serde(default)]
    pub commentary: String,
}

pub trait Evaluator {
    fn evaluate(
        &self,
        window: &EvaluationWindow<'_>,
        profile: &TravelerProfile,
    ) -> Result<Evaluation, MetricsError>;
}

/// Returns configured scores per granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureEvaluator {
    pub per_poi: DimScores,
    pub per_day: DimScores,
    pub per_trip: DimScores,
}

impl FixtureEvaluator {
    pub fn constant(value: f64) -> Self {
        let s = DimScores::uniform(value);
        Self {
            per_poi: s,
            per_day: s,
            per_trip: s,
        }
    }
}

impl Evaluator for FixtureEvaluator {
    fn evaluate(
        &self,
        window: &EvaluationWindow<'_>,
        _profile: &TravelerProfile,
    ) -> Result<Evaluation, MetricsError> {
        let scores = match window.granularity {
            Granularity::PerPoi => self.per_poi,
            Granularity::PerDay => self.per_day,
            Granularity::PerTrip => self.per_trip,
        };
        Ok(Evaluation {
            scores,
            commentary: "fixture evaluation".into(),
        })
    }
}

/// Asks a chat model to score a window of the journey as the traveler.
pub struct ChatEvaluator<'a> {
    client: &'a dyn ChatClient,
    params: SamplingParams,
}

impl<'a> ChatEvaluator<'a> {
    pub fn new(client: &'a dyn ChatClient, params: SamplingParams) -> Self {
        Self { client, params }
    }
}

#[derive(Deserialize)]
struct WireEvaluation {
    ex: f64,
    it: f64,
    ar: f64,
    st: f64,
    co: f64,
    #[serde(default)]
    commentary: String,
}

impl Evaluator for ChatEvaluator<'_> {
    fn evaluate(
        &self,
        window: &EvaluationWindow<'_>,
        profile: &TravelerProfile,
    ) -> Result<Evaluation, MetricsError> {
        let body = serde_json::json!({
            "granularity": window.granularity,
            "day": window.day,
            "poi": window.poi,
            "states": window.states,
        });
        let request = ChatRequest {
            tag: format!("evaluate.{}", window.granularity.as_str()),
            messages: vec![
                ChatMessage::system(EVALUATOR_SYSTEM.replace("{profile}", &profile.describe())),
                ChatMessage::user(body.to_string()),
            ],
            params: self.params.clone(),
        };
        let response = self
            .client
            .complete(&request)
            .map_err(|e| MetricsError::Evaluator(e.to_string()))?;
        let (_, value) = crate::text::split_json_object(&response.text).ok_or_else(|| {
            MetricsError::Evaluator("evaluation response has no JSON object".into())
        })?;
        let wire: WireEvaluation =
            serde_json::from_value(value).map_err(|e| MetricsError::Evaluator(e.to_string()))?;
        Ok(Evaluation {
            scores: DimScores {
                ex: wire.ex,
                it: wire.it,
                ar: wire.ar,
                st: wire.st,
                co: wire.co,
            },
            commentary: wire.commentary,
        })
    }
}

fn record(
    evaluator: &dyn Evaluator,
    profile: &TravelerProfile,
    window: EvaluationWindow<'_>,
) -> Result<FeedbackRecord, MetricsError> {
    let evaluation = evaluator.evaluate(&window, profile)?;
    let (scores, clamped) = evaluation.scores.clamped();
    if clamped {
        log::warn!(
            "{} feedback for day {} clamped into 0-100",
            window.granularity.as_str(),
            window.day
        );
    }
    Ok(FeedbackRecord {
        granularity: window.granularity,
        day: window.day,
        poi: window.poi.map(str::to_string),
        scores,
        commentary: evaluation.commentary,
        clamped,
    })
}

/// One record per sightseeing event, one per simulated day and one for the trip.
pub fn collect_feedback(
    trace: &Trace,
    profile: &TravelerProfile,
    catalog: &PoiCatalog,
    evaluator: &dyn Evaluator,
) -> Result<Vec<FeedbackRecord>, MetricsError> {
    let mut records = Vec::new();
    let mut days: Vec<u32> = trace.states.iter().map(|s| s.day).collect();
    days.dedup();
    for day in days {
        for (i, state) in trace.states.iter().enumerate() {
            if state.day != day || state.event.kind != EventKind::Sightsee {
                continue;
            }
            let poi = catalog
                .resolve(&state.location)
                .map(|p| p.id.as_str())
                .unwrap_or(state.location.as_str());
            let window = EvaluationWindow {
                granularity: Granularity::PerPoi,
                day,
                poi: Some(poi),
                states: &trace.states[i..=i],
            };
            records.push(record(evaluator, profile, window)?);
        }
        let start = trace
            .states
            .iter()
            .position(|s| s.day == day)
            .expect("day taken from states");
        let end = trace
            .states
            .iter()
            .rposition(|s| s.day == day)
            .expect("day taken from states");
        let window = EvaluationWindow {
            granularity: Granularity::PerDay,
            day,
            poi: None,
            states: &trace.states[start..=end],
        };
        records.push(record(evaluator, profile, window)?);
    }
    let window = EvaluationWindow {
        granularity: Granularity::PerTrip,
        day: 0,
        poi: None,
        states: &trace.states,
    };
    records.push(record(evaluator, profile, window)?);
    Ok(records)
}

/// Aggregates feedback records into PER dimension scores.
///
/// A day without POI feedback uses its day verdict in place of the POI mean.
pub fn per_from_feedback(
    records: &[FeedbackRecord],
    weights: &PerWeights,
) -> Result<DimScores, MetricsError> {
    let mut trips = records
        .iter()
        .filter(|r| r.granularity == Granularity::PerTrip);
    let trip = trips
        .next()
        .ok_or_else(|| MetricsError::Argument("no per-trip feedback".into()))?;
    if trips.next().is_some() {
        return Err(MetricsError::Argument(
            "more than one per-trip record".into(),
        ));
    }
    let mut day_records: Vec<&FeedbackRecord> = records
        .iter()
        .filter(|r| r.granularity == Granularity::PerDay)
        .collect();
    day_records.sort_by_key(|r| r.day);
    let day_scores: Vec<DimScores> = day_records.iter().map(|r| r.scores).collect();
    let poi_day_scores: Vec<DimScores> = day_records
        .iter()
        .map(|d| {
            let pois = records
                .iter()
                .filter(|r| r.granularity == Granularity::PerPoi && r.day == d.day)
                .map(|r| &r.scores);
            DimScores::mean(pois).unwrap_or(d.scores)
        })
        .collect();
    aggregate_per(trip.scores, &day_scores, &poi_day_scores, weights)
}
