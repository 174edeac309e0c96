//! Simulation traces and their line-delimited JSON form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::FeedbackRecord;
use crate::model::{Money, Trajectory};

use super::{PolicyDecision, TravelerState};

pub const TRACE_SCHEMA: &str = "travelsim.trace/v1";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub city: String,
    pub seed: u64,
    pub profile_id: String,
    pub days: u32,
    pub hotel: String,
    pub origin_terminal: String,
}

/// One policy decision with the engine's authoritative accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub day: u32,
    /// The policy response exactly as received.
    pub raw: String,
    pub thought: String,
    pub decision: PolicyDecision,
    pub engine_stamina: f64,
    pub engine_outlay: Money,
    /// Inserted by the engine rather than chosen by the policy.
    #[serde(default)]
    pub synthetic: bool,
    /// The transit returns to a place already visited.
    #[serde(default)]
    pub revisit: bool,
}

/// The ordered record of one journey: `states[i + 1]` results from `decisions[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub header: TraceHeader,
    pub states: Vec<TravelerState>,
    pub decisions: Vec<DecisionRecord>,
    pub feedback: Vec<FeedbackRecord>,
    /// Days closed by the step cap rather than by the policy.
    pub truncated_days: Vec<u32>,
    pub abort: Option<String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TraceLine {
    Header(TraceHeader),
    State(TravelerState),
    Decision(DecisionRecord),
    Feedback(FeedbackRecord),
    Footer {
        truncated_days: Vec<u32>,
        abort: Option<String>,
    },
}

impl Trace {
    pub fn is_truncated(&self) -> bool {
        !self.truncated_days.is_empty()
    }

    /// Header, initial state, then alternating decision/state lines,
    /// feedback records and a footer; one JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut lines = vec![TraceLine::Header(self.header.clone())];
        let mut states = self.states.iter();
        if let Some(first) = states.next() {
            lines.push(TraceLine::State(first.clone()));
        }
        for (decision, state) in self.decisions.iter().zip(states) {
            lines.push(TraceLine::Decision(decision.clone()));
            lines.push(TraceLine::State(state.clone()));
        }
        lines.extend(self.feedback.iter().cloned().map(TraceLine::Feedback));
        lines.push(TraceLine::Footer {
            truncated_days: self.truncated_days.clone(),
            abort: self.abort.clone(),
        });
        let mut out = String::new();
        for line in &lines {
            out.push_str(&serde_json::to_string(line).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceError> {
        let mut trace = Trace::default();
        let mut saw_header = false;
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let line_no = i + 1;
            let record: TraceLine =
                serde_json::from_str(line).map_err(|source| TraceError::Json {
                    line: line_no,
                    source,
                })?;
            let structure = |message: &str| TraceError::Structure {
                line: line_no,
                message: message.to_string(),
            };
            match record {
                TraceLine::Header(h) if !saw_header => {
                    if h.schema != TRACE_SCHEMA {
                        return Err(structure(&format!("unsupported schema `{}`", h.schema)));
                    }
                    trace.header = h;
                    saw_header = true;
                }
                _ if !saw_header => return Err(structure("trace must start with a header")),
                TraceLine::Header(_) => return Err(structure("duplicate header")),
                TraceLine::State(s) => trace.states.push(s),
                TraceLine::Decision(d) => trace.decisions.push(d),
                TraceLine::Feedback(f) => trace.feedback.push(f),
                TraceLine::Footer {
                    truncated_days,
                    abort,
                } => {
                    trace.truncated_days = truncated_days;
                    trace.abort = abort;
                }
            }
        }
        if !saw_header {
            return Err(TraceError::Structure {
                line: 0,
                message: "empty trace".into(),
            });
        }
        if !trace.states.is_empty() && trace.decisions.len() + 1 != trace.states.len() {
            return Err(TraceError::Structure {
                line: 0,
                message: format!(
                    "{} decisions for {} states",
                    trace.decisions.len(),
                    trace.states.len()
                ),
            });
        }
        Ok(trace)
    }
}

/// One trajectory per journey day: an item each time the traveler is seen
/// at a new place, starting with where the day begins.
pub fn extract_simulated_trajectory(trace: &Trace) -> Vec<Trajectory> {
    let days = trace
        .header
        .days
        .max(trace.states.iter().map(|s| s.day).max().unwrap_or(0));
    (1..=days)
        .map(|day| {
            let mut trajectory = Trajectory {
                day,
                items: Vec::new(),
            };
            for state in trace.states.iter().filter(|s| s.day == day) {
                trajectory.push_if_moved(state.time, &state.location);
            }
            trajectory
        })
        .collect()
}
