use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use log::{debug, warn};
use thiserror::Error;

use crate::model::{
    normalize_place, Activity, ClockTime, Money, Plan, PoiCatalog, TravelerProfile,
};
use crate::stamina::{
    apply_activity, apply_arrival_penalty, overnight_recovery, StaminaValue, TransitMode,
};

use super::policy::TravelerPolicy;
use super::providers::{
    DiningProvider, ProviderError, SightseeProvider, TransitOption, TransitProvider,
};
use super::trace::{DecisionRecord, Trace, TraceHeader, TRACE_SCHEMA};
use super::{
    Action, Decision, DecisionOptions, DecisionRequest, Event, EventKind, PolicyDecision,
    TransitChoice, TravelerState, DAY_END,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub max_steps_per_day: u32,
    pub decision_timeout: Duration,
    /// Start of a day that has no planned entries.
    pub default_day_start: ClockTime,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_steps_per_day: 64,
            decision_timeout: Duration::from_secs(120),
            default_day_start: ClockTime::hm(8, 0).expect("valid time"),
        }
    }
}

/// The POI catalog and the three information services.
#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub catalog: &'a PoiCatalog,
    pub transit: &'a dyn TransitProvider,
    pub dining: &'a dyn DiningProvider,
    pub sightsee: &'a dyn SightseeProvider,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("environment error: {0}")]
    Environment(ProviderError),
    #[error("contract error: {0}")]
    Contract(String),
}

impl From<ProviderError> for StepError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::UnknownPlace(place) => {
                Self::Contract(format!("unknown place `{place}`"))
            }
            other => Self::Environment(other),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("environment error: {0}")]
    Environment(String),
    #[error("contract error: {0}")]
    Contract(String),
    #[error("malformed decision: {message}")]
    DecisionParse { message: String, raw: String },
    #[error("policy error: {0}")]
    Policy(String),
    #[error("decision took longer than {0:?}")]
    Timeout(Duration),
}

impl From<StepError> for SimError {
    fn from(e: StepError) -> Self {
        match e {
            StepError::Environment(p) => Self::Environment(p.to_string()),
            StepError::Contract(m) => Self::Contract(m),
        }
    }
}

/// A simulation that stopped early, with everything recorded up to that point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("simulation aborted: {error}")]
pub struct SimulationAbort {
    pub error: SimError,
    pub trace: Box<Trace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegalActions {
    pub kinds: BTreeSet<Activity>,
    /// Transit targets: plan places, hotel and terminal, minus the current location.
    pub destinations: Vec<String>,
}

/// Display name for a place: the catalog name when it resolves, else the trimmed input.
pub fn canonical_place(catalog: &PoiCatalog, place: &str) -> String {
    catalog
        .resolve(place)
        .map(|p| p.name.clone())
        .unwrap_or_else(|| place.trim().to_string())
}

pub fn legal_actions(state: &TravelerState, plan: &Plan, catalog: &PoiCatalog) -> LegalActions {
    let here = normalize_place(&state.location);
    let mut seen = BTreeSet::new();
    let mut destinations = Vec::new();
    let candidates = [
        canonical_place(catalog, &plan.hotel),
        canonical_place(catalog, &plan.origin_terminal),
    ]
    .into_iter()
    .chain(plan.entries.iter().map(|e| e.place.clone()));
    for place in candidates {
        let key = normalize_place(&place);
        if key != here && seen.insert(key) {
            destinations.push(place);
        }
    }
    let mut kinds = BTreeSet::from([Activity::Rest, Activity::Dine]);
    if !destinations.is_empty() {
        kinds.insert(Activity::Transit);
    }
    if catalog
        .resolve(&state.location)
        .is_some_and(|p| p.category.is_sightseeable())
    {
        kinds.insert(Activity::Sightsee);
    }
    LegalActions {
        kinds,
        destinations,
    }
}

/// Transit cost for the whole group: public modes per person, taxis per car of four.
pub fn group_fare(option: &TransitOption, group_size: u32) -> Money {
    match option.mode {
        TransitMode::Taxi => option.cost.times(group_size.div_ceil(4)),
        _ => option.cost.times(group_size),
    }
}

fn advance(time: ClockTime, minutes: u32) -> Result<ClockTime, StepError> {
    time.checked_add(minutes).ok_or_else(|| {
        StepError::Contract(format!(
            "activity of {minutes} min from {time} crosses midnight"
        ))
    })
}

/// Executes one action. The returned state carries the returned event.
pub fn step(
    state: &TravelerState,
    action: &Action,
    profile: &TravelerProfile,
    providers: &Providers<'_>,
) -> Result<(TravelerState, Event), StepError> {
    let rule = &profile.stamina_rule;
    let group = profile.group_size();
    let stamina_err = |e: crate::stamina::StaminaError| StepError::Contract(e.to_string());
    let (duration, cost, stamina, location, detail) = match action {
        Action::Transit { destination, mode } => {
            let target = canonical_place(providers.catalog, destination);
            if normalize_place(&target) == normalize_place(&state.location) {
                return Err(StepError::Contract(format!("already at `{target}`")));
            }
            rule.transit_rate(*mode).map_err(stamina_err)?;
            let options = providers
                .transit
                .query(&state.location, &target, state.time)?;
            if options.is_empty() {
                return Err(StepError::Environment(ProviderError::NoRoute {
                    from: state.location.clone(),
                    to: target,
                }));
            }
            let option = options.iter().find(|o| o.mode == *mode).ok_or_else(|| {
                StepError::Contract(format!("{mode} is not offered to `{target}`"))
            })?;
            let stamina = apply_activity(
                state.stamina,
                rule,
                Activity::Transit,
                option.duration_min,
                Some(*mode),
            )
            .map_err(stamina_err)?;
            (
                option.duration_min,
                group_fare(option, group),
                stamina,
                target,
                option.description.clone(),
            )
        }
        Action::Rest { duration_min } => {
            let stamina = apply_activity(state.stamina, rule, Activity::Rest, *duration_min, None)
                .map_err(stamina_err)?;
            (
                *duration_min,
                Money::ZERO,
                stamina,
                state.location.clone(),
                format!("rest at {}", state.location),
            )
        }
        Action::Dine {
            duration_min,
            restaurant,
        } => {
            let options = providers.dining.nearby(&state.location, state.time)?;
            let chosen = match restaurant {
                Some(name) => options
                    .iter()
                    .find(|o| normalize_place(&o.name) == normalize_place(name)),
                None => None,
            }
            .or_else(|| options.first())
            .ok_or_else(|| {
                StepError::Environment(ProviderError::Service(format!(
                    "no restaurant near `{}`",
                    state.location
                )))
            })?;
            let duration = duration_min.unwrap_or(chosen.duration_min);
            let stamina = apply_activity(state.stamina, rule, Activity::Dine, duration, None)
                .map_err(stamina_err)?;
            (
                duration,
                chosen.cost_estimate.times(group),
                stamina,
                state.location.clone(),
                chosen.name.clone(),
            )
        }
        Action::Sightsee { duration_min } => {
            let poi = providers
                .catalog
                .resolve(&state.location)
                .filter(|p| p.category.is_sightseeable())
                .ok_or_else(|| {
                    StepError::Contract(format!("nothing to see at `{}`", state.location))
                })?;
            let experience = providers.sightsee.experience(poi, profile, state)?;
            let duration = duration_min.unwrap_or(experience.suggested_duration_min);
            let stamina = apply_activity(state.stamina, rule, Activity::Sightsee, duration, None)
                .map_err(stamina_err)?;
            (
                duration,
                experience.cost.times(group),
                stamina,
                state.location.clone(),
                experience.narrative,
            )
        }
    };
    let end = advance(state.time, duration)?;
    let event = Event {
        kind: action.kind().into(),
        start: state.time,
        end,
        cost,
        detail,
    };
    let next = TravelerState {
        day: state.day,
        time: end,
        location,
        stamina,
        outlay: state.outlay + cost,
        event: event.clone(),
    };
    Ok((next, event))
}

/// Start time of `day`: its first planned entry, else the configured default.
pub fn day_start(plan: &Plan, day: u32, config: &SimConfig) -> ClockTime {
    plan.day_entries(day)
        .next()
        .map(|e| e.start_time)
        .unwrap_or(config.default_day_start)
}

/// The first place planned later today that differs from the current location.
pub fn next_planned_location(plan: &Plan, state: &TravelerState) -> Option<String> {
    let here = normalize_place(&state.location);
    plan.day_entries(state.day)
        .find(|e| e.start_time > state.time && normalize_place(&e.place) != here)
        .map(|e| e.place.clone())
}

/// The place of the plan entry in force at the current time.
fn current_planned_location(plan: &Plan, state: &TravelerState) -> Option<String> {
    plan.day_entries(state.day)
        .filter(|e| e.start_time <= state.time)
        .last()
        .map(|e| e.place.clone())
}

fn build_options(
    state: &TravelerState,
    plan: &Plan,
    providers: &Providers<'_>,
    last_decision: Option<&PolicyDecision>,
    steps_left_today: u32,
) -> DecisionOptions {
    let legal = legal_actions(state, plan, providers.catalog);
    let here = normalize_place(&state.location);
    let mut targets: Vec<String> = Vec::new();
    let candidates = [
        current_planned_location(plan, state),
        next_planned_location(plan, state),
        last_decision
            .and_then(|d| d.next_planned_location.clone())
            .map(|p| canonical_place(providers.catalog, &p)),
    ];
    for place in candidates.into_iter().flatten() {
        let key = normalize_place(&place);
        if key != here && !targets.iter().any(|t| normalize_place(t) == key) {
            targets.push(place);
        }
    }
    let transit = targets
        .into_iter()
        .filter_map(|destination| {
            match providers
                .transit
                .query(&state.location, &destination, state.time)
            {
                Ok(options) => Some(TransitChoice {
                    destination,
                    options,
                }),
                Err(e) => {
                    warn!("no transit options offered to `{destination}`: {e}");
                    None
                }
            }
        })
        .collect();
    let dining = providers
        .dining
        .nearby(&state.location, state.time)
        .unwrap_or_else(|e| {
            warn!("no dining options near `{}`: {e}", state.location);
            Vec::new()
        });
    DecisionOptions {
        legal: legal.kinds.into_iter().collect(),
        destinations: legal.destinations,
        stamina_state: state.stamina_state(),
        transit,
        dining,
        steps_left_today,
    }
}

struct Run<'a> {
    plan: &'a Plan,
    profile: &'a TravelerProfile,
    providers: &'a Providers<'a>,
    config: &'a SimConfig,
    trace: Trace,
}

impl Run<'_> {
    fn abort(mut self, error: SimError) -> SimulationAbort {
        self.trace.abort = Some(error.to_string());
        SimulationAbort {
            error,
            trace: Box::new(self.trace),
        }
    }

    fn current(&self) -> &TravelerState {
        self.trace
            .states
            .last()
            .expect("trace starts with the arrival state")
    }

    /// Closes the current day and, unless it was the last, opens the next one.
    fn end_day(&mut self, raw: String, thought: String, decision: PolicyDecision, synthetic: bool) {
        let state = self.current().clone();
        let rule = &self.profile.stamina_rule;
        let (day, time, stamina) = if state.day < self.plan.days {
            let next = state.day + 1;
            (
                next,
                day_start(self.plan, next, self.config),
                overnight_recovery(state.stamina, rule),
            )
        } else {
            (state.day, state.time, state.stamina)
        };
        let event = Event {
            kind: EventKind::DayEnd,
            start: state.time,
            end: state.time,
            cost: Money::ZERO,
            detail: String::new(),
        };
        self.trace.decisions.push(DecisionRecord {
            day: state.day,
            raw,
            thought,
            decision,
            engine_stamina: stamina.value(),
            engine_outlay: state.outlay,
            synthetic,
            revisit: false,
        });
        self.trace.states.push(TravelerState {
            day,
            time,
            location: state.location,
            stamina,
            outlay: state.outlay,
            event,
        });
    }

    fn visited_before(&self, place: &str) -> bool {
        let key = normalize_place(place);
        let hotel = normalize_place(&canonical_place(self.providers.catalog, &self.plan.hotel));
        key != hotel
            && self
                .trace
                .states
                .iter()
                .any(|s| normalize_place(&s.location) == key)
    }
}

/// Runs `policy` through the whole plan.
///
/// The trace opens at the origin terminal on day 1 with the arrival penalty
/// applied. Each day runs until the policy declares `day_end` or the daily
/// step cap forces it; the simulation ends after the last planned day.
pub fn run_simulation(
    plan: &Plan,
    profile: &TravelerProfile,
    policy: &mut dyn TravelerPolicy,
    providers: &Providers<'_>,
    config: &SimConfig,
) -> Result<Trace, SimulationAbort> {
    let header = TraceHeader {
        schema: TRACE_SCHEMA.to_string(),
        city: plan.city.clone(),
        seed: config.seed,
        profile_id: profile.id.clone(),
        days: plan.days,
        hotel: canonical_place(providers.catalog, &plan.hotel),
        origin_terminal: canonical_place(providers.catalog, &plan.origin_terminal),
    };
    let start = day_start(plan, 1, config);
    let rule = &profile.stamina_rule;
    let initial = TravelerState {
        day: 1,
        time: start,
        location: header.origin_terminal.clone(),
        stamina: apply_arrival_penalty(
            StaminaValue::new(profile.initial_stamina, profile.initial_stamina),
            rule,
        ),
        outlay: Money::ZERO,
        event: Event {
            kind: EventKind::Arrival,
            start,
            end: start,
            cost: Money::ZERO,
            detail: format!("arrive in {}", plan.city),
        },
    };
    let mut run = Run {
        plan,
        profile,
        providers,
        config,
        trace: Trace {
            header,
            states: vec![initial],
            ..Trace::default()
        },
    };

    for day in 1..=plan.days {
        let mut steps = 0u32;
        loop {
            if steps >= config.max_steps_per_day {
                warn!("day {day} hit the step cap of {}", config.max_steps_per_day);
                run.trace.truncated_days.push(day);
                let decision = PolicyDecision {
                    decision: DAY_END.into(),
                    ..Default::default()
                };
                run.end_day(String::new(), "step cap reached".into(), decision, true);
                break;
            }
            let options = build_options(
                run.current(),
                plan,
                providers,
                run.trace.decisions.last().map(|d| &d.decision),
                config.max_steps_per_day - steps,
            );
            let request = DecisionRequest {
                history: &run.trace.states,
                plan,
                profile,
                options: &options,
            };
            let started = Instant::now();
            let raw = match policy.decide(&request) {
                Ok(raw) => raw,
                Err(e) => return Err(run.abort(SimError::Policy(e.to_string()))),
            };
            if started.elapsed() > config.decision_timeout {
                return Err(run.abort(SimError::Timeout(config.decision_timeout)));
            }
            let now = run.current().time;
            let parsed = PolicyDecision::parse_response(&raw)
                .and_then(|(thought, d)| d.to_decision(now).map(|action| (thought, d, action)));
            let (thought, decision, action) = match parsed {
                Ok(parsed) => parsed,
                Err(e) => return Err(run.abort(SimError::DecisionParse { message: e.0, raw })),
            };
            let action = match action {
                Decision::DayEnd => {
                    run.end_day(raw, thought, decision, false);
                    break;
                }
                Decision::Act(action) => action,
            };
            let legal = legal_actions(run.current(), plan, providers.catalog);
            if !legal.kinds.contains(&action.kind()) {
                let message = format!(
                    "{} is not available at `{}`",
                    action.kind(),
                    run.current().location
                );
                return Err(run.abort(SimError::Contract(message)));
            }
            let (next, _event) = match step(run.current(), &action, profile, providers) {
                Ok(result) => result,
                Err(e) => return Err(run.abort(e.into())),
            };
            let revisit =
                matches!(action, Action::Transit { .. }) && run.visited_before(&next.location);
            debug!(
                "day {day} step {steps}: {:?} -> {} at {}",
                action.kind(),
                next.location,
                next.time
            );
            run.trace.decisions.push(DecisionRecord {
                day,
                raw,
                thought,
                decision,
                engine_stamina: next.stamina.value(),
                engine_outlay: next.outlay,
                synthetic: false,
                revisit,
            });
            run.trace.states.push(next);
            steps += 1;
        }
    }
    Ok(run.trace)
}
