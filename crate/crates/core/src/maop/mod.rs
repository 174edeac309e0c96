//! Wide-horizon planning: a strategist decomposes the request into aspects
//! and routes them into a blueprint; a planner then reasons over the
//! blueprint aspect by aspect in one conversation before writing the plan.
//! The long-horizon and naive wide-horizon baselines share the plumbing.

mod context;
mod parse;

use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{
    ChatClient, ChatError, ChatMessage, ChatRequest, ChatResponse, Role, SamplingParams,
};
use crate::model::{parse_plan, Plan, PoiCatalog};

pub use context::{assemble_context, ContextDocument, PoiPost, EMPTY_SECTION, SECTION_TITLES};
pub use parse::{normalize_title, parse_aspects, parse_blueprint, RoutedAspect};

const DECOMPOSE: &str = include_str!("../../templates/v1/strategist_decompose.txt");
const ROUTE: &str = include_str!("../../templates/v1/strategist_route.txt");
const PLANNER_SYSTEM: &str = include_str!("../../templates/v1/planner_system.txt");
const PLANNER_FIRST: &str = include_str!("../../templates/v1/planner_first.txt");
const PLANNER_ASPECT: &str = include_str!("../../templates/v1/planner_aspect.txt");
const PLAN_FORMAT: &str = include_str!("../../templates/v1/plan_format.txt");
const PLAN_REFORMAT: &str = include_str!("../../templates/v1/plan_reformat.txt");
const NAIVE_ASPECT: &str = include_str!("../../templates/v1/naive_aspect.txt");
const NAIVE_SYNTHESIS: &str = include_str!("../../templates/v1/naive_synthesis.txt");
const LONG_HORIZON: &str = include_str!("../../templates/v1/long_horizon.txt");

pub const TEMPLATE_VERSION: &str = "v1";

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    pairs
        .iter()
        .fold(template.to_string(), |acc, (key, value)| {
            acc.replace(&format!("{{{key}}}"), value)
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectGuidance {
    pub aspect: String,
    pub guidance: String,
    pub sample_id: usize,
}

/// The ordered aspects the planner works through.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blueprint {
    pub aspects: Vec<AspectGuidance>,
    /// For each blueprint aspect, the indices of the input aspects it draws on.
    pub provenance: Vec<BTreeSet<usize>>,
}

impl Blueprint {
    pub fn len(&self) -> usize {
        self.aspects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aspects.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnMeta {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<usize>,
    pub prompt_words: usize,
    pub response_words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChatTranscript {
    pub messages: Vec<ChatMessage>,
    /// One entry per assistant message.
    pub turns: Vec<TurnMeta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasoning: Vec<Option<String>>,
}

impl ChatTranscript {
    /// Number of model replies recorded.
    pub fn assistant_turns(&self) -> usize {
        self.messages
            .iter()
            .filter(|m| m.role == Role::Assistant)
            .count()
    }

    fn record(&mut self, tag: &str, aspect: Option<usize>, prompt: &str, response: &ChatResponse) {
        self.messages
            .push(ChatMessage::assistant(response.text.clone()));
        self.turns.push(TurnMeta {
            tag: tag.to_string(),
            aspect,
            prompt_words: prompt.split_whitespace().count(),
            response_words: response.text.split_whitespace().count(),
        });
        self.reasoning.push(response.reasoning.clone());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaopConfig {
    pub n_samples: usize,
    pub max_aspects: usize,
    pub max_in_flight: usize,
    pub params: SamplingParams,
}

impl Default for MaopConfig {
    fn default() -> Self {
        Self {
            n_samples: 4,
            max_aspects: 8,
            max_in_flight: 4,
            params: SamplingParams::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum MaopError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("chat call `{tag}` failed: {source}")]
    Chat { tag: String, source: ChatError },
    #[error("no strategist sample contained parseable aspects")]
    NoAspects { raw: Vec<String> },
    #[error("final plan unreadable after retry: {message}")]
    PlanParse {
        message: String,
        transcript: Box<ChatTranscript>,
    },
}

impl MaopError {
    pub fn transcript(&self) -> Option<&ChatTranscript> {
        match self {
            Self::PlanParse { transcript, .. } => Some(transcript),
            _ => None,
        }
    }
}

fn call(client: &dyn ChatClient, request: &ChatRequest) -> Result<ChatResponse, MaopError> {
    client.complete(request).map_err(|source| MaopError::Chat {
        tag: request.tag.clone(),
        source,
    })
}

/// Issues independent requests, at most `max_in_flight` at a time; results keep request order.
fn complete_all(
    client: &dyn ChatClient,
    requests: &[ChatRequest],
    max_in_flight: usize,
) -> Vec<Result<ChatResponse, MaopError>> {
    let mut out = Vec::with_capacity(requests.len());
    for chunk in requests.chunks(max_in_flight.max(1)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|r| scope.spawn(move || call(client, r)))
                .collect();
            out.extend(
                handles
                    .into_iter()
                    .map(|h| h.join().expect("chat worker panicked")),
            );
        });
    }
    out
}

fn sampled(params: &SamplingParams, offset: usize) -> SamplingParams {
    SamplingParams {
        seed: params.seed.map(|s| s.wrapping_add(offset as u64)),
        ..params.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub aspects: Vec<AspectGuidance>,
    pub raw: Vec<String>,
    pub warnings: Vec<String>,
}

/// Samples the strategist `n_samples` times and unions the aspects,
/// keeping the first occurrence of each case-folded title.
pub fn decompose(
    context: &ContextDocument,
    request: &str,
    n_samples: usize,
    client: &dyn ChatClient,
    config: &MaopConfig,
) -> Result<Decomposition, MaopError> {
    if n_samples == 0 {
        return Err(MaopError::Argument("n_samples must be at least 1".into()));
    }
    let prompt = fill(
        DECOMPOSE,
        &[("context", &context.render()), ("request", request)],
    );
    let requests: Vec<ChatRequest> = (0..n_samples)
        .map(|i| ChatRequest {
            tag: format!("decompose#{i}"),
            messages: vec![ChatMessage::user(prompt.clone())],
            params: sampled(&config.params, i),
        })
        .collect();
    let mut raw = Vec::with_capacity(n_samples);
    let mut warnings = Vec::new();
    let mut aspects: Vec<AspectGuidance> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut parsed_any = false;
    for (sample_id, result) in complete_all(client, &requests, config.max_in_flight)
        .into_iter()
        .enumerate()
    {
        let response = result?;
        let pairs = parse_aspects(&response.text);
        if pairs.is_empty() {
            let message = format!("strategist sample {sample_id} contained no aspects; skipped");
            warn!("{message}");
            warnings.push(message);
        } else {
            parsed_any = true;
        }
        for (aspect, guidance) in pairs {
            if seen.insert(normalize_title(&aspect)) {
                aspects.push(AspectGuidance {
                    aspect,
                    guidance,
                    sample_id,
                });
            }
        }
        raw.push(response.text);
    }
    if !parsed_any {
        return Err(MaopError::NoAspects { raw });
    }
    Ok(Decomposition {
        aspects,
        raw,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Routing {
    pub blueprint: Blueprint,
    pub raw: String,
    pub warnings: Vec<String>,
}

/// Asks the strategist to select, merge and order aspects into a blueprint
/// of at most `max_aspects` entries.
pub fn route(
    aspects: &[AspectGuidance],
    max_aspects: usize,
    client: &dyn ChatClient,
    config: &MaopConfig,
) -> Result<Routing, MaopError> {
    if aspects.is_empty() {
        return Err(MaopError::Argument("no aspects to route".into()));
    }
    if max_aspects == 0 {
        return Err(MaopError::Argument("max_aspects must be at least 1".into()));
    }
    let listing: String = aspects
        .iter()
        .enumerate()
        .map(|(i, a)| format!("{}. {}: {}\n", i + 1, a.aspect, a.guidance))
        .collect();
    let prompt = fill(
        ROUTE,
        &[
            ("max_aspects", &max_aspects.to_string()),
            ("aspects", listing.trim_end()),
        ],
    );
    let request = ChatRequest {
        tag: "route".into(),
        messages: vec![ChatMessage::user(prompt)],
        params: config.params.clone(),
    };
    let response = call(client, &request)?;
    let mut warnings = Vec::new();
    let mut blueprint = Blueprint {
        aspects: Vec::new(),
        provenance: Vec::new(),
    };
    for routed in parse_blueprint(&response.text) {
        let mut sources: BTreeSet<usize> = routed
            .sources
            .iter()
            .filter(|&&n| (1..=aspects.len()).contains(&n))
            .map(|n| n - 1)
            .collect();
        if sources.is_empty() {
            let title = normalize_title(&routed.aspect);
            sources = aspects
                .iter()
                .enumerate()
                .filter(|(_, a)| normalize_title(&a.aspect) == title)
                .map(|(i, _)| i)
                .collect();
        }
        if sources.is_empty() {
            warnings.push(format!(
                "blueprint aspect `{}` cites no known input aspect; dropped",
                routed.aspect
            ));
            continue;
        }
        let sample_id = aspects[*sources.first().expect("non-empty")].sample_id;
        blueprint.aspects.push(AspectGuidance {
            aspect: routed.aspect,
            guidance: routed.guidance,
            sample_id,
        });
        blueprint.provenance.push(sources);
    }
    if blueprint.is_empty() {
        warnings
            .push("routing produced no usable blueprint; using the input aspects in order".into());
        blueprint.aspects = aspects.to_vec();
        blueprint.provenance = (0..aspects.len()).map(|i| BTreeSet::from([i])).collect();
    }
    if blueprint.len() > max_aspects {
        warnings.push(format!(
            "blueprint of {} aspects truncated to {max_aspects}",
            blueprint.len()
        ));
        blueprint.aspects.truncate(max_aspects);
        blueprint.provenance.truncate(max_aspects);
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(Routing {
        blueprint,
        raw: response.text,
        warnings,
    })
}

/// Parses the final reply into a plan, asking once for a reformat on failure.
fn finish_plan(
    client: &dyn ChatClient,
    catalog: &PoiCatalog,
    params: &SamplingParams,
    retry_tag: &str,
    mut messages: Vec<ChatMessage>,
    mut transcript: ChatTranscript,
) -> Result<(Plan, ChatTranscript), MaopError> {
    let read = |text: &str| -> Result<Plan, String> {
        let (_, value) =
            crate::text::split_json_object(text).ok_or("no JSON object in the reply")?;
        parse_plan(&value.to_string(), catalog).map_err(|e| e.to_string())
    };
    let last = messages
        .last()
        .map(|m| m.content.clone())
        .unwrap_or_default();
    let error = match read(&last) {
        Ok(plan) => return Ok((plan, transcript)),
        Err(e) => e,
    };
    warn!("final plan unreadable ({error}); asking for a reformat");
    let prompt = fill(PLAN_REFORMAT, &[("error", &error)]);
    messages.push(ChatMessage::user(prompt.clone()));
    transcript.messages.push(ChatMessage::user(prompt.clone()));
    let request = ChatRequest {
        tag: retry_tag.into(),
        messages,
        params: params.clone(),
    };
    let response = call(client, &request)?;
    transcript.record(retry_tag, None, &prompt, &response);
    match read(&response.text) {
        Ok(plan) => Ok((plan, transcript)),
        Err(message) => Err(MaopError::PlanParse {
            message,
            transcript: Box::new(transcript),
        }),
    }
}

/// Runs the planner through the blueprint in one shared conversation,
/// one turn per aspect, then a formatting turn that yields the plan.
pub fn plan_maop(
    blueprint: &Blueprint,
    context: &ContextDocument,
    request: &str,
    client: &dyn ChatClient,
    catalog: &PoiCatalog,
    config: &MaopConfig,
) -> Result<(Plan, ChatTranscript), MaopError> {
    if blueprint.is_empty() {
        return Err(MaopError::Argument("blueprint is empty".into()));
    }
    let mut messages = vec![ChatMessage::system(PLANNER_SYSTEM.trim_end())];
    let mut transcript = ChatTranscript {
        messages: messages.clone(),
        ..Default::default()
    };
    let count = blueprint.len().to_string();
    let rendered = context.render();
    let mut turn =
        |tag: String, aspect: Option<usize>, prompt: String, messages: &mut Vec<ChatMessage>| {
            messages.push(ChatMessage::user(prompt.clone()));
            transcript.messages.push(ChatMessage::user(prompt.clone()));
            let chat = ChatRequest {
                tag: tag.clone(),
                messages: messages.clone(),
                params: config.params.clone(),
            };
            let response = call(client, &chat)?;
            transcript.record(&tag, aspect, &prompt, &response);
            messages.push(ChatMessage::assistant(response.text));
            Ok::<_, MaopError>(())
        };
    for (i, aspect) in blueprint.aspects.iter().enumerate() {
        let prompt = if i == 0 {
            fill(
                PLANNER_FIRST,
                &[
                    ("context", &rendered),
                    ("request", request),
                    ("count", &count),
                    ("title", &aspect.aspect),
                    ("guidance", &aspect.guidance),
                ],
            )
        } else {
            fill(
                PLANNER_ASPECT,
                &[
                    ("index", &(i + 1).to_string()),
                    ("title", &aspect.aspect),
                    ("guidance", &aspect.guidance),
                ],
            )
        };
        turn(format!("plan.aspect#{i}"), Some(i), prompt, &mut messages)?;
    }
    turn(
        "plan.format".into(),
        None,
        PLAN_FORMAT.trim_end().to_string(),
        &mut messages,
    )?;
    finish_plan(
        client,
        catalog,
        &config.params,
        "plan.reformat",
        messages,
        transcript,
    )
}

/// Analyses each aspect in an independent call, then synthesizes the plan
/// from the analyses in one more call.
pub fn plan_naive_wide(
    context: &ContextDocument,
    request: &str,
    aspects: &[AspectGuidance],
    client: &dyn ChatClient,
    catalog: &PoiCatalog,
    config: &MaopConfig,
) -> Result<(Plan, ChatTranscript), MaopError> {
    if aspects.is_empty() {
        return Err(MaopError::Argument("no aspects to analyze".into()));
    }
    let rendered = context.render();
    let requests: Vec<ChatRequest> = aspects
        .iter()
        .enumerate()
        .map(|(i, a)| ChatRequest {
            tag: format!("naive.aspect#{i}"),
            messages: vec![ChatMessage::user(fill(
                NAIVE_ASPECT,
                &[
                    ("context", &rendered),
                    ("request", request),
                    ("title", &a.aspect),
                    ("guidance", &a.guidance),
                ],
            ))],
            params: sampled(&config.params, i),
        })
        .collect();
    let mut transcript = ChatTranscript::default();
    let mut analyses = String::new();
    for (i, (req, result)) in requests
        .iter()
        .zip(complete_all(client, &requests, config.max_in_flight))
        .enumerate()
    {
        let response = result?;
        let prompt = &req.messages[0].content;
        transcript.messages.push(ChatMessage::user(prompt.clone()));
        transcript.record(&req.tag, Some(i), prompt, &response);
        analyses.push_str(&format!(
            "## {}\n\n{}\n\n",
            aspects[i].aspect,
            response.text.trim()
        ));
    }
    let prompt = format!(
        "{}\n\n{}",
        fill(
            NAIVE_SYNTHESIS,
            &[
                ("context", &rendered),
                ("request", request),
                ("analyses", analyses.trim_end())
            ]
        )
        .trim_end(),
        PLAN_FORMAT.trim_end()
    );
    single_shot(
        client,
        catalog,
        config,
        "naive.synthesis",
        "naive.reformat",
        prompt,
        transcript,
    )
}

/// One chain-of-thought call with the context and the planning guidance.
pub fn plan_long_horizon(
    context: &ContextDocument,
    request: &str,
    guidance: &str,
    client: &dyn ChatClient,
    catalog: &PoiCatalog,
    config: &MaopConfig,
) -> Result<(Plan, ChatTranscript), MaopError> {
    let prompt = format!(
        "{}\n\n{}",
        fill(
            LONG_HORIZON,
            &[
                ("context", &context.render()),
                ("request", request),
                ("guidance", guidance)
            ]
        )
        .trim_end(),
        PLAN_FORMAT.trim_end()
    );
    single_shot(
        client,
        catalog,
        config,
        "long_horizon",
        "long_horizon.reformat",
        prompt,
        ChatTranscript::default(),
    )
}

fn single_shot(
    client: &dyn ChatClient,
    catalog: &PoiCatalog,
    config: &MaopConfig,
    tag: &str,
    retry_tag: &str,
    prompt: String,
    mut transcript: ChatTranscript,
) -> Result<(Plan, ChatTranscript), MaopError> {
    let mut messages = vec![ChatMessage::user(prompt.clone())];
    transcript.messages.push(ChatMessage::user(prompt.clone()));
    let request = ChatRequest {
        tag: tag.into(),
        messages: messages.clone(),
        params: config.params.clone(),
    };
    let response = call(client, &request)?;
    transcript.record(tag, None, &prompt, &response);
    messages.push(ChatMessage::assistant(response.text));
    finish_plan(
        client,
        catalog,
        &config.params,
        retry_tag,
        messages,
        transcript,
    )
}
