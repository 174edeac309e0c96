use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use travelsim_core::chat::SamplingParams;
use travelsim_core::metrics::{
    collect_feedback, cph, cpl, per_from_feedback, tpss, ChatEvaluator, CphResult, CplResult,
    Evaluator, FeedbackRecord, FixtureEvaluator, MetricsError, PerWeights, RuleMealJudge,
    ScoreCard, TermFrequencyCosine,
};
use travelsim_core::sandbox::{extract_simulated_trajectory, Trace};
use travelsim_core::{extract_planned_trajectory, parse_plan, Plan, ValidationConfig};

use crate::output::{display_name, pretty, write, Provenance};
use crate::sources::{read_input, Sources};
use crate::{Failure, GlobalArgs, ScoreArgs};

enum EvaluatorKind {
    Chat,
    Constant(f64),
}

fn parse_evaluator(text: &str) -> Result<EvaluatorKind, Failure> {
    if text == "chat" {
        return Ok(EvaluatorKind::Chat);
    }
    let value = text
        .strip_prefix("constant:")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Failure::usage(format!(
                "--evaluator must be `chat` or `constant:<score>`, got `{text}`"
            ))
        })?;
    Ok(EvaluatorKind::Constant(value))
}

struct Pair {
    run: String,
    plan_path: PathBuf,
    plan_text: String,
    plan: Plan,
    trace_path: PathBuf,
    trace_text: String,
    trace: Trace,
}

#[derive(Serialize)]
struct RunReport {
    run: String,
    plan: String,
    trace: String,
    scorecard: ScoreCard,
    cph_detail: Option<CphResult>,
    cpl_detail: CplResult,
    feedback: Vec<FeedbackRecord>,
}

fn run_name(trace_path: &Path, index: usize, total: usize) -> String {
    if total == 1 {
        return "run".into();
    }
    trace_path
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty() && n != ".")
        .unwrap_or_else(|| format!("run{}", index + 1))
}

fn score_pair(
    pair: &Pair,
    sources: &Sources,
    posts: &BTreeMap<String, String>,
    evaluator: &EvaluatorKind,
    weights: &PerWeights,
    seed: u64,
) -> Result<RunReport, Failure> {
    let bundle = &sources.bundle;
    let context = |e: MetricsError| Failure::usage(format!("{}: {e}", pair.run));
    let mut flags = Vec::new();

    let cph_result = match cph(&pair.plan, posts, &TermFrequencyCosine) {
        Ok(result) => {
            flags.extend(result.flagged().map(|poi| format!("missing post: {poi}")));
            Some(result)
        }
        Err(MetricsError::Argument(_)) => {
            flags.push("no guidance: cph scored 0".to_string());
            None
        }
        Err(e) => return Err(context(e)),
    };
    let completeness = cpl(
        &pair.plan,
        &RuleMealJudge::default(),
        &ValidationConfig::default(),
    );
    if completeness.meals_indeterminate {
        flags.push("meal judgement indeterminate".to_string());
    }
    let fea = tpss(
        &extract_planned_trajectory(&pair.plan),
        &extract_simulated_trajectory(&pair.trace),
    )
    .map_err(context)?;

    let profile_id = &pair.trace.header.profile_id;
    let profile = bundle.profile(profile_id).ok_or_else(|| {
        Failure::usage(format!(
            "{}: unknown profile `{profile_id}`",
            pair.trace_path.display()
        ))
    })?;
    let feedback = match evaluator {
        EvaluatorKind::Constant(value) => collect_feedback(
            &pair.trace,
            profile,
            &bundle.catalog,
            &FixtureEvaluator::constant(*value),
        ),
        EvaluatorKind::Chat => {
            let client = sources.chat_client()?;
            let chat = ChatEvaluator::new(
                client.as_ref(),
                SamplingParams {
                    seed: Some(seed),
                    ..SamplingParams::default()
                },
            );
            collect_feedback(
                &pair.trace,
                profile,
                &bundle.catalog,
                &chat as &dyn Evaluator,
            )
        }
    }
    .map_err(|e| Failure::pipeline(format!("{}: {e}", pair.run)))?;
    if feedback.iter().any(|r| r.clamped) {
        flags.push("feedback clamped into 0-100".to_string());
    }
    let per = per_from_feedback(&feedback, weights).map_err(context)?;

    if pair.trace.is_truncated() {
        flags.push(format!("truncated days: {:?}", pair.trace.truncated_days));
    }
    if let Some(abort) = &pair.trace.abort {
        flags.push(format!("simulation aborted: {abort}"));
    }
    let cph_score = cph_result.as_ref().map_or(0.0, |r| r.score);
    let scorecard = ScoreCard::new(cph_score, &completeness, fea, per, flags).map_err(context)?;
    Ok(RunReport {
        run: pair.run.clone(),
        plan: display_name(&pair.plan_path),
        trace: display_name(&pair.trace_path),
        scorecard,
        cph_detail: cph_result,
        cpl_detail: completeness,
        feedback,
    })
}

pub fn run(global: &GlobalArgs, args: &ScoreArgs) -> Result<(), Failure> {
    let evaluator = parse_evaluator(&args.evaluator)?;
    let weights = super::load_weights(global.weights.as_deref())?;
    if args.plans.len() != args.traces.len() && args.plans.len() != 1 {
        return Err(Failure::usage(format!(
            "give one --plan per --trace, or a single --plan (got {} plans, {} traces)",
            args.plans.len(),
            args.traces.len()
        )));
    }
    let sources = Sources::load(global)?;
    let bundle = &sources.bundle;
    let posts_text = args.posts.as_deref().map(read_input).transpose()?;
    let posts: BTreeMap<String, String> = match &posts_text {
        Some(text) => serde_json::from_str(text).map_err(|e| {
            Failure::usage(format!(
                "{}: {e}",
                args.posts.as_ref().expect("read above").display()
            ))
        })?,
        None => bundle.posts.clone(),
    };

    let total = args.traces.len();
    let mut pairs = Vec::with_capacity(total);
    for (i, trace_path) in args.traces.iter().enumerate() {
        let plan_path = if args.plans.len() == 1 {
            &args.plans[0]
        } else {
            &args.plans[i]
        };
        let plan_text = read_input(plan_path)?;
        let plan = parse_plan(&plan_text, &bundle.catalog)
            .map_err(|e| Failure::usage(format!("{}: {e}", plan_path.display())))?;
        let trace_text = read_input(trace_path)?;
        let trace = Trace::from_jsonl(&trace_text)
            .map_err(|e| Failure::usage(format!("{}: {e}", trace_path.display())))?;
        if trace.header.city != plan.city {
            return Err(Failure::usage(format!(
                "{}: trace city {} does not match plan city {}",
                trace_path.display(),
                trace.header.city,
                plan.city
            )));
        }
        pairs.push(Pair {
            run: run_name(trace_path, i, total),
            plan_path: plan_path.clone(),
            plan_text,
            plan,
            trace_path: trace_path.clone(),
            trace_text,
            trace,
        });
    }

    let seed = global.seed.unwrap_or(0);
    let reports = super::parallel(global.jobs, &pairs, |pair| {
        score_pair(pair, &sources, &posts, &evaluator, &weights, seed)
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let mut provenance = Provenance::new(
        "score",
        sources.label(),
        global.seed,
        json!({
            "evaluator": args.evaluator,
            "weights": weights,
            "similarity": "term_frequency_cosine",
            "meal_judge": RuleMealJudge::default(),
        }),
    );
    for pair in &pairs {
        provenance.input(
            format!("{}/{}", pair.run, display_name(&pair.plan_path)),
            pair.plan_text.as_bytes(),
        );
        provenance.input(
            format!("{}/{}", pair.run, display_name(&pair.trace_path)),
            pair.trace_text.as_bytes(),
        );
    }
    match (&args.posts, &posts_text) {
        (Some(path), Some(text)) => provenance.input(display_name(path), text.as_bytes()),
        _ => provenance
            .input_file(&sources.bundle_file("posts.json"))
            .unwrap_or(()),
    }
    let mut csv = format!("{}\n", ScoreCard::CSV_HEADER);
    for report in &reports {
        csv.push_str(&report.scorecard.csv_row(&report.run));
        csv.push('\n');
        for flag in &report.scorecard.flags {
            eprintln!("{}: {flag}", report.run);
        }
    }
    write(&global.out, "report.csv", &csv, Some(&mut provenance))?;
    write(
        &global.out,
        "scorecard.json",
        &pretty(&json!({"runs": reports, "provenance": provenance})),
        None,
    )?;
    Ok(())
}
