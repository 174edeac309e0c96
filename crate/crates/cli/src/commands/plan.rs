use std::path::Path;

use serde::Deserialize;
use serde_json::json;
use travelsim_core::chat::SamplingParams;
use travelsim_core::maop::{
    assemble_context, decompose, plan_long_horizon, plan_maop, plan_naive_wide, route,
    AspectGuidance, ChatTranscript, MaopConfig, MaopError, PoiPost,
};
use travelsim_core::spatial::preprocess;
use travelsim_core::{validate_plan, Plan, ValidationConfig};

use crate::output::{pretty, write, Provenance};
use crate::sources::{read_input, Sources};
use crate::{Failure, GlobalArgs, Method, PlanArgs};

const LONG_HORIZON_GUIDANCE: &str = "Reason step by step through the whole trip before writing the plan: the traveler's needs, stamina over each day, geography, meals, budget and opening hours.";

#[derive(Deserialize)]
struct AspectRow {
    aspect: String,
    guidance: String,
}

fn read_aspects(path: &Path) -> Result<Vec<AspectGuidance>, Failure> {
    let rows: Vec<AspectRow> = serde_json::from_str(&read_input(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(rows
        .into_iter()
        .map(|r| AspectGuidance {
            aspect: r.aspect,
            guidance: r.guidance,
            sample_id: 0,
        })
        .collect())
}

fn pipeline_failure(global: &GlobalArgs, error: MaopError) -> Failure {
    if let Some(transcript) = error.transcript() {
        match write(
            &global.out,
            "transcript.json",
            &pretty(&json!({"transcript": transcript})),
            None,
        ) {
            Ok(path) => eprintln!("transcript written to {}", path.display()),
            Err(e) => eprintln!("could not write transcript: {}", e.message),
        }
    }
    match error {
        MaopError::Argument(message) => Failure::usage(message),
        other => Failure::pipeline(other.to_string()),
    }
}

pub fn run(global: &GlobalArgs, args: &PlanArgs) -> Result<(), Failure> {
    let sources = Sources::load(global)?;
    let bundle = &sources.bundle;
    let reference = bundle.plan.as_ref();
    let profile_id = args
        .profile
        .clone()
        .or_else(|| reference.map(|p| p.traveler_ref.clone()))
        .ok_or_else(|| Failure::usage("--profile is required when the bundle has no plan"))?;
    let profile = bundle
        .profile(&profile_id)
        .ok_or_else(|| Failure::usage(format!("unknown profile `{profile_id}`")))?;
    let days = args
        .days
        .or(reference.map(|p| p.days))
        .ok_or_else(|| Failure::usage("--days is required"))?;
    let hotel_id = args
        .hotel
        .clone()
        .or(reference.map(|p| p.hotel.clone()))
        .ok_or_else(|| Failure::usage("--hotel is required"))?;
    let origin_id = args
        .origin
        .clone()
        .or(reference.map(|p| p.origin_terminal.clone()))
        .ok_or_else(|| Failure::usage("--origin is required"))?;
    let hotel = bundle
        .catalog
        .get(&hotel_id)
        .ok_or_else(|| Failure::usage(format!("unknown hotel `{hotel_id}`")))?;
    let origin = bundle
        .catalog
        .get(&origin_id)
        .ok_or_else(|| Failure::usage(format!("unknown origin `{origin_id}`")))?;
    if days == 0 {
        return Err(Failure::usage("--days must be at least 1"));
    }
    let explicit_aspects = match (&args.aspects, args.method) {
        (Some(path), Method::NaiveWide) => {
            let aspects = read_aspects(path)?;
            if aspects.is_empty() {
                return Err(Failure::usage(format!(
                    "{}: no aspects to analyse",
                    path.display()
                )));
            }
            Some(aspects)
        }
        (Some(_), _) => {
            return Err(Failure::usage(
                "--aspects only applies to --method naive_wide",
            ))
        }
        (None, _) => None,
    };

    let seed = global.seed.unwrap_or(0);
    let report = preprocess(bundle.catalog.pois(), hotel, days as usize, seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let posts: Vec<PoiPost> = bundle
        .posts
        .iter()
        .map(|(id, text)| PoiPost {
            poi_id: id.clone(),
            poi_name: bundle
                .catalog
                .get(id)
                .map(|p| p.name.clone())
                .unwrap_or_else(|| id.clone()),
            text: text.clone(),
        })
        .collect();
    let context = assemble_context(profile, hotel, &posts, &report.routes, &report.bearings);
    let request = args.request.clone().unwrap_or_else(|| {
        format!(
            "Plan a {days}-day trip to {} for traveler `{profile_id}`, arriving at and leaving from {} (id: {}) and staying at {} (id: {}). Use traveler_ref \"{profile_id}\".",
            bundle.manifest.city, origin.name, origin.id, hotel.name, hotel.id
        )
    });
    let config = MaopConfig {
        n_samples: args.samples,
        max_aspects: args.max_aspects,
        params: SamplingParams {
            seed: Some(seed),
            ..SamplingParams::default()
        },
        ..MaopConfig::default()
    };
    let client = sources.chat_client()?;
    let client = client.as_ref();
    let catalog = &bundle.catalog;
    let fail = |e| pipeline_failure(global, e);

    let mut audit = serde_json::Map::new();
    let (plan, transcript): (Plan, ChatTranscript) = match args.method {
        Method::Maop => {
            let decomposition =
                decompose(&context, &request, config.n_samples, client, &config).map_err(fail)?;
            let routing =
                route(&decomposition.aspects, config.max_aspects, client, &config).map_err(fail)?;
            audit.insert("decomposition".into(), json!(decomposition));
            audit.insert("routing".into(), json!(routing));
            plan_maop(
                &routing.blueprint,
                &context,
                &request,
                client,
                catalog,
                &config,
            )
            .map_err(fail)?
        }
        Method::NaiveWide => {
            let aspects = match explicit_aspects {
                Some(aspects) => aspects,
                None => {
                    let decomposition =
                        decompose(&context, &request, config.n_samples, client, &config)
                            .map_err(fail)?;
                    audit.insert("decomposition".into(), json!(decomposition));
                    decomposition.aspects
                }
            };
            plan_naive_wide(&context, &request, &aspects, client, catalog, &config).map_err(fail)?
        }
        Method::LongHorizon => plan_long_horizon(
            &context,
            &request,
            LONG_HORIZON_GUIDANCE,
            client,
            catalog,
            &config,
        )
        .map_err(fail)?,
    };
    audit.insert("transcript".into(), json!(transcript));

    let validation = validate_plan(&plan, &ValidationConfig::default());
    for check in validation.checks.iter().filter(|c| !c.passed) {
        eprintln!("warning: {:?}: {}", check.criterion, check.detail);
    }
    let mut provenance = Provenance::new(
        "plan",
        sources.label(),
        Some(seed),
        json!({
            "method": args.method.as_str(),
            "profile": profile_id,
            "days": days,
            "hotel": hotel_id,
            "origin": origin_id,
            "samples": config.n_samples,
            "max_aspects": config.max_aspects,
            "template_version": travelsim_core::maop::TEMPLATE_VERSION,
            "request": request,
        }),
    );
    provenance.input_file(&sources.bundle_file("pois.json"))?;
    provenance.input_file(&sources.bundle_file("profiles.json"))?;
    if !sources.is_live() {
        provenance
            .input_file(&sources.bundle_file("chat.json"))
            .ok();
    }
    write(
        &global.out,
        "context.md",
        &context.render(),
        Some(&mut provenance),
    )?;
    write(
        &global.out,
        "plan.json",
        &format!("{}\n", plan.to_json()),
        Some(&mut provenance),
    )?;
    write(
        &global.out,
        "transcript.json",
        &pretty(&audit),
        Some(&mut provenance),
    )?;
    write(
        &global.out,
        "plan.provenance.json",
        &pretty(&json!({"provenance": provenance, "validation": validation})),
        None,
    )?;
    Ok(())
}
