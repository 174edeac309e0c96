use std::path::{Path, PathBuf};

use serde_json::json;
use travelsim_core::chat::SamplingParams;
use travelsim_core::sandbox::{
    run_simulation, ChatPolicy, EchoPolicy, Providers, ScriptedPolicy, SimConfig, Trace,
    TravelerPolicy,
};
use travelsim_core::{parse_plan, Plan};

use crate::output::{display_name, pretty, write, Provenance};
use crate::sources::{read_input, Sources};
use crate::{Failure, GlobalArgs, PolicyKind, SimulateArgs};

struct Job {
    plan_path: PathBuf,
    plan_text: String,
    plan: Plan,
    profile: String,
    out: PathBuf,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plan".into())
}

fn decisions_path(sources: &Sources, args: &SimulateArgs, profile: &str) -> PathBuf {
    args.decisions.clone().unwrap_or_else(|| {
        sources
            .bundle
            .dir
            .join("decisions")
            .join(format!("{}.jsonl", profile.replace('-', "_")))
    })
}

pub fn run(global: &GlobalArgs, args: &SimulateArgs) -> Result<(), Failure> {
    let seed = global
        .seed
        .ok_or_else(|| Failure::usage("simulate requires --seed"))?;
    let sources = Sources::load(global)?;
    let bundle = &sources.bundle;

    let mut jobs = Vec::new();
    for path in &args.plans {
        let text = read_input(path)?;
        let plan = parse_plan(&text, &bundle.catalog)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        if plan.city != bundle.manifest.city {
            return Err(Failure::usage(format!(
                "{}: plan city {} does not match the data ({})",
                path.display(),
                plan.city,
                bundle.manifest.city
            )));
        }
        let profiles = if args.profiles.is_empty() {
            vec![plan.traveler_ref.clone()]
        } else {
            args.profiles.clone()
        };
        for profile in profiles {
            if bundle.profile(&profile).is_none() {
                return Err(Failure::usage(format!("unknown profile `{profile}`")));
            }
            jobs.push(Job {
                plan_path: path.clone(),
                plan_text: text.clone(),
                plan: plan.clone(),
                profile,
                out: PathBuf::new(),
            });
        }
    }
    let single = jobs.len() == 1;
    for job in &mut jobs {
        job.out = if single {
            global.out.clone()
        } else {
            global
                .out
                .join(format!("{}--{}", stem(&job.plan_path), job.profile))
        };
    }
    let scripts = if args.policy == PolicyKind::Scripted {
        jobs.iter()
            .map(|j| {
                let path = decisions_path(&sources, args, &j.profile);
                read_input(&path).map(|text| (path, text))
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };

    let transit = sources.transit()?;
    let dining = bundle.dining();
    let sightsee = bundle.sightsee(seed);
    let providers = Providers {
        catalog: &bundle.catalog,
        transit: transit.as_ref(),
        dining: &dining,
        sightsee: &sightsee,
    };
    let config = SimConfig {
        seed,
        max_steps_per_day: args.max_steps,
        ..SimConfig::default()
    };

    let indices: Vec<usize> = (0..jobs.len()).collect();
    let results = super::parallel(
        global.jobs,
        &indices,
        |&i| -> Result<(Trace, Option<String>), Failure> {
            let job = &jobs[i];
            let profile = bundle.profile(&job.profile).expect("checked above");
            let client;
            let mut policy: Box<dyn TravelerPolicy> = match args.policy {
                PolicyKind::Scripted => Box::new(ScriptedPolicy::from_jsonl(&scripts[i].1)),
                PolicyKind::Echo => Box::new(EchoPolicy),
                PolicyKind::Remote => {
                    client = sources.chat_client()?;
                    Box::new(ChatPolicy::new(
                        client.as_ref(),
                        SamplingParams {
                            seed: Some(seed),
                            ..SamplingParams::default()
                        },
                    ))
                }
            };
            Ok(
                match run_simulation(&job.plan, profile, policy.as_mut(), &providers, &config) {
                    Ok(trace) => (trace, None),
                    Err(abort) => (*abort.trace, Some(abort.error.to_string())),
                },
            )
        },
    )?;

    let mut aborted = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        let (trace, error) = result?;
        let job = &jobs[i];
        let mut provenance = Provenance::new(
            "simulate",
            sources.label(),
            Some(seed),
            json!({
                "policy": format!("{:?}", args.policy).to_lowercase(),
                "profile": job.profile,
                "max_steps_per_day": args.max_steps,
                "decision_timeout_s": config.decision_timeout.as_secs(),
            }),
        );
        provenance.input(display_name(&job.plan_path), job.plan_text.as_bytes());
        provenance.input_file(&sources.bundle_file("transit.json"))?;
        provenance.input_file(&sources.bundle_file("profiles.json"))?;
        if let Some((path, text)) = scripts.get(i) {
            provenance.input(display_name(path), text.as_bytes());
        }
        let path = write(
            &job.out,
            "trace.jsonl",
            &trace.to_jsonl(),
            Some(&mut provenance),
        )?;
        write(
            &job.out,
            "simulate.provenance.json",
            &pretty(&json!({"provenance": provenance, "abort": error})),
            None,
        )?;
        if !trace.truncated_days.is_empty() {
            eprintln!(
                "warning: {}: step cap reached on days {:?}",
                path.display(),
                trace.truncated_days
            );
        }
        if let Some(error) = error {
            eprintln!(
                "{}: simulation aborted: {error} (partial trace kept)",
                path.display()
            );
            aborted.push(path.display().to_string());
        }
    }
    if aborted.is_empty() {
        Ok(())
    } else {
        Err(Failure::abort(format!(
            "{} simulation(s) aborted: {}",
            aborted.len(),
            aborted.join(", ")
        )))
    }
}
