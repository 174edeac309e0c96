use serde_json::json;
use travelsim_core::spatial::preprocess;
use travelsim_core::PoiCatalog;

use crate::output::{display_name, pretty, write, Provenance};
use crate::sources::{read_input, Sources};
use crate::{Failure, GlobalArgs, PreprocessArgs};

pub fn run(global: &GlobalArgs, args: &PreprocessArgs) -> Result<(), Failure> {
    let (path, source) = match &args.pois {
        Some(path) => (path.clone(), "file".to_string()),
        None => {
            let sources = Sources::load(global)?;
            (sources.bundle_file("pois.json"), sources.label())
        }
    };
    let text = read_input(&path)?;
    let catalog = PoiCatalog::from_json(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let hotel = catalog
        .get(&args.hotel)
        .ok_or_else(|| Failure::usage(format!("unknown hotel `{}`", args.hotel)))?;
    if args.days == 0 {
        return Err(Failure::usage("--days must be at least 1"));
    }
    let seed = global.seed.unwrap_or(0);
    let report = preprocess(catalog.pois(), hotel, args.days, seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    if report.clamped {
        eprintln!(
            "note: {} days but only {} sightseeing POIs; using k = {}",
            args.days,
            report.clusters.len(),
            report.k
        );
    }
    let mut provenance = Provenance::new(
        "preprocess",
        source,
        Some(seed),
        json!({"hotel": args.hotel, "days": args.days}),
    );
    provenance.input(display_name(&path), text.as_bytes());
    let body = json!({"report": report, "provenance": provenance});
    write(&global.out, "clusters.json", &pretty(&body), None)?;
    Ok(())
}
