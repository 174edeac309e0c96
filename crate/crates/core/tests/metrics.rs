mod common;

use std::collections::BTreeMap;

use common::{load, read};
use serde_json::Value;
use travelsim_core::metrics::{
    aggregate_dimensions, collect_feedback, cph, cpl, per_from_feedback, tpss, DimScores,
    FixtureEvaluator, Granularity, MetricsError, PerWeights, RuleMealJudge, ScoreCard,
    SimilarityProvider, TermFrequencyCosine,
};
use travelsim_core::sandbox::{
    extract_simulated_trajectory, run_simulation, ScriptedPolicy, SimConfig,
};
use travelsim_core::{extract_planned_trajectory, parse_plan, Plan, ValidationConfig};

fn plan_with(edit: impl Fn(&mut Value)) -> Plan {
    let fx = load();
    let mut doc: Value = serde_json::from_str(&read("plan.json")).unwrap();
    edit(&mut doc);
    parse_plan(&doc.to_string(), &fx.catalog).unwrap()
}

fn entries(doc: &mut Value) -> &mut Vec<Value> {
    doc["entries"].as_array_mut().unwrap()
}

fn drop_guidance(doc: &mut Value) {
    for e in entries(doc) {
        if e["location"] == "palace" {
            e.as_object_mut().unwrap().remove("guidance");
        }
    }
}

fn unanchor_day_two(doc: &mut Value) {
    entries(doc).retain(|e| !(e["day"] == 2 && e["start_time"] == "08:30"));
}

fn leave_from_elsewhere(doc: &mut Value) {
    entries(doc).retain(|e| !(e["day"] == 3 && e["start_time"] == "18:30"));
}

fn skip_dinner(doc: &mut Value) {
    entries(doc).retain(|e| !(e["day"] == 1 && e["location"] == "siji" && e["activity"] == "dine"));
}

#[test]
fn completeness_ladder() {
    let judge = RuleMealJudge::default();
    let config = ValidationConfig::default();
    let steps: [&dyn Fn(&mut Value); 4] = [
        &drop_guidance,
        &unanchor_day_two,
        &leave_from_elsewhere,
        &skip_dinner,
    ];
    let mut expected = 100.0;
    let full = cpl(&plan_with(|_| {}), &judge, &config);
    assert_eq!(full.score, expected);
    assert!(full.breakdown.format_ok());
    for n in 1..=4 {
        let plan = plan_with(|doc| steps[..n].iter().for_each(|f| f(doc)));
        expected -= 25.0;
        let result = cpl(&plan, &judge, &config);
        assert_eq!(
            result.score, expected,
            "after {n} faults: {:?}",
            result.breakdown
        );
        assert_eq!(result.breakdown.passed(), 4 - n);
    }
}

#[test]
fn failing_meal_judge_is_indeterminate() {
    struct Broken;
    impl travelsim_core::metrics::MealJudge for Broken {
        fn judge(&self, _: &Plan) -> Result<bool, travelsim_core::metrics::JudgeError> {
            Err(travelsim_core::metrics::JudgeError("offline".into()))
        }
    }
    let result = cpl(&plan_with(|_| {}), &Broken, &ValidationConfig::default());
    assert_eq!(result.score, 75.0);
    assert!(result.meals_indeterminate);
}

struct Fixed(BTreeMap<&'static str, f64>);

impl SimilarityProvider for Fixed {
    fn similarity(&self, _guidance: &str, post: &str) -> Result<f64, MetricsError> {
        Ok(self
            .0
            .iter()
            .find(|(k, _)| post.starts_with(**k))
            .map(|(_, v)| *v)
            .unwrap_or(0.0))
    }
}

#[test]
fn comprehensiveness_averages_per_poi() {
    let fx = load();
    let plan = &fx.plan;
    // Five POIs carry guidance; the quanjude dine entry has no post.
    let sim = Fixed(BTreeMap::from([
        ("Shichahai", 0.9),
        ("The Palace", 0.5),
        ("The Temple", -0.3),
        ("Yonghe", 0.7),
        ("Beihai", 0.4),
    ]));
    let result = cph(plan, &fx.posts, &sim).unwrap();
    let expected = 100.0 * (0.9 + 0.5 + 0.0 + 0.7 + 0.4 + 0.0) / 6.0;
    assert!((result.score - expected).abs() < 1e-9, "{}", result.score);
    assert_eq!(result.flagged().collect::<Vec<_>>(), vec!["quanjude"]);
    let real = cph(plan, &fx.posts, &TermFrequencyCosine).unwrap();
    assert!((0.0..=100.0).contains(&real.score) && real.score > 10.0);
}

#[test]
fn comprehensiveness_needs_guidance() {
    let fx = load();
    let bare = plan_with(|doc| {
        for e in entries(doc) {
            e.as_object_mut().unwrap().remove("guidance");
        }
    });
    assert!(cph(&bare, &fx.posts, &TermFrequencyCosine).is_err());
}

fn two_day_trace() -> travelsim_core::sandbox::Trace {
    let fx = load();
    let plan = plan_with(|doc| {
        entries(doc).retain(|e| e["day"] != 3);
        doc["days"] = 2.into();
    });
    let lines = [
        r#"{"decision": "transit", "destination": "Palace Museum", "transport mode": "taxi"}"#,
        r#"{"decision": "sightsee"}"#,
        r#"{"decision": "transit", "destination": "jingshan", "transport mode": "walking"}"#,
        r#"{"decision": "sightsee"}"#,
        r#"{"decision": "day_end"}"#,
        r#"{"decision": "transit", "destination": "Temple of Heaven", "transport mode": "taxi"}"#,
        r#"{"decision": "sightsee"}"#,
        r#"{"decision": "day_end"}"#,
    ];
    let mut policy = ScriptedPolicy::new(lines.iter().map(|l| l.to_string()).collect());
    run_simulation(
        &plan,
        fx.couple(),
        &mut policy,
        &fx.providers(),
        &SimConfig::default(),
    )
    .unwrap()
}

#[test]
fn feedback_counts_by_granularity() {
    let fx = load();
    let trace = two_day_trace();
    let records = collect_feedback(
        &trace,
        fx.couple(),
        &fx.catalog,
        &FixtureEvaluator::constant(70.0),
    )
    .unwrap();
    let count = |g| records.iter().filter(|r| r.granularity == g).count();
    assert_eq!(
        (
            count(Granularity::PerPoi),
            count(Granularity::PerDay),
            count(Granularity::PerTrip)
        ),
        (3, 2, 1)
    );
    assert_eq!(records.len(), 6);
    let pois: Vec<_> = records.iter().filter_map(|r| r.poi.as_deref()).collect();
    assert_eq!(pois, vec!["palace", "jingshan", "temple_heaven"]);
}

#[test]
fn out_of_range_feedback_is_clamped() {
    let fx = load();
    let trace = two_day_trace();
    let evaluator = FixtureEvaluator {
        per_poi: DimScores::uniform(120.0),
        per_day: DimScores::uniform(60.0),
        per_trip: DimScores::uniform(80.0),
    };
    let records = collect_feedback(&trace, fx.couple(), &fx.catalog, &evaluator).unwrap();
    for r in records
        .iter()
        .filter(|r| r.granularity == Granularity::PerPoi)
    {
        assert!(r.clamped);
        assert_eq!(r.scores, DimScores::uniform(100.0));
    }
    assert!(records
        .iter()
        .filter(|r| r.granularity != Granularity::PerPoi)
        .all(|r| !r.clamped));
    let per = per_from_feedback(&records, &PerWeights::default()).unwrap();
    // 0.6 * 80 + 0.4 * (0.6 * 60 + 0.4 * 100)
    let oracle = 0.6 * 80.0 + 0.4 * (0.6 * 60.0 + 0.4 * 100.0);
    assert!((per.ex - oracle).abs() < 1e-9);
    assert!((aggregate_dimensions(&per) - oracle).abs() < 1e-9);
}

#[test]
fn scorecard_for_scripted_couple() {
    let fx = load();
    let mut policy = ScriptedPolicy::from_jsonl(&read("decisions/elderly_couple.jsonl"));
    let trace = run_simulation(
        &fx.plan,
        fx.couple(),
        &mut policy,
        &fx.providers(),
        &SimConfig::default(),
    )
    .unwrap();
    let fea = tpss(
        &extract_planned_trajectory(&fx.plan),
        &extract_simulated_trajectory(&trace),
    )
    .unwrap();
    assert!((0.0..=100.0).contains(&fea));
    let records = collect_feedback(
        &trace,
        fx.couple(),
        &fx.catalog,
        &FixtureEvaluator::constant(75.0),
    )
    .unwrap();
    let per = per_from_feedback(&records, &PerWeights::default()).unwrap();
    let completeness = cpl(
        &fx.plan,
        &RuleMealJudge::default(),
        &ValidationConfig::default(),
    );
    let card = ScoreCard::new(50.0, &completeness, fea, per, Vec::new()).unwrap();
    assert_eq!(card.per_agg, 75.0);
    assert!((card.reward - 0.5).abs() < 1e-12);
    assert_eq!(
        card.csv_row("r").split(',').count(),
        ScoreCard::CSV_HEADER.split(',').count()
    );
}
