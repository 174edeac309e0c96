//! Loads the beijing-mini fixture straight from disk for core integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;
use travelsim_core::sandbox::{
    RestaurantRecord, SightseeExperience, TableDining, TableSightsee, TableTransit, TransitRecord,
};
use travelsim_core::stamina::StaminaRule;
use travelsim_core::{parse_plan, Plan, PoiCatalog, TravelerProfile};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/beijing-mini")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub struct Fixture {
    pub catalog: PoiCatalog,
    pub transit: TableTransit,
    pub dining: TableDining,
    pub sightsee: TableSightsee,
    pub profiles: BTreeMap<String, TravelerProfile>,
    pub plan: Plan,
    pub posts: BTreeMap<String, String>,
}

#[derive(Deserialize)]
pub struct GoldenState {
    pub day: u32,
    pub time: String,
    pub location: String,
    pub stamina: f64,
    pub outlay: i64,
}

pub fn load() -> Fixture {
    let catalog = PoiCatalog::from_json(&read("pois.json")).expect("pois");
    let transit: Vec<TransitRecord> = serde_json::from_str(&read("transit.json")).expect("transit");
    let restaurants: Vec<RestaurantRecord> =
        serde_json::from_str(&read("restaurants.json")).expect("restaurants");
    let narratives: BTreeMap<String, Vec<SightseeExperience>> =
        serde_json::from_str(&read("narratives.json")).expect("narratives");
    let rules: BTreeMap<String, StaminaRule> =
        serde_json::from_str(&read("stamina_rules.json")).expect("rules");
    let raw_profiles: Vec<Value> = serde_json::from_str(&read("profiles.json")).expect("profiles");
    let profiles = raw_profiles
        .into_iter()
        .map(|mut p| {
            let key = p["stamina_rule"].as_str().expect("rule key").to_string();
            p["stamina_rule"] = serde_json::to_value(&rules[&key]).unwrap();
            let profile: TravelerProfile = serde_json::from_value(p).expect("profile");
            (profile.id.clone(), profile)
        })
        .collect();
    let plan = parse_plan(&read("plan.json"), &catalog).expect("plan");
    let posts = serde_json::from_str(&read("posts.json")).expect("posts");
    Fixture {
        transit: TableTransit::new(catalog.clone(), transit),
        dining: TableDining::new(catalog.clone(), restaurants),
        sightsee: TableSightsee::new(narratives, 7),
        catalog,
        profiles,
        plan,
        posts,
    }
}

impl Fixture {
    pub fn providers(&self) -> travelsim_core::sandbox::Providers<'_> {
        travelsim_core::sandbox::Providers {
            catalog: &self.catalog,
            transit: &self.transit,
            dining: &self.dining,
            sightsee: &self.sightsee,
        }
    }

    pub fn couple(&self) -> &TravelerProfile {
        &self.profiles["elderly-couple"]
    }
}
