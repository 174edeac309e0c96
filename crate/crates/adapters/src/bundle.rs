//! File-backed fixture bundles: POIs, transit matrix, restaurants, sightseeing
//! narratives, traveler profiles and canned chat responses in one directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use travelsim_core::chat::ScriptedChatClient;
use travelsim_core::sandbox::{
    RestaurantRecord, SightseeExperience, TableDining, TableSightsee, TableTransit, TransitRecord,
};
use travelsim_core::stamina::StaminaRule;
use travelsim_core::{
    parse_plan, GroupMember, Money, Plan, PoiCatalog, TravelerProfile, TravelerType,
};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

pub const REQUIRED_FILES: [&str; 7] = [
    "bundle.json",
    "pois.json",
    "transit.json",
    "restaurants.json",
    "narratives.json",
    "profiles.json",
    "stamina_rules.json",
];

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{dir}: missing file `{file}`")]
    MissingFile { dir: PathBuf, file: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error("{file}: unsupported schema version {found} (expected {BUNDLE_SCHEMA_VERSION})")]
    SchemaVersion { file: String, found: u32 },
    #[error("{file}: dangling reference: {message}")]
    DanglingReference { file: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub schema_version: u32,
    pub name: String,
    pub city: String,
    pub currency: String,
    #[serde(default = "default_minor_units")]
    pub minor_units: u32,
}

fn default_minor_units() -> u32 {
    100
}

/// A profile row whose stamina rule is either inline or a key into `stamina_rules.json`.
#[derive(Deserialize)]
struct ProfileRow {
    id: String,
    group: Vec<GroupMember>,
    type_label: TravelerType,
    preferences: String,
    budget: Money,
    initial_stamina: f64,
    stamina_rule: RuleRef,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RuleRef {
    Key(String),
    Inline(StaminaRule),
}

#[derive(Debug, Clone)]
pub struct FixtureBundle {
    pub dir: PathBuf,
    pub manifest: BundleManifest,
    pub catalog: PoiCatalog,
    pub transit_matrix: Vec<TransitRecord>,
    pub restaurants: Vec<RestaurantRecord>,
    pub sightsee_narratives: BTreeMap<String, Vec<SightseeExperience>>,
    pub stamina_rules: BTreeMap<String, StaminaRule>,
    pub traveler_profiles: BTreeMap<String, TravelerProfile>,
    /// Blog posts keyed by POI id.
    pub posts: BTreeMap<String, String>,
    /// Canned chat responses keyed by request tag.
    pub canned_chat_responses: BTreeMap<String, Vec<String>>,
    /// The bundle's reference plan, if it ships one.
    pub plan: Option<Plan>,
}

fn read_text(dir: &Path, file: &str) -> Result<String, BundleError> {
    let path = dir.join(file);
    fs::read_to_string(&path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            BundleError::MissingFile {
                dir: dir.to_path_buf(),
                file: file.to_string(),
            }
        } else {
            BundleError::Io { path, source }
        }
    })
}

fn parse<T: DeserializeOwned>(file: &str, text: &str) -> Result<T, BundleError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| BundleError::Parse {
        file: file.to_string(),
        message: format!("at {}: {}", e.path(), e.inner()),
    })
}

fn read_json<T: DeserializeOwned>(dir: &Path, file: &str) -> Result<T, BundleError> {
    parse(file, &read_text(dir, file)?)
}

fn read_optional<T: DeserializeOwned + Default>(dir: &Path, file: &str) -> Result<T, BundleError> {
    match read_text(dir, file) {
        Ok(text) => parse(file, &text),
        Err(BundleError::MissingFile { .. }) => Ok(T::default()),
        Err(e) => Err(e),
    }
}

fn dangling(file: &str, message: String) -> BundleError {
    BundleError::DanglingReference {
        file: file.to_string(),
        message,
    }
}

/// Loads a bundle directory and checks that every cross-file reference resolves.
pub fn load_fixture_bundle(dir: impl AsRef<Path>) -> Result<FixtureBundle, BundleError> {
    let dir = dir.as_ref();
    for file in REQUIRED_FILES {
        if !dir.join(file).is_file() {
            return Err(BundleError::MissingFile {
                dir: dir.to_path_buf(),
                file: file.to_string(),
            });
        }
    }
    let manifest: BundleManifest = read_json(dir, "bundle.json")?;
    if manifest.schema_version != BUNDLE_SCHEMA_VERSION {
        return Err(BundleError::SchemaVersion {
            file: "bundle.json".into(),
            found: manifest.schema_version,
        });
    }
    let catalog =
        PoiCatalog::new(read_json(dir, "pois.json")?).map_err(|e| BundleError::Parse {
            file: "pois.json".into(),
            message: e.to_string(),
        })?;
    let known = |id: &str| catalog.get(id).is_some();

    let transit_matrix: Vec<TransitRecord> = read_json(dir, "transit.json")?;
    for edge in &transit_matrix {
        for end in [&edge.from, &edge.to] {
            if !known(end) {
                return Err(dangling(
                    "transit.json",
                    format!(
                        "edge {} -> {} names unknown POI `{end}`",
                        edge.from, edge.to
                    ),
                ));
            }
        }
    }

    let restaurants: Vec<RestaurantRecord> = read_json(dir, "restaurants.json")?;
    for r in &restaurants {
        if let Some(id) = r.near.iter().find(|id| !known(id)) {
            return Err(dangling(
                "restaurants.json",
                format!("restaurant `{}` is near unknown POI `{id}`", r.name),
            ));
        }
    }

    let sightsee_narratives: BTreeMap<String, Vec<SightseeExperience>> =
        read_json(dir, "narratives.json")?;
    for (id, variants) in &sightsee_narratives {
        let poi = catalog
            .get(id)
            .ok_or_else(|| dangling("narratives.json", format!("unknown POI `{id}`")))?;
        if !poi.category.is_sightseeable() {
            return Err(dangling(
                "narratives.json",
                format!("POI `{id}` cannot be sightseen"),
            ));
        }
        if variants.is_empty() {
            return Err(BundleError::Parse {
                file: "narratives.json".into(),
                message: format!("`{id}` has no variants"),
            });
        }
    }

    let stamina_rules: BTreeMap<String, StaminaRule> = read_json(dir, "stamina_rules.json")?;
    for (key, rule) in &stamina_rules {
        rule.validate().map_err(|e| BundleError::Parse {
            file: "stamina_rules.json".into(),
            message: format!("`{key}`: {e}"),
        })?;
    }

    let rows: Vec<ProfileRow> = read_json(dir, "profiles.json")?;
    let mut traveler_profiles = BTreeMap::new();
    for row in rows {
        let stamina_rule = match row.stamina_rule {
            RuleRef::Inline(rule) => rule,
            RuleRef::Key(key) => stamina_rules.get(&key).cloned().ok_or_else(|| {
                dangling(
                    "profiles.json",
                    format!("profile `{}` uses unknown stamina rule `{key}`", row.id),
                )
            })?,
        };
        let profile = TravelerProfile {
            id: row.id,
            group: row.group,
            type_label: row.type_label,
            preferences: row.preferences,
            budget: row.budget,
            initial_stamina: row.initial_stamina,
            stamina_rule,
        };
        profile.validate().map_err(|e| BundleError::Parse {
            file: "profiles.json".into(),
            message: e.to_string(),
        })?;
        if traveler_profiles
            .insert(profile.id.clone(), profile)
            .is_some()
        {
            return Err(BundleError::Parse {
                file: "profiles.json".into(),
                message: "duplicate profile id".into(),
            });
        }
    }

    let posts: BTreeMap<String, String> = read_optional(dir, "posts.json")?;
    if let Some(id) = posts.keys().find(|id| !known(id)) {
        return Err(dangling(
            "posts.json",
            format!("post for unknown POI `{id}`"),
        ));
    }
    let canned_chat_responses: BTreeMap<String, Vec<String>> = read_optional(dir, "chat.json")?;

    let plan = match read_text(dir, "plan.json") {
        Ok(text) => {
            let plan = parse_plan(&text, &catalog).map_err(|e| BundleError::Parse {
                file: "plan.json".into(),
                message: e.to_string(),
            })?;
            if !traveler_profiles.contains_key(&plan.traveler_ref) {
                return Err(dangling(
                    "plan.json",
                    format!("unknown traveler `{}`", plan.traveler_ref),
                ));
            }
            Some(plan)
        }
        Err(BundleError::MissingFile { .. }) => None,
        Err(e) => return Err(e),
    };

    Ok(FixtureBundle {
        dir: dir.to_path_buf(),
        manifest,
        catalog,
        transit_matrix,
        restaurants,
        sightsee_narratives,
        stamina_rules,
        traveler_profiles,
        posts,
        canned_chat_responses,
        plan,
    })
}

impl FixtureBundle {
    pub fn profile(&self, id: &str) -> Option<&TravelerProfile> {
        self.traveler_profiles.get(id)
    }

    pub fn transit(&self) -> TableTransit {
        TableTransit::new(self.catalog.clone(), self.transit_matrix.clone())
    }

    pub fn dining(&self) -> TableDining {
        TableDining::new(self.catalog.clone(), self.restaurants.clone())
    }

    pub fn sightsee(&self, seed: u64) -> TableSightsee {
        TableSightsee::new(self.sightsee_narratives.clone(), seed)
    }

    /// A fresh replay client over the canned chat responses.
    pub fn chat_client(&self) -> ScriptedChatClient {
        ScriptedChatClient::new(self.canned_chat_responses.clone())
    }

    /// Whether every ordered pair of distinct POIs has a transit edge.
    pub fn has_full_transit_matrix(&self) -> bool {
        let edges: BTreeSet<(&str, &str)> = self
            .transit_matrix
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str()))
            .collect();
        let ids: Vec<&str> = self.catalog.iter().map(|p| p.id.as_str()).collect();
        ids.iter()
            .all(|a| ids.iter().all(|b| a == b || edges.contains(&(*a, *b))))
    }

    /// Scripted decision files under `decisions/`, keyed by file stem.
    pub fn decision_scripts(&self) -> Result<BTreeMap<String, String>, BundleError> {
        let dir = self.dir.join("decisions");
        let mut out = BTreeMap::new();
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(source) => return Err(BundleError::Io { path: dir, source }),
        };
        for entry in entries {
            let path = entry
                .map_err(|source| BundleError::Io {
                    path: dir.clone(),
                    source,
                })?
                .path();
            if path.extension().is_some_and(|x| x == "jsonl") {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let text = fs::read_to_string(&path).map_err(|source| BundleError::Io {
                    path: path.clone(),
                    source,
                })?;
                out.insert(stem, text);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_optional_files_default() {
        let dir = tempfile::tempdir().unwrap();
        let posts: BTreeMap<String, String> = read_optional(dir.path(), "posts.json").unwrap();
        assert!(posts.is_empty());
    }

    #[test]
    fn parse_errors_name_the_path() {
        let err =
            parse::<Vec<RestaurantRecord>>("restaurants.json", r#"[{"name": "x", "near": 3}]"#)
                .unwrap_err();
        let text = err.to_string();
        assert!(text.starts_with("restaurants.json"), "{text}");
        assert!(text.contains("near"), "{text}");
    }
}
