//! Domain types shared by every stage: POIs, profiles, plans and trajectories.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::stamina::StaminaRule;

/// Minutes in a day. Times are always `< MINUTES_PER_DAY`.
pub const MINUTES_PER_DAY: u16 = 1440;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("unresolvable reference at `{field}`: no POI `{id}`")]
    Reference { field: String, id: String },
}

impl PlanError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    Coordinate { lat: f64, lon: f64 },
    #[error("invalid clock time `{0}` (expected HH:MM between 00:00 and 23:59)")]
    ClockTime(String),
    #[error("unknown activity `{0}`")]
    Activity(String),
    #[error("invalid traveler profile `{id}`: {message}")]
    Profile { id: String, message: String },
    #[error("duplicate POI id `{0}`")]
    DuplicatePoi(String),
}

/// A WGS-84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeoPoint")]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Deserialize)]
struct RawGeoPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawGeoPoint> for GeoPoint {
    type Error = ModelError;

    fn try_from(raw: RawGeoPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, ModelError> {
        let ok = lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon);
        if ok {
            Ok(Self { lat, lon })
        } else {
            Err(ModelError::Coordinate { lat, lon })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiCategory {
    Attraction,
    Restaurant,
    Hotel,
    Station,
    Other,
}

impl PoiCategory {
    /// Whether a traveler can sightsee at a POI of this category.
    pub fn is_sightseeable(self) -> bool {
        matches!(self, Self::Attraction | Self::Other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub category: PoiCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blog_excerpt: Option<String>,
}

/// Case-folded, whitespace-collapsed form of a place name. Trajectory
/// locations are compared in this form.
pub fn normalize_place(name: &str) -> String {
    name.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// POI dataset indexed by id and by normalized name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoiCatalog {
    pois: Vec<Poi>,
    by_id: BTreeMap<String, usize>,
    by_name: BTreeMap<String, usize>,
}

impl PoiCatalog {
    pub fn new(pois: Vec<Poi>) -> Result<Self, ModelError> {
        let mut by_id = BTreeMap::new();
        let mut by_name = BTreeMap::new();
        for (idx, poi) in pois.iter().enumerate() {
            if by_id.insert(poi.id.clone(), idx).is_some() {
                return Err(ModelError::DuplicatePoi(poi.id.clone()));
            }
            by_name.entry(normalize_place(&poi.name)).or_insert(idx);
        }
        Ok(Self {
            pois,
            by_id,
            by_name,
        })
    }

    /// Parses a JSON array of POI records.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let pois: Vec<Poi> = serde_json::from_str(text)?;
        Self::new(pois).map_err(serde::de::Error::custom)
    }

    pub fn get(&self, id: &str) -> Option<&Poi> {
        self.by_id.get(id).map(|&i| &self.pois[i])
    }

    /// Looks a place up by POI id first, then by normalized name.
    pub fn resolve(&self, place: &str) -> Option<&Poi> {
        self.get(place).or_else(|| {
            self.by_name
                .get(&normalize_place(place))
                .map(|&i| &self.pois[i])
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Poi> {
        self.pois.iter()
    }

    pub fn len(&self) -> usize {
        self.pois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pois.is_empty()
    }

    pub fn pois(&self) -> &[Poi] {
        &self.pois
    }
}

/// Time of day in minutes since midnight, serialized as `"HH:MM"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ClockTime(u16);

impl ClockTime {
    pub fn from_minutes(minutes: u16) -> Result<Self, ModelError> {
        if minutes < MINUTES_PER_DAY {
            Ok(Self(minutes))
        } else {
            Err(ModelError::ClockTime(format!("{minutes} min")))
        }
    }

    pub fn hm(hour: u16, minute: u16) -> Result<Self, ModelError> {
        if hour < 24 && minute < 60 {
            Ok(Self(hour * 60 + minute))
        } else {
            Err(ModelError::ClockTime(format!("{hour}:{minute}")))
        }
    }

    pub fn minutes(self) -> u16 {
        self.0
    }

    /// Adds a duration, failing when the result would cross midnight.
    pub fn checked_add(self, minutes: u32) -> Option<Self> {
        let total = u32::from(self.0) + minutes;
        (total < u32::from(MINUTES_PER_DAY)).then_some(Self(total as u16))
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ModelError::ClockTime(s.to_string());
        let (h, m) = s.trim().split_once(':').ok_or_else(err)?;
        if h.is_empty() || h.len() > 2 || m.len() != 2 {
            return Err(err());
        }
        let hour: u16 = h.parse().map_err(|_| err())?;
        let minute: u16 = m.parse().map_err(|_| err())?;
        Self::hm(hour, minute).map_err(|_| err())
    }
}

impl Serialize for ClockTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Money in integer minor units (e.g. fen, cents).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn minor(self) -> i64 {
        self.0
    }

    /// Value in major units, for display and wire formats that use reals.
    pub fn major(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn times(self, n: u32) -> Money {
        Money(self.0 * i64::from(n))
    }
}

impl std::ops::Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Transit,
    Rest,
    Dine,
    Sightsee,
}

impl Activity {
    pub const ALL: [Activity; 4] = [
        Activity::Transit,
        Activity::Rest,
        Activity::Dine,
        Activity::Sightsee,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Transit => "transit",
            Self::Rest => "rest",
            Self::Dine => "dine",
            Self::Sightsee => "sightsee",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "transit" | "transiting" => Ok(Self::Transit),
            "rest" | "resting" => Ok(Self::Rest),
            "dine" | "dining" => Ok(Self::Dine),
            "sightsee" | "sightseeing" => Ok(Self::Sightsee),
            other => Err(ModelError::Activity(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    Other,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Male => "male",
            Self::Female => "female",
            Self::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMember {
    pub gender: Gender,
    pub age: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TravelerType {
    Single,
    Couple,
    Family,
    Group,
}

impl TravelerType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Single => "single",
            Self::Couple => "couple",
            Self::Family => "family",
            Self::Group => "group",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelerProfile {
    pub id: String,
    pub group: Vec<GroupMember>,
    pub type_label: TravelerType,
    pub preferences: String,
    /// Budget in minor units.
    pub budget: Money,
    pub initial_stamina: f64,
    pub stamina_rule: StaminaRule,
}

impl TravelerProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |message: &str| ModelError::Profile {
            id: self.id.clone(),
            message: message.to_string(),
        };
        if self.group.is_empty() {
            return Err(err("group must not be empty"));
        }
        if !(self.initial_stamina > 0.0 && self.initial_stamina <= 10.0) {
            return Err(err("initial stamina must lie in (0, 10]"));
        }
        self.stamina_rule
            .validate()
            .map_err(|e| err(&e.to_string()))
    }

    pub fn group_size(&self) -> u32 {
        self.group.len() as u32
    }

    /// Plain-text rendering used in prompts and the planning context.
    pub fn describe(&self) -> String {
        let members = self
            .group
            .iter()
            .map(|m| format!("{} {}", m.gender.as_str(), m.age))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "Traveler type: {}\nGroup: {members}\nBudget: {:.2}\nInitial stamina: {}\nPreferences: {}",
            self.type_label.as_str(),
            self.budget.major(),
            self.initial_stamina,
            self.preferences.trim()
        )
    }
}

/// One timed line of an itinerary.
///
/// An entry places the traveler at `location` from `start_time` doing
/// `activity`. A `transit` entry means leaving `location` for the next
/// entry's location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub day: u32,
    pub start_time: ClockTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<ClockTime>,
    pub location: String,
    pub activity: Activity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guidance: Option<String>,
    /// Catalog id this entry's location resolved to, if any.
    #[serde(skip)]
    pub poi_id: Option<String>,
    /// Display name: the POI name when resolved, otherwise the raw location.
    #[serde(skip)]
    pub place: String,
}

impl PlanEntry {
    pub fn has_guidance(&self, min_chars: usize) -> bool {
        self.guidance
            .as_deref()
            .map(|g| g.trim().chars().count() >= min_chars.max(1))
            .unwrap_or(false)
    }
}

/// A parsed, validated plan document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub city: String,
    pub days: u32,
    pub hotel: String,
    pub origin_terminal: String,
    pub traveler_ref: String,
    pub entries: Vec<PlanEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    city: String,
    days: u32,
    hotel: String,
    origin_terminal: String,
    traveler_ref: String,
    entries: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    day: u32,
    start_time: String,
    #[serde(default)]
    end_time: Option<String>,
    location: String,
    activity: String,
    #[serde(default)]
    guidance: Option<String>,
}

/// Parses a plan document and checks every plan invariant.
///
/// Entries are stably sorted by `(day, start_time)`. `hotel` and
/// `origin_terminal` must name catalog POIs; entry locations may be POI ids,
/// POI names or free-form places.
pub fn parse_plan(document: &str, catalog: &PoiCatalog) -> Result<Plan, PlanError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let raw: RawPlan = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        PlanError::schema(
            if path == "." {
                "document".to_string()
            } else {
                path
            },
            e.into_inner().to_string(),
        )
    })?;

    if raw.city.trim().is_empty() {
        return Err(PlanError::schema("city", "must not be empty"));
    }
    if raw.days < 1 {
        return Err(PlanError::schema("days", "must be at least 1"));
    }
    let hotel = catalog
        .resolve(&raw.hotel)
        .ok_or_else(|| PlanError::Reference {
            field: "hotel".into(),
            id: raw.hotel.clone(),
        })?;
    let terminal = catalog
        .resolve(&raw.origin_terminal)
        .ok_or_else(|| PlanError::Reference {
            field: "origin_terminal".into(),
            id: raw.origin_terminal.clone(),
        })?;

    let mut entries = Vec::with_capacity(raw.entries.len());
    for (i, e) in raw.entries.into_iter().enumerate() {
        let field = |name: &str| format!("entries[{i}].{name}");
        if e.day < 1 {
            return Err(PlanError::schema(field("day"), "must be at least 1"));
        }
        let start_time: ClockTime = e
            .start_time
            .parse()
            .map_err(|err: ModelError| PlanError::schema(field("start_time"), err.to_string()))?;
        let end_time = match e.end_time.as_deref() {
            None => None,
            Some(s) => Some(
                s.parse::<ClockTime>()
                    .map_err(|err| PlanError::schema(field("end_time"), err.to_string()))?,
            ),
        };
        if let Some(end) = end_time {
            if end < start_time {
                return Err(PlanError::schema(
                    field("end_time"),
                    format!("{end} is before start_time {start_time}"),
                ));
            }
        }
        let activity: Activity = e
            .activity
            .parse()
            .map_err(|err: ModelError| PlanError::schema(field("activity"), err.to_string()))?;
        if e.location.trim().is_empty() {
            return Err(PlanError::schema(field("location"), "must not be empty"));
        }
        let resolved = catalog.resolve(&e.location);
        entries.push(PlanEntry {
            day: e.day,
            start_time,
            end_time,
            place: resolved
                .map(|p| p.name.clone())
                .unwrap_or_else(|| e.location.trim().to_string()),
            poi_id: resolved.map(|p| p.id.clone()),
            location: e.location,
            activity,
            guidance: e.guidance,
        });
    }
    entries.sort_by_key(|e| (e.day, e.start_time));

    let max_day = entries.iter().map(|e| e.day).max().unwrap_or(raw.days);
    if max_day != raw.days {
        return Err(PlanError::schema(
            "days",
            format!(
                "declared {} days but the last entry is on day {max_day}",
                raw.days
            ),
        ));
    }

    Ok(Plan {
        city: raw.city,
        days: raw.days,
        hotel: hotel.id.clone(),
        origin_terminal: terminal.id.clone(),
        traveler_ref: raw.traveler_ref,
        entries,
    })
}

impl Plan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization is infallible")
    }

    pub fn day_entries(&self, day: u32) -> impl Iterator<Item = &PlanEntry> {
        self.entries.iter().filter(move |e| e.day == day)
    }

    /// Whether the entry's location is the given POI id.
    pub fn entry_is_at(entry: &PlanEntry, poi_id: &str) -> bool {
        entry.poi_id.as_deref() == Some(poi_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralCriterion {
    /// The journey starts and ends at the designated terminal.
    OriginDestination,
    /// Every day except the first and last starts and ends at the hotel.
    HotelAnchoring,
    /// Every sightseeing stop carries a guidance block.
    GuidanceFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    /// Extra POI ids accepted as the final destination besides the origin terminal.
    #[serde(default)]
    pub return_terminals: Vec<String>,
    #[serde(default = "default_min_guidance")]
    pub min_guidance_chars: usize,
    /// Markers every guidance block must contain (case-insensitive).
    #[serde(default)]
    pub guidance_markers: Vec<String>,
}

fn default_min_guidance() -> usize {
    1
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            return_terminals: Vec::new(),
            min_guidance_chars: 1,
            guidance_markers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub criterion: StructuralCriterion,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self, criterion: StructuralCriterion) -> bool {
        self.checks
            .iter()
            .any(|c| c.criterion == criterion && c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Evaluates the three structural plan criteria.
pub fn validate_plan(plan: &Plan, config: &ValidationConfig) -> ValidationReport {
    let mut checks = Vec::with_capacity(3);

    let first = plan.entries.first();
    let last = plan.entries.iter().rfind(|e| e.day == plan.days);
    let starts = first.is_some_and(|e| e.day == 1 && Plan::entry_is_at(e, &plan.origin_terminal));
    let ends = last.is_some_and(|e| {
        Plan::entry_is_at(e, &plan.origin_terminal)
            || config
                .return_terminals
                .iter()
                .any(|t| Plan::entry_is_at(e, t))
    });
    checks.push(CheckResult {
        criterion: StructuralCriterion::OriginDestination,
        passed: starts && ends,
        detail: match (starts, ends) {
            (true, true) => "journey starts and ends at the terminal".into(),
            (false, _) => "journey does not start at the origin terminal".into(),
            (true, false) => "journey does not end at a terminal".into(),
        },
    });

    let mut bad_days = Vec::new();
    for day in 2..plan.days {
        let mut entries = plan.day_entries(day);
        let first = entries.next();
        let last = entries.last().or(first);
        let anchored = first.is_some_and(|e| Plan::entry_is_at(e, &plan.hotel))
            && last.is_some_and(|e| Plan::entry_is_at(e, &plan.hotel));
        if !anchored {
            bad_days.push(day);
        }
    }
    checks.push(CheckResult {
        criterion: StructuralCriterion::HotelAnchoring,
        passed: bad_days.is_empty(),
        detail: if bad_days.is_empty() {
            "middle days start and end at the hotel".into()
        } else {
            format!("days not anchored at the hotel: {bad_days:?}")
        },
    });

    let markers: Vec<String> = config
        .guidance_markers
        .iter()
        .map(|m| m.to_lowercase())
        .collect();
    let missing: Vec<String> = plan
        .entries
        .iter()
        .filter(|e| e.activity == Activity::Sightsee)
        .filter(|e| {
            !e.has_guidance(config.min_guidance_chars) || {
                let text = e.guidance.as_deref().unwrap_or_default().to_lowercase();
                !markers.iter().all(|m| text.contains(m))
            }
        })
        .map(|e| format!("day {} {} {}", e.day, e.start_time, e.place))
        .collect();
    checks.push(CheckResult {
        criterion: StructuralCriterion::GuidanceFormat,
        passed: missing.is_empty(),
        detail: if missing.is_empty() {
            "every sightseeing stop has guidance".into()
        } else {
            format!("missing or malformed guidance: {}", missing.join("; "))
        },
    });

    ValidationReport { checks }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryItem {
    pub time: ClockTime,
    /// Normalized place name.
    pub location: String,
}

impl TrajectoryItem {
    pub fn new(time: ClockTime, place: &str) -> Self {
        Self {
            time,
            location: normalize_place(place),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub day: u32,
    pub items: Vec<TrajectoryItem>,
}

impl Trajectory {
    /// Appends an item unless it repeats the previous location.
    pub fn push_if_moved(&mut self, time: ClockTime, place: &str) {
        let item = TrajectoryItem::new(time, place);
        if self
            .items
            .last()
            .map(|last| last.location != item.location)
            .unwrap_or(true)
        {
            self.items.push(item);
        }
    }
}

/// One trajectory per plan day: an item at the start of every stay at a new location.
pub fn extract_planned_trajectory(plan: &Plan) -> Vec<Trajectory> {
    if plan.entries.is_empty() {
        return Vec::new();
    }
    (1..=plan.days)
        .map(|day| {
            let mut trajectory = Trajectory {
                day,
                items: Vec::new(),
            };
            for entry in plan.day_entries(day) {
                trajectory.push_if_moved(entry.start_time, &entry.place);
            }
            trajectory
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stamina::StaminaRule;

    fn catalog() -> PoiCatalog {
        let poi = |id: &str, name: &str, category| Poi {
            id: id.into(),
            name: name.into(),
            location: GeoPoint::new(39.9, 116.4).unwrap(),
            category,
            blog_excerpt: None,
        };
        PoiCatalog::new(vec![
            poi("station", "West Station", PoiCategory::Station),
            poi("hotel", "Grand Hotel", PoiCategory::Hotel),
            poi("a", "Alpha Park", PoiCategory::Attraction),
            poi("b", "Beta Temple", PoiCategory::Attraction),
            poi("r", "Duck House", PoiCategory::Restaurant),
        ])
        .unwrap()
    }

    fn doc(entries: &str, days: u32) -> String {
        format!(
            r#"{{"city":"Testville","days":{days},"hotel":"hotel","origin_terminal":"station","traveler_ref":"t1","entries":[{entries}]}}"#
        )
    }

    #[test]
    fn clock_time_parses_and_formats() {
        let t: ClockTime = "09:05".parse().unwrap();
        assert_eq!(t.minutes(), 545);
        assert_eq!(t.to_string(), "09:05");
        assert!("24:00".parse::<ClockTime>().is_err());
        assert!("9:5".parse::<ClockTime>().is_err());
        assert!("ab:cd".parse::<ClockTime>().is_err());
        assert_eq!(ClockTime::hm(23, 59).unwrap().checked_add(1), None);
    }

    #[test]
    fn geo_point_rejects_out_of_range() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::NAN).is_err());
        assert!(serde_json::from_str::<GeoPoint>(r#"{"lat":0,"lon":181}"#).is_err());
    }

    #[test]
    fn parses_and_sorts_three_day_plan() {
        let d = doc(
            r#"{"day":2,"start_time":"09:00","location":"hotel","activity":"rest"},
               {"day":1,"start_time":"12:00","location":"Alpha Park","activity":"sightsee","guidance":"go early"},
               {"day":1,"start_time":"10:00","location":"station","activity":"transit"},
               {"day":3,"start_time":"18:00","location":"station","activity":"transit"}"#,
            3,
        );
        let plan = parse_plan(&d, &catalog()).unwrap();
        assert_eq!(plan.days, 3);
        let keys: Vec<_> = plan
            .entries
            .iter()
            .map(|e| (e.day, e.start_time.minutes()))
            .collect();
        assert_eq!(keys, vec![(1, 600), (1, 720), (2, 540), (3, 1080)]);
        assert_eq!(plan.entries[1].poi_id.as_deref(), Some("a"));
        assert_eq!(plan.entries[0].place, "West Station");
    }

    #[test]
    fn end_before_start_is_a_schema_error_naming_the_field() {
        let d = doc(
            r#"{"day":1,"start_time":"12:00","end_time":"11:00","location":"a","activity":"rest"}"#,
            1,
        );
        match parse_plan(&d, &catalog()) {
            Err(PlanError::Schema { field, .. }) => assert_eq!(field, "entries[0].end_time"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_the_path() {
        let d = r#"{"city":"x","days":1,"hotel":"hotel","origin_terminal":"station","traveler_ref":"t","entries":[{"day":1,"location":"a","activity":"rest"}]}"#;
        match parse_plan(d, &catalog()) {
            Err(PlanError::Schema { field, message }) => {
                assert!(field.starts_with("entries[0]"), "{field}");
                assert!(message.contains("start_time"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_hotel_is_a_reference_error() {
        let d = doc(
            r#"{"day":1,"start_time":"10:00","location":"a","activity":"rest"}"#,
            1,
        )
        .replace("\"hotel\":\"hotel\"", "\"hotel\":\"nowhere\"");
        assert_eq!(
            parse_plan(&d, &catalog()),
            Err(PlanError::Reference {
                field: "hotel".into(),
                id: "nowhere".into()
            })
        );
    }

    #[test]
    fn days_must_match_last_entry_day() {
        let d = doc(
            r#"{"day":1,"start_time":"10:00","location":"a","activity":"rest"}"#,
            2,
        );
        assert!(
            matches!(parse_plan(&d, &catalog()), Err(PlanError::Schema { field, .. }) if field == "days")
        );
    }

    #[test]
    fn bad_activity_and_time_are_rejected() {
        let d = doc(
            r#"{"day":1,"start_time":"10:00","location":"a","activity":"swim"}"#,
            1,
        );
        assert!(
            matches!(parse_plan(&d, &catalog()), Err(PlanError::Schema { field, .. }) if field == "entries[0].activity")
        );
        let d = doc(
            r#"{"day":1,"start_time":"25:00","location":"a","activity":"rest"}"#,
            1,
        );
        assert!(
            matches!(parse_plan(&d, &catalog()), Err(PlanError::Schema { field, .. }) if field == "entries[0].start_time")
        );
    }

    fn anchored_plan() -> Plan {
        let d = doc(
            r#"{"day":1,"start_time":"10:00","location":"station","activity":"transit"},
               {"day":1,"start_time":"11:00","location":"a","activity":"sightsee","guidance":"north gate first"},
               {"day":1,"start_time":"20:00","location":"hotel","activity":"rest"},
               {"day":2,"start_time":"08:00","location":"hotel","activity":"rest"},
               {"day":2,"start_time":"10:00","location":"b","activity":"sightsee","guidance":"incense hall"},
               {"day":2,"start_time":"21:00","location":"hotel","activity":"rest"},
               {"day":3,"start_time":"08:00","location":"hotel","activity":"rest"},
               {"day":3,"start_time":"15:00","location":"station","activity":"transit"}"#,
            3,
        );
        parse_plan(&d, &catalog()).unwrap()
    }

    #[test]
    fn anchored_plan_passes_all_structural_checks() {
        let report = validate_plan(&anchored_plan(), &ValidationConfig::default());
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn day_two_ending_at_restaurant_fails_hotel_anchoring() {
        let mut plan = anchored_plan();
        let idx = plan
            .entries
            .iter()
            .position(|e| e.day == 2 && e.start_time.minutes() == 21 * 60)
            .unwrap();
        plan.entries[idx].location = "r".into();
        plan.entries[idx].poi_id = Some("r".into());
        let report = validate_plan(&plan, &ValidationConfig::default());
        assert!(!report.passed(StructuralCriterion::HotelAnchoring));
        assert!(report.passed(StructuralCriterion::OriginDestination));
        assert!(report.passed(StructuralCriterion::GuidanceFormat));
    }

    #[test]
    fn missing_guidance_fails_guidance_check() {
        let mut plan = anchored_plan();
        let idx = plan
            .entries
            .iter()
            .position(|e| e.poi_id.as_deref() == Some("b"))
            .unwrap();
        plan.entries[idx].guidance = Some("   ".into());
        let report = validate_plan(&plan, &ValidationConfig::default());
        assert!(!report.passed(StructuralCriterion::GuidanceFormat));
        assert!(report.passed(StructuralCriterion::HotelAnchoring));
    }

    #[test]
    fn guidance_markers_are_enforced() {
        let config = ValidationConfig {
            guidance_markers: vec!["Route:".into()],
            ..Default::default()
        };
        assert!(
            !validate_plan(&anchored_plan(), &config).passed(StructuralCriterion::GuidanceFormat)
        );
    }

    #[test]
    fn trajectory_of_two_entries() {
        let d = doc(
            r#"{"day":1,"start_time":"10:00","location":"a","activity":"sightsee"},
               {"day":1,"start_time":"12:00","location":"b","activity":"sightsee"}"#,
            1,
        );
        let plan = parse_plan(&d, &catalog()).unwrap();
        let t = extract_planned_trajectory(&plan);
        assert_eq!(t.len(), 1);
        assert_eq!(
            t[0].items,
            vec![
                TrajectoryItem::new(ClockTime::hm(10, 0).unwrap(), "Alpha Park"),
                TrajectoryItem::new(ClockTime::hm(12, 0).unwrap(), "beta temple")
            ]
        );
    }

    #[test]
    fn trajectory_per_day_and_collapses_repeats() {
        let plan = anchored_plan();
        let t = extract_planned_trajectory(&plan);
        assert_eq!(t.len(), 3);
        // day 3: hotel 08:00 then station 15:00
        assert_eq!(t[2].items.len(), 2);
        let d = doc(
            r#"{"day":1,"start_time":"10:00","location":"hotel","activity":"rest"},
               {"day":1,"start_time":"11:00","location":"hotel","activity":"dine"},
               {"day":2,"start_time":"10:00","location":"a","activity":"rest"}"#,
            2,
        );
        let t = extract_planned_trajectory(&parse_plan(&d, &catalog()).unwrap());
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].items.len(), 1);
    }

    #[test]
    fn empty_plan_has_no_trajectory() {
        let plan = parse_plan(&doc("", 1), &catalog()).unwrap();
        assert!(extract_planned_trajectory(&plan).is_empty());
    }

    #[test]
    fn profile_validation() {
        let mut p = TravelerProfile {
            id: "x".into(),
            group: vec![GroupMember {
                gender: Gender::Male,
                age: 30,
            }],
            type_label: TravelerType::Single,
            preferences: String::new(),
            budget: Money(100_000),
            initial_stamina: 8.5,
            stamina_rule: StaminaRule::builtin("single").unwrap(),
        };
        assert!(p.validate().is_ok());
        p.initial_stamina = 10.5;
        assert!(p.validate().is_err());
        p.initial_stamina = 5.0;
        p.group.clear();
        assert!(p.validate().is_err());
    }
}
