//! Information providers consulted by the simulation, plus in-memory
//! table-backed implementations used by fixture bundles and tests.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_place, ClockTime, Money, Poi, PoiCatalog, TravelerProfile};
use crate::stamina::TransitMode;

use super::TravelerState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("no route from `{from}` to `{to}`")]
    NoRoute { from: String, to: String },
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("no sightseeing record for `{0}`")]
    NoNarrative(String),
    #[error("service error: {0}")]
    Service(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitOption {
    pub mode: TransitMode,
    pub duration_min: u32,
    /// Per-person fare, or per-vehicle for taxis, in minor units.
    pub cost: Money,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiningOption {
    pub name: String,
    /// Per-person estimate in minor units.
    pub cost_estimate: Money,
    pub quality: f64,
    pub duration_min: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SightseeExperience {
    pub narrative: String,
    pub suggested_duration_min: u32,
    /// Per-person ticket price in minor units.
    pub cost: Money,
}

pub trait TransitProvider: Send + Sync {
    fn query(
        &self,
        from: &str,
        to: &str,
        depart: ClockTime,
    ) -> Result<Vec<TransitOption>, ProviderError>;
}

pub trait DiningProvider: Send + Sync {
    fn nearby(&self, location: &str, time: ClockTime) -> Result<Vec<DiningOption>, ProviderError>;
}

pub trait SightseeProvider: Send + Sync {
    fn experience(
        &self,
        poi: &Poi,
        profile: &TravelerProfile,
        state: &TravelerState,
    ) -> Result<SightseeExperience, ProviderError>;
}

/// One row of a transit matrix file; endpoints are POI ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitRecord {
    pub from: String,
    pub to: String,
    pub options: Vec<TransitOption>,
}

/// Transit options looked up from a fixed `(from, to)` matrix.
#[derive(Debug, Clone)]
pub struct TableTransit {
    catalog: PoiCatalog,
    routes: BTreeMap<(String, String), Vec<TransitOption>>,
}

impl TableTransit {
    pub fn new(catalog: PoiCatalog, records: Vec<TransitRecord>) -> Self {
        let routes = records
            .into_iter()
            .map(|r| ((r.from, r.to), r.options))
            .collect();
        Self { catalog, routes }
    }

    fn key(&self, place: &str) -> Result<String, ProviderError> {
        self.catalog
            .resolve(place)
            .map(|p| p.id.clone())
            .ok_or_else(|| ProviderError::UnknownPlace(place.to_string()))
    }
}

impl TransitProvider for TableTransit {
    fn query(
        &self,
        from: &str,
        to: &str,
        _depart: ClockTime,
    ) -> Result<Vec<TransitOption>, ProviderError> {
        let key = (self.key(from)?, self.key(to)?);
        match self.routes.get(&key) {
            Some(options) if !options.is_empty() => Ok(options.clone()),
            _ => Err(ProviderError::NoRoute {
                from: from.to_string(),
                to: to.to_string(),
            }),
        }
    }
}

/// A restaurant row: served from every POI listed in `near`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestaurantRecord {
    pub name: String,
    pub near: Vec<String>,
    pub cost_estimate: Money,
    pub quality: f64,
    pub duration_min: u32,
}

#[derive(Debug, Clone)]
pub struct TableDining {
    catalog: PoiCatalog,
    restaurants: Vec<RestaurantRecord>,
}

impl TableDining {
    pub fn new(catalog: PoiCatalog, restaurants: Vec<RestaurantRecord>) -> Self {
        Self {
            catalog,
            restaurants,
        }
    }
}

impl DiningProvider for TableDining {
    fn nearby(&self, location: &str, _time: ClockTime) -> Result<Vec<DiningOption>, ProviderError> {
        let id = self.catalog.resolve(location).map(|p| p.id.as_str());
        let here = normalize_place(location);
        Ok(self
            .restaurants
            .iter()
            .filter(|r| {
                id.is_some_and(|id| r.near.iter().any(|n| n == id))
                    || normalize_place(&r.name) == here
            })
            .map(|r| DiningOption {
                name: r.name.clone(),
                cost_estimate: r.cost_estimate,
                quality: r.quality,
                duration_min: r.duration_min,
            })
            .collect())
    }
}

/// Canned narratives per POI id; the variant served is a pure function of
/// the seed, the POI and the traveler's day and time.
#[derive(Debug, Clone)]
pub struct TableSightsee {
    narratives: BTreeMap<String, Vec<SightseeExperience>>,
    seed: u64,
}

impl TableSightsee {
    pub fn new(narratives: BTreeMap<String, Vec<SightseeExperience>>, seed: u64) -> Self {
        Self { narratives, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            narratives: self.narratives.clone(),
            seed,
        }
    }
}

impl SightseeProvider for TableSightsee {
    fn experience(
        &self,
        poi: &Poi,
        _profile: &TravelerProfile,
        state: &TravelerState,
    ) -> Result<SightseeExperience, ProviderError> {
        let variants = self
            .narratives
            .get(&poi.id)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| ProviderError::NoNarrative(poi.id.clone()))?;
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..12].copy_from_slice(&state.day.to_le_bytes());
        key[12..14].copy_from_slice(&state.time.minutes().to_le_bytes());
        for (i, b) in poi.id.bytes().enumerate() {
            key[14 + i % 18] ^= b;
        }
        let index = ChaCha8Rng::from_seed(key).random_range(0..variants.len());
        Ok(variants[index].clone())
    }
}
