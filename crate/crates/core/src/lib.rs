//! Deterministic travel-plan simulation and evaluation.
//!
//! The crate is split along the pipeline a plan goes through:
//!
//! - [`model`]: POIs, traveler profiles, plans and trajectories.
//! - [`spatial`]: k-means++ POI clustering, intra-cluster routing and
//!   compass bearings used to build the planning context.
//! - [`stamina`]: rule-based exertion/recovery engine.
//! - [`sandbox`]: event-driven simulation of a traveler executing a plan.
//! - [`metrics`]: CPH, CPL, FEA (TPSS) and PER scoring plus the training reward.
//! - [`chat`] and [`maop`]: chat-model contract and the strategist/planner
//!   pipeline with its long-horizon and naive wide-horizon baselines.

pub mod chat;
pub mod maop;
pub mod metrics;
pub mod model;
pub mod sandbox;
pub mod spatial;
pub mod stamina;
pub mod text;

pub use model::{
    extract_planned_trajectory, parse_plan, validate_plan, Activity, ClockTime, Gender, GeoPoint,
    GroupMember, Money, Plan, PlanEntry, PlanError, Poi, PoiCatalog, PoiCategory, Trajectory,
    TrajectoryItem, TravelerProfile, TravelerType, ValidationConfig,
};
