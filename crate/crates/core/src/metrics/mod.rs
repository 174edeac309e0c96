//! Plan and journey scoring: comprehensiveness (CPH), completeness (CPL),
//! feasibility (FEA, via trajectory similarity), personalization (PER) and
//! the training reward.

pub mod cph;
pub mod cpl;
pub mod feedback;
pub mod per;
pub mod tpss;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cph::{cph, CphResult, PoiSimilarity, SimilarityProvider, TermFrequencyCosine};
pub use cpl::{cpl, CplBreakdown, CplResult, JudgeError, MealJudge, RuleMealJudge};
pub use feedback::{
    collect_feedback, per_from_feedback, ChatEvaluator, Evaluation, EvaluationWindow, Evaluator,
    FeedbackRecord, FixtureEvaluator, Granularity,
};
pub use per::{aggregate_dimensions, aggregate_per, reward, DimScores, PerWeights};
pub use tpss::{match_score, time_diff_score, tpss, tpss_day};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("evaluator failed: {0}")]
    Evaluator(String),
}

/// All four metrics for one plan and its simulated journey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub cph: f64,
    pub cpl: f64,
    pub fea: f64,
    pub per_agg: f64,
    pub per_dims: DimScores,
    pub cpl_breakdown: CplBreakdown,
    pub reward: f64,
    /// Conditions that affected a score: missing posts, indeterminate meal
    /// judgement, clamped feedback, truncated or aborted simulation.
    pub flags: Vec<String>,
}

impl ScoreCard {
    /// Combines metric results; the reward uses PER on a 0-1 scale and the
    /// three structural CPL criteria as the format gate.
    pub fn new(
        cph: f64,
        cpl: &CplResult,
        fea: f64,
        per_dims: DimScores,
        flags: Vec<String>,
    ) -> Result<Self, MetricsError> {
        let per_agg = aggregate_dimensions(&per_dims);
        let reward = reward((per_agg / 100.0).clamp(0.0, 1.0), cpl.breakdown.format_ok())?;
        Ok(Self {
            cph,
            cpl: cpl.score,
            fea,
            per_agg,
            per_dims,
            cpl_breakdown: cpl.breakdown,
            reward,
            flags,
        })
    }

    pub const CSV_HEADER: &'static str =
        "run,cph,cpl,fea,per_agg,ex,it,ar,st,co,origin_destination,hotel_anchoring,guidance_format,meals,reward,flags";

    pub fn csv_row(&self, run: &str) -> String {
        let b = &self.cpl_breakdown;
        let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
        format!(
            "{},{:.4},{:.1},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{:.6},{}",
            quote(run),
            self.cph,
            self.cpl,
            self.fea,
            self.per_agg,
            self.per_dims.ex,
            self.per_dims.it,
            self.per_dims.ar,
            self.per_dims.st,
            self.per_dims.co,
            b.origin_destination,
            b.hotel_anchoring,
            b.guidance_format,
            b.meals,
            self.reward,
            quote(&self.flags.join("; ")),
        )
    }
}
