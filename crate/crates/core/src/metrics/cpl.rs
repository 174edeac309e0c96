//! Completeness: four 25-point plan criteria.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_plan, Activity, ClockTime, Plan, StructuralCriterion, ValidationConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("meal judge failed: {0}")]
pub struct JudgeError(pub String);

/// Decides whether every day has both lunch and dinner.
pub trait MealJudge {
    fn judge(&self, plan: &Plan) -> Result<bool, JudgeError>;
}

/// A dine entry must overlap the lunch window and another the dinner window, every day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMealJudge {
    pub lunch: (ClockTime, ClockTime),
    pub dinner: (ClockTime, ClockTime),
}

impl Default for RuleMealJudge {
    fn default() -> Self {
        let t = |h| ClockTime::hm(h, 0).expect("valid hour");
        Self {
            lunch: (t(11), t(14)),
            dinner: (t(17), t(21)),
        }
    }
}

impl RuleMealJudge {
    /// Minutes `[start, end)` of a dine entry; an entry without an end runs
    /// until the next entry that day, or is a single instant.
    fn span(plan: &Plan, index: usize) -> (u16, u16) {
        let entry = &plan.entries[index];
        let start = entry.start_time.minutes();
        let end = entry
            .end_time
            .or_else(|| {
                plan.entries
                    .get(index + 1)
                    .filter(|n| n.day == entry.day)
                    .map(|n| n.start_time)
            })
            .map(|t| t.minutes())
            .unwrap_or(start);
        (start, end.max(start))
    }

    fn overlaps((start, end): (u16, u16), (from, to): (ClockTime, ClockTime)) -> bool {
        let (from, to) = (from.minutes(), to.minutes());
        if start == end {
            (from..=to).contains(&start)
        } else {
            start < to && end > from
        }
    }
}

impl MealJudge for RuleMealJudge {
    fn judge(&self, plan: &Plan) -> Result<bool, JudgeError> {
        Ok((1..=plan.days).all(|day| {
            let spans: Vec<(u16, u16)> = (0..plan.entries.len())
                .filter(|&i| {
                    plan.entries[i].day == day && plan.entries[i].activity == Activity::Dine
                })
                .map(|i| Self::span(plan, i))
                .collect();
            spans.iter().any(|s| Self::overlaps(*s, self.lunch))
                && spans.iter().any(|s| Self::overlaps(*s, self.dinner))
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CplBreakdown {
    pub origin_destination: bool,
    pub hotel_anchoring: bool,
    pub guidance_format: bool,
    pub meals: bool,
}

impl CplBreakdown {
    pub fn passed(&self) -> usize {
        [
            self.origin_destination,
            self.hotel_anchoring,
            self.guidance_format,
            self.meals,
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }

    /// The three structural criteria, which gate the training reward.
    pub fn format_ok(&self) -> bool {
        self.origin_destination && self.hotel_anchoring && self.guidance_format
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CplResult {
    pub score: f64,
    pub breakdown: CplBreakdown,
    /// The meal judge failed; the meal criterion was scored 0.
    pub meals_indeterminate: bool,
}

pub fn cpl(plan: &Plan, judge: &dyn MealJudge, config: &ValidationConfig) -> CplResult {
    let report = validate_plan(plan, config);
    let (meals, meals_indeterminate) = match judge.judge(plan) {
        Ok(ok) => (ok, false),
        Err(e) => {
            log::warn!("{e}");
            (false, true)
        }
    };
    let breakdown = CplBreakdown {
        origin_destination: report.passed(StructuralCriterion::OriginDestination),
        hotel_anchoring: report.passed(StructuralCriterion::HotelAnchoring),
        guidance_format: report.passed(StructuralCriterion::GuidanceFormat),
        meals,
    };
    CplResult {
        score: 25.0 * breakdown.passed() as f64,
        breakdown,
        meals_indeterminate,
    }
}
