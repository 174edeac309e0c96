//! Personalization scores: five feedback dimensions aggregated across
//! trip, day and POI granularity, plus the training reward.

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Scores for experience, interest, arrangement, stamina and cost, each 0-100.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DimScores {
    pub ex: f64,
    pub it: f64,
    pub ar: f64,
    pub st: f64,
    pub co: f64,
}

impl DimScores {
    pub const NAMES: [&'static str; 5] = ["ex", "it", "ar", "st", "co"];

    pub fn uniform(value: f64) -> Self {
        Self::from_array([value; 5])
    }

    pub fn from_array([ex, it, ar, st, co]: [f64; 5]) -> Self {
        Self { ex, it, ar, st, co }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.ex, self.it, self.ar, self.st, self.co]
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_array(self.to_array().map(f))
    }

    pub fn zip_with(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array(std::array::from_fn(|i| f(a[i], b[i])))
    }

    /// Clamps into `[0, 100]`; the flag reports whether anything changed.
    /// Non-finite values become 0.
    pub fn clamped(self) -> (Self, bool) {
        let fixed = self.map(|v| {
            if v.is_finite() {
                v.clamp(0.0, 100.0)
            } else {
                0.0
            }
        });
        (fixed, fixed != self)
    }

    pub fn in_range(self) -> bool {
        self.to_array().iter().all(|v| (0.0..=100.0).contains(v))
    }

    /// Component-wise mean; `None` for an empty input.
    pub fn mean<'a>(scores: impl IntoIterator<Item = &'a DimScores>) -> Option<DimScores> {
        let mut sum = DimScores::default();
        let mut n = 0usize;
        for s in scores {
            sum = sum.zip_with(*s, |a, b| a + b);
            n += 1;
        }
        (n > 0).then(|| sum.map(|v| v / n as f64))
    }
}

/// Granularity weights: `alpha1` trip vs `alpha2` days, and within a day
/// `beta` for the day verdict vs `gamma` for its POI visits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for PerWeights {
    fn default() -> Self {
        Self {
            alpha1: 0.6,
            alpha2: 0.4,
            beta: 0.6,
            gamma: 0.4,
        }
    }
}

impl PerWeights {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let all = [self.alpha1, self.alpha2, self.beta, self.gamma];
        if all.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(MetricsError::Argument("weights must lie in [0, 1]".into()));
        }
        if (self.alpha1 + self.alpha2 - 1.0).abs() > 1e-9
            || (self.beta + self.gamma - 1.0).abs() > 1e-9
        {
            return Err(MetricsError::Argument(
                "alpha1 + alpha2 and beta + gamma must each equal 1".into(),
            ));
        }
        Ok(())
    }
}

/// `alpha1 * trip + alpha2 * mean_i(beta * day_i + gamma * poi_day_i)` per dimension.
pub fn aggregate_per(
    trip: DimScores,
    day_scores: &[DimScores],
    poi_day_scores: &[DimScores],
    w: &PerWeights,
) -> Result<DimScores, MetricsError> {
    w.validate()?;
    if day_scores.is_empty() || day_scores.len() != poi_day_scores.len() {
        return Err(MetricsError::Argument(format!(
            "need equal, non-zero numbers of day and POI-day scores (got {} and {})",
            day_scores.len(),
            poi_day_scores.len()
        )));
    }
    let n = day_scores.len() as f64;
    let daily = day_scores
        .iter()
        .zip(poi_day_scores)
        .map(|(d, p)| d.zip_with(*p, |d, p| w.beta * d + w.gamma * p))
        .fold(DimScores::default(), |acc, s| acc.zip_with(s, |a, b| a + b))
        .map(|v| v / n);
    Ok(trip.zip_with(daily, |t, d| {
        (w.alpha1 * t + w.alpha2 * d).clamp(0.0, 100.0)
    }))
}

/// Unweighted mean of the five dimensions.
pub fn aggregate_dimensions(d: &DimScores) -> f64 {
    d.to_array().iter().sum::<f64>() / 5.0
}

/// `2 (per - 0.5)`, minus one more when the plan format is wrong.
pub fn reward(per_norm: f64, format_ok: bool) -> Result<f64, MetricsError> {
    if !(0.0..=1.0).contains(&per_norm) {
        return Err(MetricsError::Argument(format!(
            "normalized PER {per_norm} outside [0, 1]"
        )));
    }
    let base = 2.0 * (per_norm - 0.5);
    Ok(if format_ok { base } else { base - 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn published_dimension_rows() {
        let row = DimScores::from_array([77.5, 86.4, 79.3, 76.4, 87.6]);
        assert!((aggregate_dimensions(&row) - 81.4).abs() <= 0.05);
        let row = DimScores::from_array([69.2, 83.7, 73.4, 74.2, 74.5]);
        assert!((aggregate_dimensions(&row) - 75.0).abs() <= 0.05);
        assert_eq!(aggregate_dimensions(&DimScores::uniform(42.0)), 42.0);
    }

    #[test]
    fn aggregation_examples() {
        let w = PerWeights::default();
        let s = |v| DimScores::uniform(v);
        assert_eq!(
            aggregate_per(s(70.0), &[s(70.0), s(70.0)], &[s(70.0), s(70.0)], &w).unwrap(),
            s(70.0)
        );
        assert_eq!(
            aggregate_per(s(0.0), &[s(0.0)], &[s(0.0)], &w).unwrap(),
            s(0.0)
        );
        let out = aggregate_per(s(80.0), &[s(60.0)], &[s(40.0)], &w).unwrap();
        // 0.6*80 + 0.4*(0.6*60 + 0.4*40), evaluated by hand
        assert!((out.ex - 68.8).abs() < 1e-9);
        assert!(aggregate_per(s(80.0), &[s(60.0)], &[], &w).is_err());
        assert!(aggregate_per(s(80.0), &[], &[], &w).is_err());
        let bad = PerWeights { alpha1: 0.7, ..w };
        assert!(aggregate_per(s(80.0), &[s(60.0)], &[s(40.0)], &bad).is_err());
    }

    #[test]
    fn constant_inputs_are_fixed_points() {
        for v in [0.0, 50.0, 100.0] {
            let s = DimScores::uniform(v);
            assert_eq!(
                aggregate_per(s, &[s, s, s], &[s, s, s], &PerWeights::default()).unwrap(),
                s
            );
        }
    }

    #[test]
    fn reward_table() {
        assert_eq!(reward(0.5, true).unwrap(), 0.0);
        assert_eq!(reward(1.0, true).unwrap(), 1.0);
        assert_eq!(reward(0.0, true).unwrap(), -1.0);
        assert_eq!(reward(1.0, false).unwrap(), 0.0);
        assert_eq!(reward(0.0, false).unwrap(), -2.0);
        assert!((reward(0.7, false).unwrap() + 0.6).abs() < 1e-12);
        assert!(reward(1.2, true).is_err());
        assert!(reward(f64::NAN, true).is_err());
    }

    #[test]
    fn clamping_flags() {
        let (s, changed) = DimScores::from_array([120.0, 50.0, -3.0, 0.0, 100.0]).clamped();
        assert!(changed);
        assert_eq!(s.to_array(), [100.0, 50.0, 0.0, 0.0, 100.0]);
        assert!(!DimScores::uniform(10.0).clamped().1);
    }

    fn scores() -> impl Strategy<Value = DimScores> {
        prop::array::uniform5(0.0f64..=100.0).prop_map(DimScores::from_array)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn per_stays_in_range(trip in scores(), days in prop::collection::vec((scores(), scores()), 1..6)) {
            let (d, p): (Vec<_>, Vec<_>) = days.into_iter().unzip();
            let out = aggregate_per(trip, &d, &p, &PerWeights::default()).unwrap();
            prop_assert!(out.in_range());
            prop_assert!((0.0..=100.0).contains(&aggregate_dimensions(&out)));
        }

        #[test]
        fn per_is_linear(t1 in scores(), t2 in scores(), d1 in scores(), d2 in scores(), p1 in scores(), p2 in scores(), lambda in 0.0f64..=1.0) {
            let w = PerWeights::default();
            let mix = |a: DimScores, b: DimScores| a.zip_with(b, |x, y| lambda * x + (1.0 - lambda) * y);
            let lhs = aggregate_per(mix(t1, t2), &[mix(d1, d2)], &[mix(p1, p2)], &w).unwrap();
            let rhs = mix(
                aggregate_per(t1, &[d1], &[p1], &w).unwrap(),
                aggregate_per(t2, &[d2], &[p2], &w).unwrap(),
            );
            for (a, b) in lhs.to_array().iter().zip(rhs.to_array()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn constant_per_maps_to_itself(v in 0.0f64..=100.0, n in 1usize..5) {
            let s = DimScores::uniform(v);
            let out = aggregate_per(s, &vec![s; n], &vec![s; n], &PerWeights::default()).unwrap();
            for x in out.to_array() {
                prop_assert!((x - v).abs() < 1e-9);
            }
        }

        #[test]
        fn bad_format_costs_exactly_one(per in 0.0f64..=1.0) {
            let ok = reward(per, true).unwrap();
            let bad = reward(per, false).unwrap();
            prop_assert_eq!(bad, ok - 1.0);
            prop_assert!((-1.0..=1.0).contains(&ok));
            prop_assert!((-2.0..=0.0).contains(&bad));
        }
    }
}
