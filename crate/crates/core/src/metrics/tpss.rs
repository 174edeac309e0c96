//! Travel plan similarity: dynamic-programming alignment of planned and
//! simulated time-location trajectories.

use crate::model::{ClockTime, Trajectory, TrajectoryItem};

use super::MetricsError;

/// 1 for equal times, falling linearly to 0 at two hours apart.
pub fn time_diff_score(t1: ClockTime, t2: ClockTime) -> f64 {
    let diff_hours = f64::from(t1.minutes().abs_diff(t2.minutes())) / 60.0;
    (1.0 - diff_hours / 2.0).max(0.0)
}

/// Mean of the time score and an exact location match.
pub fn match_score(a: &TrajectoryItem, b: &TrajectoryItem) -> f64 {
    let location = if a.location == b.location { 1.0 } else { 0.0 };
    (time_diff_score(a.time, b.time) + location) / 2.0
}

/// Similarity of one day's trajectories on a 0-100 scale.
///
/// The best monotone alignment score is divided by the shorter length and
/// then scaled by `min/max` length to penalise missing or extra stops.
/// Two empty trajectories agree perfectly; one empty side scores 0.
pub fn tpss_day(planned: &Trajectory, simulated: &Trajectory) -> f64 {
    tpss_items(&planned.items, &simulated.items)
}

pub fn tpss_items(planned: &[TrajectoryItem], simulated: &[TrajectoryItem]) -> f64 {
    let (m, n) = (planned.len(), simulated.len());
    if m == 0 && n == 0 {
        return 100.0;
    }
    if m == 0 || n == 0 {
        return 0.0;
    }
    let mut dp = vec![vec![0.0f64; n + 1]; m + 1];
    for i in 1..=m {
        for j in 1..=n {
            let diagonal = dp[i - 1][j - 1] + match_score(&planned[i - 1], &simulated[j - 1]);
            dp[i][j] = dp[i - 1][j].max(dp[i][j - 1]).max(diagonal);
        }
    }
    let (short, long) = (m.min(n) as f64, m.max(n) as f64);
    let similarity = dp[m][n] / short;
    let penalty = short / long;
    similarity * penalty * 100.0
}

/// Mean daily score over the union of days; a day on one side only scores 0.
pub fn tpss(
    planned_days: &[Trajectory],
    simulated_days: &[Trajectory],
) -> Result<f64, MetricsError> {
    let mut days: Vec<u32> = planned_days
        .iter()
        .chain(simulated_days)
        .map(|t| t.day)
        .collect();
    days.sort_unstable();
    days.dedup();
    if days.is_empty() {
        return Err(MetricsError::Argument("no days to compare".into()));
    }
    let total: f64 = days
        .iter()
        .map(|day| {
            let planned = planned_days.iter().find(|t| t.day == *day);
            let simulated = simulated_days.iter().find(|t| t.day == *day);
            match (planned, simulated) {
                (Some(p), Some(s)) => tpss_day(p, s),
                _ => 0.0,
            }
        })
        .sum();
    Ok(total / days.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn item(h: u16, m: u16, place: &str) -> TrajectoryItem {
        TrajectoryItem::new(ClockTime::hm(h, m).unwrap(), place)
    }

    fn day(day: u32, items: Vec<TrajectoryItem>) -> Trajectory {
        Trajectory { day, items }
    }

    /// Best total match score over every strictly increasing pairing.
    fn alignment_oracle(a: &[TrajectoryItem], b: &[TrajectoryItem]) -> f64 {
        fn go(a: &[TrajectoryItem], b: &[TrajectoryItem]) -> f64 {
            let (Some((x, rest_a)), Some((y, rest_b))) = (a.split_first(), b.split_first()) else {
                return 0.0;
            };
            let take = match_score(x, y) + go(rest_a, rest_b);
            take.max(go(rest_a, b)).max(go(a, rest_b))
        }
        if a.is_empty() && b.is_empty() {
            return 100.0;
        }
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let (m, n) = (a.len() as f64, b.len() as f64);
        go(a, b) / m.min(n) * (m.min(n) / m.max(n)) * 100.0
    }

    #[test]
    fn time_scores() {
        let t = |h, m| ClockTime::hm(h, m).unwrap();
        assert_eq!(time_diff_score(t(10, 0), t(10, 0)), 1.0);
        assert_eq!(time_diff_score(t(10, 0), t(11, 0)), 0.5);
        assert_eq!(time_diff_score(t(13, 0), t(10, 0)), 0.0);
        assert_eq!(time_diff_score(t(10, 0), t(12, 0)), 0.0);
    }

    #[test]
    fn match_scores() {
        assert_eq!(match_score(&item(10, 0, "A"), &item(10, 0, "a")), 1.0);
        assert_eq!(match_score(&item(10, 0, "A"), &item(11, 0, "A")), 0.75);
        assert_eq!(match_score(&item(10, 0, "A"), &item(10, 0, "B")), 0.5);
    }

    #[test]
    fn worked_examples() {
        let planned = day(1, vec![item(10, 0, "A"), item(12, 0, "B")]);
        let simulated = day(1, vec![item(11, 0, "A"), item(12, 0, "B")]);
        assert_eq!(tpss_day(&planned, &simulated), 87.5);
        assert_eq!(tpss_day(&planned, &planned), 100.0);
        let extra = day(
            1,
            vec![
                item(10, 0, "A"),
                item(11, 0, "X"),
                item(12, 0, "B"),
                item(15, 0, "Y"),
            ],
        );
        assert_eq!(tpss_day(&planned, &extra), 50.0);
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(tpss_day(&day(1, vec![]), &day(1, vec![])), 100.0);
        assert_eq!(
            tpss_day(&day(1, vec![item(9, 0, "A")]), &day(1, vec![])),
            0.0
        );
    }

    #[test]
    fn day_averaging() {
        let a = day(1, vec![item(10, 0, "A"), item(12, 0, "B")]);
        let b = day(2, vec![item(10, 0, "A"), item(12, 0, "B")]);
        let half = day(
            2,
            vec![
                item(10, 0, "A"),
                item(11, 0, "X"),
                item(12, 0, "B"),
                item(15, 0, "Y"),
            ],
        );
        assert_eq!(
            tpss(&[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap(),
            100.0
        );
        assert_eq!(
            tpss(&[a.clone(), b.clone()], &[a.clone(), half]).unwrap(),
            75.0
        );
        assert_eq!(tpss(&[a.clone(), b], &[a]).unwrap(), 50.0);
        assert!(tpss(&[], &[]).is_err());
    }

    fn trajectory(max_len: usize) -> impl Strategy<Value = Vec<TrajectoryItem>> {
        prop::collection::vec((6u16..23, 0u16..60, 0usize..4), 0..=max_len).prop_map(|raw| {
            raw.into_iter()
                .map(|(h, m, p)| item(h, m, ["A", "B", "C", "D"][p]))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn dp_matches_exhaustive_alignment(a in trajectory(6), b in trajectory(6)) {
            prop_assert!((tpss_items(&a, &b) - alignment_oracle(&a, &b)).abs() <= 1e-9);
        }

        #[test]
        fn bounded_and_symmetric(a in trajectory(8), b in trajectory(8)) {
            let ab = tpss_items(&a, &b);
            prop_assert!((0.0..=100.0).contains(&ab));
            prop_assert!((ab - tpss_items(&b, &a)).abs() <= 1e-9);
            prop_assert_eq!(tpss_items(&a, &a), 100.0);
        }
    }
}
