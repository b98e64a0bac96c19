//! Cohort formation: rank stocks on lagged compounded returns, partition the
//! cross-section into quantile groups, and read off loser/winner legs.

use crate::error::{Error, Result};
use crate::panel::{MonthIndex, ReturnPanel};

/// One cell of the strategy space: estimation horizon J, holding horizon K,
/// skipped months between them, and group count G.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StrategySpec {
    /// Estimation horizon in months (>= 1).
    pub j: u32,
    /// Holding horizon in months (>= 1).
    pub k: u32,
    /// Months skipped between the estimation window and the holding window.
    pub skip: u32,
    /// Number of quantile groups (>= 2).
    pub groups: u32,
}

impl StrategySpec {
    pub fn new(j: u32, k: u32, skip: u32, groups: u32) -> Result<Self> {
        let spec = StrategySpec { j, k, skip, groups };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.j < 1 {
            return Err(Error::InvalidSpec("J must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidSpec("K must be >= 1".into()));
        }
        if self.groups < 2 {
            return Err(Error::InvalidSpec("group count must be >= 2".into()));
        }
        Ok(())
    }
}

/// Quantile assignment of a ranked cross-section.
///
/// Stocks are sorted ascending by score (ties broken by ascending key) and
/// group `g` covers sorted ranks `[floor(N*g/G), floor(N*(g+1)/G))`, so group
/// 0 holds the worst performers and group G-1 the best.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAssignment {
    ranked: Vec<usize>,
    bounds: Vec<usize>,
}

impl GroupAssignment {
    pub fn group_count(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Stock keys in group `g`, in rank order.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.ranked[self.bounds[g]..self.bounds[g + 1]]
    }

    /// Group index of the stock at sorted rank `k`.
    pub fn group_of_rank(&self, k: usize) -> usize {
        self.bounds.partition_point(|&b| b <= k) - 1
    }

    /// (key, group) pairs for the whole cross-section.
    pub fn assignments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.group_count()).flat_map(move |g| self.members(g).iter().map(move |&key| (key, g)))
    }
}

/// Compounded return of `stock` over the estimation window
/// `[t-J-skip+1, t-skip]`.
pub fn estimation_return(
    panel: &ReturnPanel,
    stock: usize,
    t: MonthIndex,
    j: u32,
    skip: u32,
) -> Result<f64> {
    let w_end = t - skip as i32;
    let w_start = w_end - (j as i32 - 1);
    let mut growth = 1.0;
    let mut m = w_start;
    while m <= w_end {
        let r = panel
            .cell(m, stock)
            .ok_or(Error::MissingInWindow { month: m, stock })?;
        growth *= 1.0 + r;
        m = m + 1;
    }
    Ok(growth - 1.0)
}

/// Sort `scores` ascending (ties by ascending key) and partition into
/// `groups` quantile groups by the boundary rule `b_g = floor(N*g/G)`.
///
/// The assignment depends only on the ordering of scores, so it is invariant
/// under permutation of the input and under strictly increasing
/// transformations of the scores.
pub fn rank_and_group(scores: &[(usize, f64)], groups: u32) -> Result<GroupAssignment> {
    let n = scores.len();
    if n < groups as usize {
        return Err(Error::TooFewStocks {
            universe: n,
            groups: groups as usize,
        });
    }
    let mut order: Vec<(usize, f64)> = scores.to_vec();
    order.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("scores are finite")
            .then(a.0.cmp(&b.0))
    });
    let g = groups as usize;
    let bounds: Vec<usize> = (0..=g).map(|i| n * i / g).collect();
    Ok(GroupAssignment {
        ranked: order.into_iter().map(|(key, _)| key).collect(),
        bounds,
    })
}

/// Loser and winner legs formed at month `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    pub formation: MonthIndex,
    /// Column indices of the bottom group, in id order.
    pub losers: Vec<usize>,
    /// Column indices of the top group, in id order.
    pub winners: Vec<usize>,
    pub universe_size: usize,
}

/// Rank the eligible cross-section at `t` and form the loser/winner cohort.
///
/// Returns `Ok(None)` (a skip marker) when fewer eligible stocks than groups
/// are available; errors when the estimation or holding window falls outside
/// the panel.
pub fn form_cohort(
    panel: &ReturnPanel,
    t: MonthIndex,
    spec: &StrategySpec,
) -> Result<Option<Cohort>> {
    spec.validate()?;
    let hold_end = t + spec.k as i32;
    if hold_end > panel.end() {
        return Err(Error::WindowOutOfRange {
            start: t + 1,
            end: hold_end,
            panel_start: panel.start(),
            panel_end: panel.end(),
        });
    }
    let eligible = panel.eligible_indices(t, spec.j, spec.skip)?;
    if eligible.len() < spec.groups as usize {
        return Ok(None);
    }
    let scores: Vec<(usize, f64)> = eligible
        .iter()
        .map(|&s| Ok((s, estimation_return(panel, s, t, spec.j, spec.skip)?)))
        .collect::<Result<_>>()?;
    let assignment = rank_and_group(&scores, spec.groups)?;
    let mut losers = assignment.members(0).to_vec();
    let mut winners = assignment.members(assignment.group_count() - 1).to_vec();
    losers.sort_unstable();
    winners.sort_unstable();
    Ok(Some(Cohort {
        formation: t,
        losers,
        winners,
        universe_size: eligible.len(),
    }))
}

/// Equal-weighted monthly returns of a leg over the holding window
/// `[t+1, t+K]`.
///
/// Members with a masked return in a month drop out of that month's average
/// (monthly re-weighting among survivors); a month where every member is
/// masked contributes 0.0 (cash).
pub fn holding_leg_returns(
    panel: &ReturnPanel,
    members: &[usize],
    t: MonthIndex,
    k: u32,
) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hold_end = t + k as i32;
    if t + 1 < panel.start() || hold_end > panel.end() {
        return Err(Error::WindowOutOfRange {
            start: t + 1,
            end: hold_end,
            panel_start: panel.start(),
            panel_end: panel.end(),
        });
    }
    let mut leg = Vec::with_capacity(k as usize);
    for offset in 1..=k as i32 {
        let m = t + offset;
        let mut sum = 0.0;
        let mut count = 0usize;
        for &s in members {
            if let Some(r) = panel.cell(m, s) {
                sum += r;
                count += 1;
            }
        }
        leg.push(if count == 0 { 0.0 } else { sum / count as f64 });
    }
    Ok(leg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::StockId;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn id(s: &str) -> StockId {
        StockId::new(s).unwrap()
    }

    fn month(s: &str) -> MonthIndex {
        MonthIndex::parse(s).unwrap()
    }

    /// Dense panel builder: rows[m][s], months from 2000-01, ids "A", "B", ...
    fn dense(rows: &[&[f64]]) -> ReturnPanel {
        let start = month("2000-01");
        let mut obs = Vec::new();
        for (m, row) in rows.iter().enumerate() {
            for (s, &v) in row.iter().enumerate() {
                let sid = id(&format!("{}", char::from(b'A' + s as u8)));
                obs.push((start + m as i32, sid, v));
            }
        }
        ReturnPanel::from_observations(start, start + (rows.len() as i32 - 1), &obs).unwrap()
    }

    #[test]
    fn estimation_return_compounds() {
        let panel = dense(&[&[0.10], &[-0.05]]);
        let r = estimation_return(&panel, 0, month("2000-02"), 2, 0).unwrap();
        assert_relative_eq!(r, 0.045, max_relative = 1e-15);
    }

    #[test]
    fn estimation_return_single_month_is_identity() {
        let panel = dense(&[&[0.07]]);
        let r = estimation_return(&panel, 0, month("2000-01"), 1, 0).unwrap();
        assert_relative_eq!(r, 0.07, max_relative = 1e-15);
    }

    #[test]
    fn estimation_return_with_skip_ignores_recent_months() {
        // J=2, skip=1 at t = month 2 uses months 0 and 1, never month 2.
        let panel = dense(&[&[0.10], &[-0.05], &[9.0]]);
        let r = estimation_return(&panel, 0, month("2000-03"), 2, 1).unwrap();
        assert_relative_eq!(r, 0.045, max_relative = 1e-15);
    }

    #[test]
    fn group_sizes_follow_boundary_rule() {
        let scores: Vec<(usize, f64)> = (0..10).map(|i| (i, i as f64)).collect();
        let g = rank_and_group(&scores, 3).unwrap();
        assert_eq!(g.members(0).len(), 3);
        assert_eq!(g.members(1).len(), 3);
        assert_eq!(g.members(2).len(), 4);

        let g = rank_and_group(&scores, 10).unwrap();
        for i in 0..10 {
            assert_eq!(g.members(i), &[i]);
        }
    }

    #[test]
    fn ties_break_by_ascending_key() {
        let scores = vec![(3usize, 1.0), (1, 1.0), (2, 1.0), (0, 1.0)];
        let g = rank_and_group(&scores, 2).unwrap();
        assert_eq!(g.members(0), &[0, 1]);
        assert_eq!(g.members(1), &[2, 3]);
    }

    #[test]
    fn all_ties_put_smallest_ids_in_the_loser_group() {
        // Equal scores, N=4, G=2: the two byte-wise smallest ids lose.
        let panel = dense(&[&[0.05, 0.05, 0.05, 0.05], &[0.0; 4]]);
        let spec = StrategySpec::new(1, 1, 0, 2).unwrap();
        let cohort = form_cohort(&panel, month("2000-01"), &spec)
            .unwrap()
            .unwrap();
        assert_eq!(cohort.losers, vec![0, 1]); // ids "A", "B"
        assert_eq!(cohort.winners, vec![2, 3]);
    }

    #[test]
    fn too_few_stocks_errors() {
        let scores = vec![(0usize, 1.0), (1, 2.0)];
        assert!(matches!(
            rank_and_group(&scores, 3),
            Err(Error::TooFewStocks {
                universe: 2,
                groups: 3
            })
        ));
    }

    #[test]
    fn form_cohort_picks_extremes() {
        // 5 stocks, distinct month-0 returns; J=K=1, G=5.
        let panel = dense(&[&[-0.2, -0.1, 0.0, 0.1, 0.2], &[0.0; 5]]);
        let spec = StrategySpec::new(1, 1, 0, 5).unwrap();
        let cohort = form_cohort(&panel, month("2000-01"), &spec)
            .unwrap()
            .unwrap();
        assert_eq!(cohort.losers, vec![0]);
        assert_eq!(cohort.winners, vec![4]);
        assert_eq!(cohort.universe_size, 5);
    }

    #[test]
    fn form_cohort_skips_thin_cross_sections() {
        let panel = dense(&[&[0.1, 0.2], &[0.0, 0.0]]);
        let spec = StrategySpec::new(1, 1, 0, 3).unwrap();
        assert_eq!(form_cohort(&panel, month("2000-01"), &spec).unwrap(), None);
    }

    #[test]
    fn form_cohort_checks_holding_window() {
        let panel = dense(&[&[0.1, 0.2], &[0.0, 0.0]]);
        let spec = StrategySpec::new(1, 1, 0, 2).unwrap();
        assert!(matches!(
            form_cohort(&panel, month("2000-02"), &spec),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn leg_returns_equal_weight_and_survivor_rules() {
        let start = month("2000-01");
        let obs = vec![
            (start, id("A"), 0.0),
            (start, id("B"), 0.0),
            (start + 1, id("A"), 0.10),
            (start + 1, id("B"), 0.20),
            (start + 2, id("A"), 0.05),
            // B masked in month 2 and both masked in month 3.
        ];
        let panel = ReturnPanel::from_observations(start, start + 3, &obs).unwrap();
        let leg = holding_leg_returns(&panel, &[0, 1], start, 3).unwrap();
        assert_relative_eq!(leg[0], 0.15, max_relative = 1e-15);
        assert_eq!(leg[1], 0.05);
        assert_eq!(leg[2], 0.0);
    }

    proptest! {
        #[test]
        fn grouping_is_permutation_invariant(
            base in proptest::collection::vec(-1.0f64..1.0, 8),
            shuffled_keys in Just((0usize..8).collect::<Vec<_>>()).prop_shuffle(),
            g in 2u32..5)
        {
            let keyed: Vec<(usize, f64)> = base.iter().copied().enumerate().collect();
            let shuffled: Vec<(usize, f64)> =
                shuffled_keys.iter().map(|&k| keyed[k]).collect();
            let a = rank_and_group(&keyed, g).unwrap();
            let b = rank_and_group(&shuffled, g).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn grouping_invariant_under_monotone_transform(
            scores in proptest::collection::vec(-0.9f64..10.0, 6..20), g in 2u32..6)
        {
            let keyed: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
            if keyed.len() >= g as usize {
                let transformed: Vec<(usize, f64)> =
                    keyed.iter().map(|&(k, v)| (k, (v + 1.0).ln() * 3.0 + 2.0)).collect();
                let a = rank_and_group(&keyed, g).unwrap();
                let b = rank_and_group(&transformed, g).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn group_sizes_sum_to_n_and_ranks_nondecreasing(n in 2usize..40, g in 2u32..11) {
            if n >= g as usize {
                let scores: Vec<(usize, f64)> = (0..n).map(|i| (i, (i as f64).cos())).collect();
                let asg = rank_and_group(&scores, g).unwrap();
                let total: usize = (0..asg.group_count()).map(|i| asg.members(i).len()).sum();
                prop_assert_eq!(total, n);
                let mut last = 0;
                for k in 0..n {
                    let grp = asg.group_of_rank(k);
                    prop_assert!(grp >= last);
                    last = grp;
                }
            }
        }

        #[test]
        fn finer_grouping_nests_in_coarser(n in 10usize..50) {
            // Decile losers are a subset of quintile losers on the same scores.
            let scores: Vec<(usize, f64)> = (0..n).map(|i| (i, (i as f64 * 1.7).sin())).collect();
            let fine = rank_and_group(&scores, 10).unwrap();
            let coarse = rank_and_group(&scores, 5).unwrap();
            for s in fine.members(0) {
                prop_assert!(coarse.members(0).contains(s));
            }
            for s in fine.members(9) {
                prop_assert!(coarse.members(4).contains(s));
            }
        }
    }

    #[test]
    fn skip_equals_shifted_no_skip() {
        // form_cohort with skip=1 matches skip=0 on a panel shifted so the
        // windows coincide, for the estimation side of the cohort.
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|m| {
                (0..4)
                    .map(|s| ((m * 4 + s) as f64 * 0.61).sin() * 0.1)
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let panel = dense(&refs);
        let spec_skip = StrategySpec::new(2, 1, 1, 2).unwrap();
        let spec_plain = StrategySpec::new(2, 1, 0, 2).unwrap();
        let with_skip = form_cohort(&panel, month("2000-04"), &spec_skip)
            .unwrap()
            .unwrap();
        let plain = form_cohort(&panel, month("2000-03"), &spec_plain)
            .unwrap()
            .unwrap();
        assert_eq!(with_skip.losers, plain.losers);
        assert_eq!(with_skip.winners, plain.winners);
    }
}
