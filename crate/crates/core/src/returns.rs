//! Holding-period aggregation: compound leg returns, annualize them, and
//! collect per-formation-month cohort results into strategy runs.

use crate::error::{Error, Result};
use crate::panel::{MonthIndex, ReturnPanel};
use crate::stats::{summarize_cell, CellSummary, Leg};
use crate::strategy::{form_cohort, holding_leg_returns, StrategySpec};

/// Compounded return of a sequence: `prod(1 + r_i) - 1`.
pub fn cumulative(returns: &[f64]) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(returns.iter().fold(1.0, |acc, r| acc * (1.0 + r)) - 1.0)
}

/// Geometric annualization of a K-month cumulative return:
/// `(1 + R)^(12/K) - 1`.
pub fn annualize(cumulative: f64, k: u32) -> f64 {
    (1.0 + cumulative).powf(12.0 / k as f64) - 1.0
}

/// Annualized leg returns of one formation month.
///
/// The contrarian value is defined as the difference of the annualized legs,
/// so `contrarian_ann == loser_ann - winner_ann` holds exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CohortResult {
    pub formation: MonthIndex,
    pub loser_ann: f64,
    pub winner_ann: f64,
    pub contrarian_ann: f64,
}

impl CohortResult {
    pub fn leg(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Loser => self.loser_ann,
            Leg::Winner => self.winner_ann,
            Leg::Contrarian => self.contrarian_ann,
        }
    }
}

/// Evaluate one formation month: form the cohort, compound each leg over the
/// holding window, annualize, and difference. Propagates the skip marker.
pub fn cohort_result(
    panel: &ReturnPanel,
    t: MonthIndex,
    spec: &StrategySpec,
) -> Result<Option<CohortResult>> {
    let Some(cohort) = form_cohort(panel, t, spec)? else {
        return Ok(None);
    };
    let loser_leg = holding_leg_returns(panel, &cohort.losers, t, spec.k)?;
    let winner_leg = holding_leg_returns(panel, &cohort.winners, t, spec.k)?;
    let loser_ann = annualize(cumulative(&loser_leg)?, spec.k);
    let winner_ann = annualize(cumulative(&winner_leg)?, spec.k);
    Ok(Some(CohortResult {
        formation: t,
        loser_ann,
        winner_ann,
        contrarian_ann: loser_ann - winner_ann,
    }))
}

/// Time-ordered cohort results of one strategy cell, plus the number of
/// formation months skipped for thin cross-sections.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyRun {
    pub spec: StrategySpec,
    pub cohorts: Vec<CohortResult>,
    pub skipped: usize,
}

impl StrategyRun {
    /// Values of one leg across cohorts, in formation order.
    pub fn leg_series(&self, leg: Leg) -> Vec<f64> {
        self.cohorts.iter().map(|c| c.leg(leg)).collect()
    }
}

/// Evaluate a strategy at every formation month with a full estimation
/// window behind it and a full holding window ahead (overlapping cohorts,
/// one per calendar month).
pub fn run_strategy(panel: &ReturnPanel, spec: &StrategySpec) -> Result<StrategyRun> {
    spec.validate()?;
    let months = panel.n_months() as i32;
    let first = spec.j as i32 + spec.skip as i32 - 1;
    let last = months - 1 - spec.k as i32;
    if first > last {
        return Err(Error::PanelTooShort {
            months: panel.n_months(),
            j: spec.j,
            k: spec.k,
            skip: spec.skip,
        });
    }
    let mut cohorts = Vec::with_capacity((last - first + 1) as usize);
    let mut skipped = 0;
    for offset in first..=last {
        match cohort_result(panel, panel.start() + offset, spec)? {
            Some(result) => cohorts.push(result),
            None => skipped += 1,
        }
    }
    Ok(StrategyRun {
        spec: *spec,
        cohorts,
        skipped,
    })
}

/// One (J, K) cell of a sweep grid.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub j: u32,
    pub k: u32,
    /// Summaries for the loser, winner and contrarian legs, in that order.
    pub legs: [CellSummary; 3],
    /// Cohort count behind the summaries (0 for an empty cell).
    pub cohorts: usize,
    pub skipped: usize,
}

/// Evaluate every (J, K) cell of a grid for a fixed skip and group count.
///
/// Cells are returned in row-major (J, K) order regardless of evaluation
/// order. Cells whose run has no cohorts come back as [`CellSummary::Empty`].
pub fn sweep(
    panel: &ReturnPanel,
    j_set: &[u32],
    k_set: &[u32],
    skip: u32,
    groups: u32,
) -> Result<Vec<SweepCell>> {
    if j_set.is_empty() || k_set.is_empty() {
        return Err(Error::InvalidSpec("J and K sets must be nonempty".into()));
    }
    let mut cells = Vec::with_capacity(j_set.len() * k_set.len());
    for &j in j_set {
        for &k in k_set {
            let spec = StrategySpec::new(j, k, skip, groups)?;
            cells.push(sweep_cell(panel, &spec)?);
        }
    }
    Ok(cells)
}

/// Evaluate a single sweep cell.
pub fn sweep_cell(panel: &ReturnPanel, spec: &StrategySpec) -> Result<SweepCell> {
    match run_strategy(panel, spec) {
        Ok(run) => Ok(SweepCell {
            j: spec.j,
            k: spec.k,
            legs: [
                summarize_cell(&run, Leg::Loser),
                summarize_cell(&run, Leg::Winner),
                summarize_cell(&run, Leg::Contrarian),
            ],
            cohorts: run.cohorts.len(),
            skipped: run.skipped,
        }),
        Err(Error::PanelTooShort { .. }) => Ok(SweepCell {
            j: spec.j,
            k: spec.k,
            legs: [CellSummary::Empty, CellSummary::Empty, CellSummary::Empty],
            cohorts: 0,
            skipped: 0,
        }),
        Err(e) => Err(e),
    }
}
