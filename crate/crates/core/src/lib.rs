//! Backtesting engine for overlapping J-K loser/winner/contrarian portfolio
//! strategies on monthly return panels.
//!
//! The pipeline: load or synthesize a [`panel::ReturnPanel`], rank each
//! month's cross-section on its trailing J-month compounded return
//! ([`strategy`]), hold the extreme quantile groups for K months and
//! annualize ([`returns`]), then test means with Newey-West HAC t-statistics
//! ([`stats`]). [`synth`] builds seeded panels with known reversal or
//! momentum structure for validation.

pub mod error;
pub mod panel;
pub mod returns;
pub mod stats;
pub mod strategy;
pub mod synth;

pub use error::{Error, Result};
pub use panel::{MonthIndex, PanelFilterConfig, ReturnPanel, StockId};
pub use returns::{
    annualize, cohort_result, cumulative, run_strategy, sweep, sweep_cell, CohortResult,
    StrategyRun, SweepCell,
};
pub use stats::{
    diff_test, nw_tstat, nw_variance, summarize, summarize_cell, CellSummary, DiffResult, Leg,
    Significance, StrategySummary,
};
pub use strategy::{
    estimation_return, form_cohort, holding_leg_returns, rank_and_group, Cohort, GroupAssignment,
    StrategySpec,
};
pub use synth::{generate, generate_with_stats, inject_missing, GenStats, SynthConfig};
