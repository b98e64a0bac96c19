use crate::panel::{MonthIndex, StockId};

/// Errors produced by panel construction, strategy evaluation and inference.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid month '{0}': expected YYYY-MM")]
    InvalidMonth(String),

    #[error("invalid stock id '{0}': must be nonempty, without commas or whitespace")]
    InvalidStockId(String),

    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("duplicate cell ({month}, {stock})")]
    DuplicateCell { month: MonthIndex, stock: StockId },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid period: start {start} is after end {end}")]
    InvalidPeriod { start: MonthIndex, end: MonthIndex },

    #[error("period [{start}, {end}] does not intersect panel range [{panel_start}, {panel_end}]")]
    EmptyIntersection {
        start: MonthIndex,
        end: MonthIndex,
        panel_start: MonthIndex,
        panel_end: MonthIndex,
    },

    #[error("month window [{start}, {end}] lies outside panel range [{panel_start}, {panel_end}]")]
    WindowOutOfRange {
        start: MonthIndex,
        end: MonthIndex,
        panel_start: MonthIndex,
        panel_end: MonthIndex,
    },

    #[error("return {value} at ({month}, {stock}) is not a valid simple return (must be > -1)")]
    InvalidReturn {
        month: MonthIndex,
        stock: StockId,
        value: f64,
    },

    #[error("missing return for stock index {stock} at {month} inside an estimation window")]
    MissingInWindow { month: MonthIndex, stock: usize },

    #[error("invalid strategy spec: {0}")]
    InvalidSpec(String),

    #[error("cannot form {groups} groups from {universe} stocks")]
    TooFewStocks { universe: usize, groups: usize },

    #[error("empty return series")]
    EmptySeries,

    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { got: usize, need: usize },

    #[error("lag count {lag} exceeds series length {n} - 1")]
    LagTooLarge { lag: usize, n: usize },

    #[error("zero-variance series with nonzero mean {mean} (n = {n}): t-statistic undefined")]
    ZeroVariance { mean: f64, n: usize },

    #[error("panel of {months} months is too short for J={j}, K={k}, skip={skip}")]
    PanelTooShort {
        months: usize,
        j: u32,
        k: u32,
        skip: u32,
    },

    #[error("runs share {got} formation months, need at least {need}")]
    TooFewSharedMonths { got: usize, need: usize },

    #[error("invalid synthetic panel config: {0}")]
    InvalidSynthConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
