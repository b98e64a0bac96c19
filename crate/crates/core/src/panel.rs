//! Monthly return panels: loading, filtering, slicing and eligibility.
//!
//! A [`ReturnPanel`] is an immutable month-by-stock matrix of simple monthly
//! returns with an explicit availability mask (a masked cell means the stock
//! had no usable return that month: pre-IPO, suspended, delisted). Months are
//! always a gap-free range; missing observations are encoded in the mask,
//! never by omitting rows.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::ops::{Add, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A calendar month addressed by its ordinal offset from 1997-01.
///
/// Ordinal arithmetic is calendar-month arithmetic; there are no
/// day-of-month semantics. Displays as `YYYY-MM`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MonthIndex(i32);

/// Year of the ordinal-zero month.
const EPOCH_YEAR: i32 = 1997;

impl MonthIndex {
    pub fn from_ordinal(ordinal: i32) -> Self {
        MonthIndex(ordinal)
    }

    pub fn ordinal(self) -> i32 {
        self.0
    }

    /// Build from a calendar year and 1-based month.
    pub fn from_ym(year: i32, month: u32) -> Result<Self> {
        if !(0..=9999).contains(&year) || !(1..=12).contains(&month) {
            return Err(Error::InvalidMonth(format!("{year:04}-{month:02}")));
        }
        Ok(MonthIndex((year - EPOCH_YEAR) * 12 + month as i32 - 1))
    }

    pub fn year(self) -> i32 {
        EPOCH_YEAR + self.0.div_euclid(12)
    }

    /// 1-based calendar month.
    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMonth(s.to_string());
        let b = s.as_bytes();
        if b.len() != 7
            || b[4] != b'-'
            || !b
                .iter()
                .enumerate()
                .all(|(i, c)| i == 4 || c.is_ascii_digit())
        {
            return Err(bad());
        }
        let year: i32 = s[..4].parse().map_err(|_| bad())?;
        let month: u32 = s[5..7].parse().map_err(|_| bad())?;
        Self::from_ym(year, month)
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for MonthIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Add<i32> for MonthIndex {
    type Output = MonthIndex;
    fn add(self, months: i32) -> MonthIndex {
        MonthIndex(self.0 + months)
    }
}

impl Sub<i32> for MonthIndex {
    type Output = MonthIndex;
    fn sub(self, months: i32) -> MonthIndex {
        MonthIndex(self.0 - months)
    }
}

impl Sub<MonthIndex> for MonthIndex {
    type Output = i32;
    fn sub(self, other: MonthIndex) -> i32 {
        self.0 - other.0
    }
}

/// Opaque stock identifier: nonempty, no commas, no whitespace.
///
/// The byte-wise total order on ids is load-bearing: it breaks ranking ties.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StockId(String);

impl StockId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(|c| c == ',' || c.is_whitespace()) {
            return Err(Error::InvalidStockId(id));
        }
        Ok(StockId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for StockId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Filters applied while loading a panel from CSV.
#[derive(Clone, Debug)]
pub struct PanelFilterConfig {
    /// Mask the chronologically first present observation of each stock
    /// (IPO-month exclusion).
    pub drop_first_month: bool,
    /// Restrict to months >= start. `None` means the earliest month in the data.
    pub start: Option<MonthIndex>,
    /// Restrict to months <= end. `None` means the latest month in the data.
    pub end: Option<MonthIndex>,
}

impl Default for PanelFilterConfig {
    fn default() -> Self {
        PanelFilterConfig {
            drop_first_month: true,
            start: None,
            end: None,
        }
    }
}

/// Immutable month-by-stock matrix of simple monthly returns.
///
/// Stocks are kept sorted by id; cells are stored month-major. Every present
/// return is finite and strictly greater than -1, and every stock has at
/// least one present return.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnPanel {
    start: MonthIndex,
    stocks: Vec<StockId>,
    cells: Vec<Option<f64>>,
}

pub const CSV_HEADER: &str = "month,stock_id,return";

impl ReturnPanel {
    /// Build a panel spanning `[start, end]` from (month, stock, return)
    /// observations. Observations must fall inside the span; duplicates are
    /// rejected. Stocks with no observations at all simply do not appear.
    pub fn from_observations(
        start: MonthIndex,
        end: MonthIndex,
        observations: &[(MonthIndex, StockId, f64)],
    ) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidPeriod { start, end });
        }
        if observations.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut ids: Vec<StockId> = observations.iter().map(|(_, s, _)| s.clone()).collect();
        ids.sort_unstable();
        ids.dedup();

        let n_months = (end - start + 1) as usize;
        let n_stocks = ids.len();
        let mut cells = vec![None; n_months * n_stocks];
        for (month, stock, value) in observations {
            if *month < start || *month > end {
                return Err(Error::WindowOutOfRange {
                    start: *month,
                    end: *month,
                    panel_start: start,
                    panel_end: end,
                });
            }
            if !value.is_finite() || *value <= -1.0 {
                return Err(Error::InvalidReturn {
                    month: *month,
                    stock: stock.clone(),
                    value: *value,
                });
            }
            let s = ids.binary_search(stock).expect("id collected above");
            let idx = (*month - start) as usize * n_stocks + s;
            if cells[idx].is_some() {
                return Err(Error::DuplicateCell {
                    month: *month,
                    stock: stock.clone(),
                });
            }
            cells[idx] = Some(*value);
        }
        Ok(ReturnPanel {
            start,
            stocks: ids,
            cells,
        })
    }

    /// Assemble a panel from pre-validated parts. `stocks` must be sorted and
    /// unique; `cells` is month-major with `stocks.len()` columns.
    pub(crate) fn from_parts(
        start: MonthIndex,
        stocks: Vec<StockId>,
        cells: Vec<Option<f64>>,
    ) -> Result<Self> {
        debug_assert!(stocks.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(!stocks.is_empty() && cells.len().is_multiple_of(stocks.len()));
        let panel = ReturnPanel {
            start,
            stocks,
            cells,
        };
        for s in 0..panel.n_stocks() {
            if panel.present_count(s) == 0 {
                return Err(Error::EmptyInput);
            }
        }
        Ok(panel)
    }

    pub fn start(&self) -> MonthIndex {
        self.start
    }

    pub fn end(&self) -> MonthIndex {
        self.start + (self.n_months() as i32 - 1)
    }

    pub fn n_months(&self) -> usize {
        self.cells.len() / self.stocks.len()
    }

    pub fn n_stocks(&self) -> usize {
        self.stocks.len()
    }

    /// Stock ids, ascending.
    pub fn stocks(&self) -> &[StockId] {
        &self.stocks
    }

    pub fn stock_index(&self, id: &StockId) -> Option<usize> {
        self.stocks.binary_search(id).ok()
    }

    /// All months in the panel, ascending.
    pub fn months(&self) -> impl Iterator<Item = MonthIndex> + '_ {
        (0..self.n_months() as i32).map(move |i| self.start + i)
    }

    /// The return of stock `stock` (column index) in `month`, or `None` if
    /// masked or out of range.
    pub fn cell(&self, month: MonthIndex, stock: usize) -> Option<f64> {
        let offset = month - self.start;
        if offset < 0 || offset as usize >= self.n_months() || stock >= self.n_stocks() {
            return None;
        }
        self.cells[offset as usize * self.n_stocks() + stock]
    }

    /// Number of present returns for a stock.
    pub fn present_count(&self, stock: usize) -> usize {
        let n = self.n_stocks();
        self.cells[stock..]
            .iter()
            .step_by(n)
            .filter(|c| c.is_some())
            .count()
    }

    fn contains_window(&self, w_start: MonthIndex, w_end: MonthIndex) -> bool {
        w_start >= self.start && w_end <= self.end()
    }

    /// Load a panel from CSV (`month,stock_id,return`), applying the filter
    /// config: restriction to `[start, end]` and optional IPO-month masking.
    pub fn load_csv<R: Read>(reader: R, config: &PanelFilterConfig) -> Result<Self> {
        if let (Some(s), Some(e)) = (config.start, config.end) {
            if s > e {
                return Err(Error::InvalidPeriod { start: s, end: e });
            }
        }
        let mut lines = BufReader::new(reader).lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Err(Error::EmptyInput),
                Some((ln, line)) => {
                    let line = line.map_err(|e| Error::MalformedRow {
                        line: ln + 1,
                        reason: e.to_string(),
                    })?;
                    let line = line.trim_end_matches('\r');
                    if !line.is_empty() {
                        break (ln, line.to_string());
                    }
                }
            }
        };
        if header.1 != CSV_HEADER {
            return Err(Error::MalformedRow {
                line: header.0 + 1,
                reason: format!("expected header '{CSV_HEADER}', got '{}'", header.1),
            });
        }

        let mut observations: Vec<(MonthIndex, StockId, f64)> = Vec::new();
        let mut seen: BTreeMap<(MonthIndex, StockId), ()> = BTreeMap::new();
        for (ln, line) in lines {
            let line = line.map_err(|e| Error::MalformedRow {
                line: ln + 1,
                reason: e.to_string(),
            })?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (month, stock, value) =
                match (fields.next(), fields.next(), fields.next(), fields.next()) {
                    (Some(m), Some(s), Some(r), None) => (m, s, r),
                    _ => {
                        return Err(Error::MalformedRow {
                            line: ln + 1,
                            reason: "expected exactly 3 comma-separated fields".to_string(),
                        })
                    }
                };
            let month = MonthIndex::parse(month).map_err(|e| Error::MalformedRow {
                line: ln + 1,
                reason: e.to_string(),
            })?;
            let stock = StockId::new(stock).map_err(|e| Error::MalformedRow {
                line: ln + 1,
                reason: e.to_string(),
            })?;
            let value: f64 = value.parse().map_err(|_| Error::MalformedRow {
                line: ln + 1,
                reason: format!("non-numeric return '{value}'"),
            })?;
            if !value.is_finite() || value <= -1.0 {
                return Err(Error::MalformedRow {
                    line: ln + 1,
                    reason: format!("return {value} out of range (must be finite and > -1)"),
                });
            }
            if seen.insert((month, stock.clone()), ()).is_some() {
                return Err(Error::DuplicateCell { month, stock });
            }
            observations.push((month, stock, value));
        }

        let lo = config
            .start
            .or_else(|| observations.iter().map(|(m, _, _)| *m).min())
            .ok_or(Error::EmptyInput)?;
        let hi = config
            .end
            .or_else(|| observations.iter().map(|(m, _, _)| *m).max())
            .ok_or(Error::EmptyInput)?;
        observations.retain(|(m, _, _)| *m >= lo && *m <= hi);
        if observations.is_empty() {
            return Err(Error::EmptyInput);
        }

        let mut panel = ReturnPanel::from_observations(lo, hi, &observations)?;
        if config.drop_first_month {
            panel.mask_first_observations()?;
        }
        Ok(panel)
    }

    /// Mask the chronologically first present observation of each stock, then
    /// drop stocks left with no observations.
    fn mask_first_observations(&mut self) -> Result<()> {
        let n_stocks = self.n_stocks();
        for s in 0..n_stocks {
            if let Some(m) = (0..self.n_months()).find(|m| self.cells[m * n_stocks + s].is_some()) {
                self.cells[m * n_stocks + s] = None;
            }
        }
        self.drop_empty_stocks();
        if self.stocks.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(())
    }

    fn drop_empty_stocks(&mut self) {
        let n_stocks = self.n_stocks();
        let n_months = self.n_months();
        let keep: Vec<usize> = (0..n_stocks)
            .filter(|&s| self.present_count(s) > 0)
            .collect();
        if keep.len() == n_stocks {
            return;
        }
        let mut cells = Vec::with_capacity(n_months * keep.len());
        for m in 0..n_months {
            for &s in &keep {
                cells.push(self.cells[m * n_stocks + s]);
            }
        }
        self.stocks = keep.iter().map(|&s| self.stocks[s].clone()).collect();
        self.cells = cells;
    }

    /// Restrict the panel to `[start, end]` (intersected with its own range).
    /// Stocks with no present return inside the slice are dropped.
    pub fn slice_period(&self, start: MonthIndex, end: MonthIndex) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidPeriod { start, end });
        }
        let lo = start.max(self.start);
        let hi = end.min(self.end());
        if lo > hi {
            return Err(Error::EmptyIntersection {
                start,
                end,
                panel_start: self.start,
                panel_end: self.end(),
            });
        }
        let n_stocks = self.n_stocks();
        let from = (lo - self.start) as usize * n_stocks;
        let to = ((hi - self.start) as usize + 1) * n_stocks;
        let mut sliced = ReturnPanel {
            start: lo,
            stocks: self.stocks.clone(),
            cells: self.cells[from..to].to_vec(),
        };
        sliced.drop_empty_stocks();
        if sliced.stocks.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(sliced)
    }

    /// Column indices of stocks whose return is present in every month of the
    /// estimation window `[t-J-skip+1, t-skip]`, in ascending id order.
    pub fn eligible_indices(&self, t: MonthIndex, j: u32, skip: u32) -> Result<Vec<usize>> {
        if j == 0 {
            return Err(Error::InvalidSpec("J must be >= 1".to_string()));
        }
        let w_end = t - skip as i32;
        let w_start = w_end - (j as i32 - 1);
        if !self.contains_window(w_start, w_end) {
            return Err(Error::WindowOutOfRange {
                start: w_start,
                end: w_end,
                panel_start: self.start,
                panel_end: self.end(),
            });
        }
        let n_stocks = self.n_stocks();
        let lo = (w_start - self.start) as usize;
        let hi = (w_end - self.start) as usize;
        Ok((0..n_stocks)
            .filter(|&s| (lo..=hi).all(|m| self.cells[m * n_stocks + s].is_some()))
            .collect())
    }

    /// Same as [`eligible_indices`](Self::eligible_indices) but resolved to ids.
    pub fn eligible_stocks(&self, t: MonthIndex, j: u32, skip: u32) -> Result<Vec<StockId>> {
        Ok(self
            .eligible_indices(t, j, skip)?
            .into_iter()
            .map(|s| self.stocks[s].clone())
            .collect())
    }

    /// Canonical CSV emission: header, rows sorted by (month, stock_id),
    /// LF endings, 17 significant digits.
    pub fn emit_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        let n_stocks = self.n_stocks();
        for m in 0..self.n_months() {
            let month = self.start + m as i32;
            for s in 0..n_stocks {
                if let Some(v) = self.cells[m * n_stocks + s] {
                    writeln!(w, "{month},{},{v:.16e}", self.stocks[s])?;
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.emit_csv(&mut buf).expect("writing to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}
