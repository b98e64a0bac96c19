//! Newey-West HAC inference over cohort return series.
//!
//! Overlapping holding windows make consecutive cohort returns serially
//! correlated by construction (a K-month window induces moving-average
//! overlap of order K-1, plus any skip), so plain standard errors are
//! invalid. The estimator here is the standard Bartlett-weighted
//! autocovariance sum.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::returns::StrategyRun;

/// Which leg of a strategy run to aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leg {
    Loser,
    Winner,
    Contrarian,
}

impl Leg {
    pub const ALL: [Leg; 3] = [Leg::Loser, Leg::Winner, Leg::Contrarian];

    pub fn name(self) -> &'static str {
        match self {
            Leg::Loser => "loser",
            Leg::Winner => "winner",
            Leg::Contrarian => "contrarian",
        }
    }

    pub fn parse(s: &str) -> Option<Leg> {
        match s {
            "loser" => Some(Leg::Loser),
            "winner" => Some(Leg::Winner),
            "contrarian" => Some(Leg::Contrarian),
            _ => None,
        }
    }
}

impl std::fmt::Display for Leg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Two-sided significance of a t-statistic under Student-t(n-1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Significance {
    None,
    /// Significant at the 5% level.
    Star5,
    /// Significant at the 1% level.
    Star1,
}

impl Significance {
    pub fn symbol(self) -> &'static str {
        match self {
            Significance::None => "",
            Significance::Star5 => "*",
            Significance::Star1 => "**",
        }
    }

    /// Classify a t-statistic with `n` observations (df = n-1).
    pub fn classify(tstat: f64, n: usize) -> Significance {
        debug_assert!(n >= 2);
        let df = (n - 1) as f64;
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        let crit1 = dist.inverse_cdf(0.995);
        let crit5 = dist.inverse_cdf(0.975);
        if tstat.abs() >= crit1 {
            Significance::Star1
        } else if tstat.abs() >= crit5 {
            Significance::Star5
        } else {
            Significance::None
        }
    }
}

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Newey-West long-run variance with Bartlett weights:
///
/// `sigma^2 = gamma_0 + 2 * sum_{j=1..q} (1 - j/(q+1)) * gamma_j`
///
/// with `gamma_j = (1/n) * sum_{t=0..n-j-1} (x_t - xbar)(x_{t+j} - xbar)`.
/// Tiny negative results from the weighting are truncated to zero.
pub fn nw_variance(series: &[f64], q: usize) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooFewObservations { got: n, need: 2 });
    }
    if q > n - 1 {
        return Err(Error::LagTooLarge { lag: q, n });
    }
    let xbar = mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - xbar).collect();
    let gamma = |j: usize| {
        dev[..n - j]
            .iter()
            .zip(&dev[j..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let mut variance = gamma(0);
    for j in 1..=q {
        let weight = 1.0 - j as f64 / (q as f64 + 1.0);
        variance += 2.0 * weight * gamma(j);
    }
    Ok(variance.max(0.0))
}

/// HAC t-statistic: `xbar / sqrt(nw_variance / n)`.
///
/// A zero-variance series with zero mean yields t = 0 by convention; a
/// zero-variance series with nonzero mean is degenerate and errors.
pub fn nw_tstat(series: &[f64], q: usize) -> Result<f64> {
    let variance = nw_variance(series, q)?;
    let n = series.len();
    let xbar = mean(series);
    if variance == 0.0 {
        return if xbar == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::ZeroVariance { mean: xbar, n })
        };
    }
    // A sample sd at rounding-noise scale relative to the mean is a constant
    // series in all but bit pattern.
    if variance.sqrt() <= 1e-12 * xbar.abs() {
        return Err(Error::ZeroVariance { mean: xbar, n });
    }
    Ok(xbar / (variance / n as f64).sqrt())
}

/// Mean annualized return, HAC t-statistic and significance of one leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategySummary {
    pub ret: f64,
    pub tstat: f64,
    pub n: usize,
    pub sig: Significance,
}

/// Bartlett lag for a strategy cell: K-month holding overlap plus skip.
fn hac_lag(k: u32, skip: u32, n: usize) -> usize {
    // Autocovariances beyond n-1 are empty sums; truncating the lag there
    // leaves the estimator unchanged.
    ((k - 1 + skip) as usize).min(n - 1)
}

/// Summarize one leg of a run: mean annualized return, Newey-West t-statistic
/// with lag q = K - 1 + skip, and the two-sided Student-t significance flag.
pub fn summarize(run: &StrategyRun, leg: Leg) -> Result<StrategySummary> {
    let series = run.leg_series(leg);
    let n = series.len();
    if n < 2 {
        return Err(Error::TooFewObservations { got: n, need: 2 });
    }
    let q = hac_lag(run.spec.k, run.spec.skip, n);
    let tstat = nw_tstat(&series, q)?;
    Ok(StrategySummary {
        ret: mean(&series),
        tstat,
        n,
        sig: Significance::classify(tstat, n),
    })
}

/// Summary of one leg of a sweep/table cell, covering the degenerate shapes
/// a caller has to render: no cohorts at all, a single cohort (mean defined,
/// t-statistic not), and a zero-variance series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellSummary {
    /// No cohorts: nothing to report.
    Empty,
    /// Exactly one cohort: a mean but no inference.
    Single {
        ret: f64,
    },
    /// Zero-variance series with nonzero mean: inference undefined.
    Degenerate {
        ret: f64,
        n: usize,
    },
    Ok(StrategySummary),
}

impl CellSummary {
    pub fn ret(&self) -> Option<f64> {
        match self {
            CellSummary::Empty => None,
            CellSummary::Single { ret } => Some(*ret),
            CellSummary::Degenerate { ret, .. } => Some(*ret),
            CellSummary::Ok(s) => Some(s.ret),
        }
    }
}

/// Like [`summarize`] but folding the degenerate cases into a renderable
/// value instead of an error.
pub fn summarize_cell(run: &StrategyRun, leg: Leg) -> CellSummary {
    match run.cohorts.len() {
        0 => CellSummary::Empty,
        1 => CellSummary::Single {
            ret: run.cohorts[0].leg(leg),
        },
        _ => match summarize(run, leg) {
            Ok(summary) => CellSummary::Ok(summary),
            Err(Error::ZeroVariance { mean, n }) => CellSummary::Degenerate { ret: mean, n },
            Err(e) => unreachable!("summarize over n >= 2 cohorts: {e}"),
        },
    }
}

/// Paired difference between two runs over their shared formation months.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffResult {
    /// Mean of (A - B) paired differences.
    pub delta: f64,
    pub tstat: f64,
    pub n: usize,
    pub sig: Significance,
}

/// Paired difference test (A minus B) of one leg across two runs, aligned on
/// the intersection of their formation months.
pub fn diff_test(run_a: &StrategyRun, run_b: &StrategyRun, leg: Leg) -> Result<DiffResult> {
    let mut diffs = Vec::new();
    let (mut ia, mut ib) = (0, 0);
    while ia < run_a.cohorts.len() && ib < run_b.cohorts.len() {
        let (ca, cb) = (&run_a.cohorts[ia], &run_b.cohorts[ib]);
        match ca.formation.cmp(&cb.formation) {
            std::cmp::Ordering::Less => ia += 1,
            std::cmp::Ordering::Greater => ib += 1,
            std::cmp::Ordering::Equal => {
                diffs.push(ca.leg(leg) - cb.leg(leg));
                ia += 1;
                ib += 1;
            }
        }
    }
    let n = diffs.len();
    if n < 2 {
        return Err(Error::TooFewSharedMonths { got: n, need: 2 });
    }
    let q = hac_lag(
        run_a.spec.k.max(run_b.spec.k),
        run_a.spec.skip.max(run_b.spec.skip),
        n,
    );
    let tstat = nw_tstat(&diffs, q)?;
    Ok(DiffResult {
        delta: mean(&diffs),
        tstat,
        n,
        sig: Significance::classify(tstat, n),
    })
}
