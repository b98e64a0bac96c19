//! Python bindings: panels, strategy runs, summaries and the synthetic
//! generator, exposed as the `contrarian_py` extension module.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use contrarian_core as core;
use contrarian_core::{Leg, MonthIndex, PanelFilterConfig, StrategySpec, SynthConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_month(s: &str) -> PyResult<MonthIndex> {
    MonthIndex::parse(s).map_err(value_err)
}

fn parse_leg(s: &str) -> PyResult<Leg> {
    Leg::parse(s).ok_or_else(|| value_err(format!("bad leg '{s}' (loser|winner|contrarian)")))
}

/// An immutable monthly return panel.
#[pyclass(frozen)]
struct Panel {
    inner: Arc<core::ReturnPanel>,
}

#[pymethods]
impl Panel {
    /// Load a panel from a `month,stock_id,return` CSV file.
    #[staticmethod]
    #[pyo3(signature = (path, start=None, end=None, drop_first_month=true))]
    fn load(
        path: &str,
        start: Option<&str>,
        end: Option<&str>,
        drop_first_month: bool,
    ) -> PyResult<Panel> {
        let file = std::fs::File::open(path).map_err(value_err)?;
        let config = PanelFilterConfig {
            drop_first_month,
            start: start.map(parse_month).transpose()?,
            end: end.map(parse_month).transpose()?,
        };
        let panel = core::ReturnPanel::load_csv(file, &config).map_err(value_err)?;
        Ok(Panel {
            inner: Arc::new(panel),
        })
    }

    #[getter]
    fn n_stocks(&self) -> usize {
        self.inner.n_stocks()
    }

    #[getter]
    fn n_months(&self) -> usize {
        self.inner.n_months()
    }

    #[getter]
    fn start(&self) -> String {
        self.inner.start().to_string()
    }

    #[getter]
    fn end(&self) -> String {
        self.inner.end().to_string()
    }

    fn stocks(&self) -> Vec<String> {
        self.inner.stocks().iter().map(|s| s.to_string()).collect()
    }

    /// The return of `stock_id` in `month` ("YYYY-MM"), or None if masked.
    fn cell(&self, month: &str, stock_id: &str) -> PyResult<Option<f64>> {
        let month = parse_month(month)?;
        let id = core::StockId::new(stock_id).map_err(value_err)?;
        let idx = self
            .inner
            .stock_index(&id)
            .ok_or_else(|| value_err(format!("unknown stock '{stock_id}'")))?;
        Ok(self.inner.cell(month, idx))
    }

    /// Restrict to [start, end]; stocks without data in the slice are dropped.
    fn slice(&self, start: &str, end: &str) -> PyResult<Panel> {
        let sliced = self
            .inner
            .slice_period(parse_month(start)?, parse_month(end)?)
            .map_err(value_err)?;
        Ok(Panel {
            inner: Arc::new(sliced),
        })
    }

    /// Canonical CSV emission as a string.
    fn csv_text(&self) -> String {
        self.inner.to_csv_string()
    }

    /// Write the canonical CSV to a file.
    fn to_csv(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, self.inner.to_csv_string()).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Panel({} stocks x {} months, {}..{})",
            self.inner.n_stocks(),
            self.inner.n_months(),
            self.inner.start(),
            self.inner.end()
        )
    }
}

/// Cohort results of one strategy cell.
#[pyclass(frozen)]
struct RunResult {
    run: core::StrategyRun,
}

fn summary_dict<'py>(
    py: Python<'py>,
    ret: f64,
    tstat: Option<f64>,
    n: usize,
    sig: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ret", ret)?;
    d.set_item("tstat", tstat)?;
    d.set_item("n", n)?;
    d.set_item("sig", sig)?;
    Ok(d)
}

#[pymethods]
impl RunResult {
    #[getter]
    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("j", self.run.spec.j)?;
        d.set_item("k", self.run.spec.k)?;
        d.set_item("skip", self.run.spec.skip)?;
        d.set_item("groups", self.run.spec.groups)?;
        Ok(d)
    }

    #[getter]
    fn skipped(&self) -> usize {
        self.run.skipped
    }

    fn __len__(&self) -> usize {
        self.run.cohorts.len()
    }

    /// Per-formation-month (month, loser, winner, contrarian) tuples.
    fn cohorts(&self) -> Vec<(String, f64, f64, f64)> {
        self.run
            .cohorts
            .iter()
            .map(|c| {
                (
                    c.formation.to_string(),
                    c.loser_ann,
                    c.winner_ann,
                    c.contrarian_ann,
                )
            })
            .collect()
    }

    /// Mean annualized return, HAC t-statistic, cohort count and
    /// significance ("", "*", "**") of one leg.
    fn summary<'py>(&self, py: Python<'py>, leg: &str) -> PyResult<Bound<'py, PyDict>> {
        let summary = core::summarize(&self.run, parse_leg(leg)?).map_err(value_err)?;
        summary_dict(
            py,
            summary.ret,
            Some(summary.tstat),
            summary.n,
            summary.sig.symbol(),
        )
    }
}

/// Generate a seeded synthetic panel (AR(1) idiosyncratic component plus a
/// common factor); phi < 0 builds a reversal world, phi > 0 momentum.
#[pyfunction]
#[pyo3(signature = (stocks=200, months=240, phi=0.0, sigma_idio=0.08, sigma_mkt=0.05, mu=0.005, seed=42))]
fn generate_panel(
    stocks: usize,
    months: usize,
    phi: f64,
    sigma_idio: f64,
    sigma_mkt: f64,
    mu: f64,
    seed: u64,
) -> PyResult<Panel> {
    let config = SynthConfig {
        n_stocks: stocks,
        n_months: months,
        phi,
        sigma_idio,
        sigma_mkt,
        mu,
        seed,
    };
    let panel = core::generate(&config).map_err(value_err)?;
    Ok(Panel {
        inner: Arc::new(panel),
    })
}

/// Mask cells independently with probability `rate` (every stock keeps at
/// least one observation).
#[pyfunction]
fn inject_missing(panel: &Panel, rate: f64, seed: u64) -> PyResult<Panel> {
    let masked = core::inject_missing(&panel.inner, rate, seed).map_err(value_err)?;
    Ok(Panel {
        inner: Arc::new(masked),
    })
}

/// Evaluate one strategy cell over every formation month of the panel.
#[pyfunction]
#[pyo3(signature = (panel, j, k, skip=0, groups=10))]
fn run(panel: &Panel, j: u32, k: u32, skip: u32, groups: u32) -> PyResult<RunResult> {
    let spec = StrategySpec::new(j, k, skip, groups).map_err(value_err)?;
    let run = core::run_strategy(&panel.inner, &spec).map_err(value_err)?;
    Ok(RunResult { run })
}

/// Evaluate a (J, K) grid at one group count. Returns one dict per cell with
/// j, k, n and a per-leg summary dict (None for legs without inference).
#[pyfunction]
#[pyo3(signature = (panel, j_list, k_list, skip=0, groups=10))]
fn sweep<'py>(
    py: Python<'py>,
    panel: &Panel,
    j_list: Vec<u32>,
    k_list: Vec<u32>,
    skip: u32,
    groups: u32,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cells = core::sweep(&panel.inner, &j_list, &k_list, skip, groups).map_err(value_err)?;
    let mut out = Vec::with_capacity(cells.len());
    for cell in cells {
        let d = PyDict::new(py);
        d.set_item("j", cell.j)?;
        d.set_item("k", cell.k)?;
        d.set_item("n", cell.cohorts)?;
        for (leg, summary) in Leg::ALL.iter().zip(cell.legs.iter()) {
            let value = match summary {
                core::CellSummary::Empty => None,
                core::CellSummary::Single { ret } => Some(summary_dict(py, *ret, None, 1, "")?),
                core::CellSummary::Degenerate { ret, n } => {
                    Some(summary_dict(py, *ret, None, *n, "ERR")?)
                }
                core::CellSummary::Ok(s) => {
                    Some(summary_dict(py, s.ret, Some(s.tstat), s.n, s.sig.symbol())?)
                }
            };
            d.set_item(leg.name(), value)?;
        }
        out.push(d);
    }
    Ok(out)
}

/// Paired difference test (A minus B) of one leg over the shared formation
/// months of two runs.
#[pyfunction]
fn diff<'py>(
    py: Python<'py>,
    run_a: &RunResult,
    run_b: &RunResult,
    leg: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let result = core::diff_test(&run_a.run, &run_b.run, parse_leg(leg)?).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("delta", result.delta)?;
    d.set_item("tstat", result.tstat)?;
    d.set_item("n", result.n)?;
    d.set_item("sig", result.sig.symbol())?;
    Ok(d)
}

#[pymodule]
fn contrarian_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Panel>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(generate_panel, m)?)?;
    m.add_function(wrap_pyfunction!(inject_missing, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(diff, m)?)?;
    Ok(())
}
