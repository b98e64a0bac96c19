//! The four subcommands: run, sweep, compare, synth.
//!
//! Cells are evaluated in parallel but every output file is assembled in a
//! deterministic (G, J, K, leg) order and written once, so results are
//! byte-identical regardless of worker count.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use contrarian_core::{
    diff_test, run_strategy, summarize_cell, CellSummary, DiffResult, Error, Leg,
    PanelFilterConfig, ReturnPanel, StrategyRun, StrategySpec, SynthConfig,
};

use crate::config::{CliResult, CompareMode, Failure, RunConfig};

fn fmt_ret(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_tstat(v: f64) -> String {
    format!("{v:.2}")
}

/// Full-precision value for audit files.
fn fmt_exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn load_panel(path: &Path, config: &RunConfig) -> CliResult<ReturnPanel> {
    let file = fs::File::open(path)
        .map_err(|e| Failure::usage(format!("cannot open {}: {e}", path.display())))?;
    let filter = PanelFilterConfig {
        drop_first_month: config.drop_first_month,
        start: config.start,
        end: config.end,
    };
    ReturnPanel::load_csv(file, &filter)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn single_input(config: &RunConfig) -> CliResult<&PathBuf> {
    match config.inputs.as_slice() {
        [path] => Ok(path),
        [] => Err(Failure::usage("missing --input PATH")),
        _ => Err(Failure::usage("this command takes exactly one --input")),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// One evaluated (G, J, K) cell.
struct Cell {
    groups: u32,
    j: u32,
    k: u32,
    /// None when the panel is too short for this cell.
    run: Option<StrategyRun>,
    legs: [CellSummary; 3],
}

fn evaluate_cell(panel: &ReturnPanel, groups: u32, j: u32, k: u32, skip: u32) -> CliResult<Cell> {
    let spec = StrategySpec::new(j, k, skip, groups)?;
    match run_strategy(panel, &spec) {
        Ok(run) => {
            let legs = [
                summarize_cell(&run, Leg::Loser),
                summarize_cell(&run, Leg::Winner),
                summarize_cell(&run, Leg::Contrarian),
            ];
            Ok(Cell {
                groups,
                j,
                k,
                run: Some(run),
                legs,
            })
        }
        Err(Error::PanelTooShort { .. }) => Ok(Cell {
            groups,
            j,
            k,
            run: None,
            legs: [CellSummary::Empty; 3],
        }),
        Err(e) => Err(e.into()),
    }
}

fn evaluate_grid(
    panel: &ReturnPanel,
    config: &RunConfig,
    grid_by_default: bool,
) -> CliResult<Vec<Cell>> {
    let jk = config.jk_cells(grid_by_default);
    let mut specs = Vec::new();
    for &groups in &config.groups {
        for &(j, k) in &jk {
            specs.push((groups, j, k));
        }
    }
    specs
        .par_iter()
        .map(|&(groups, j, k)| evaluate_cell(panel, groups, j, k, config.skip))
        .collect()
}

fn leg_summary(cell: &Cell, leg: Leg) -> &CellSummary {
    let idx = Leg::ALL.iter().position(|l| *l == leg).expect("leg in ALL");
    &cell.legs[idx]
}

fn summary_fields(summary: &CellSummary) -> (String, String, usize, &'static str) {
    match summary {
        CellSummary::Empty => (String::new(), String::new(), 0, ""),
        CellSummary::Single { ret } => (fmt_ret(*ret), String::new(), 1, ""),
        CellSummary::Degenerate { ret, n } => (fmt_ret(*ret), String::new(), *n, "ERR"),
        CellSummary::Ok(s) => (fmt_ret(s.ret), fmt_tstat(s.tstat), s.n, s.sig.symbol()),
    }
}

/// `run`: evaluate every configured (G, J, K) cell and write `summary.csv`
/// (one row per cell and leg) plus `cohorts.csv` (every formation month, for
/// external auditing).
pub fn cmd_run(config: &RunConfig) -> CliResult<()> {
    let panel = load_panel(single_input(config)?, config)?;
    let cells = evaluate_grid(&panel, config, false)?;

    let mut summary = String::from("J,K,G,leg,ret,tstat,n,sig\n");
    for cell in &cells {
        for &leg in &config.legs {
            let (ret, tstat, n, sig) = summary_fields(leg_summary(cell, leg));
            summary.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                cell.j, cell.k, cell.groups, leg, ret, tstat, n, sig
            ));
        }
    }

    let mut cohorts = String::from("formation,J,K,G,L_ann,W_ann,C_ann\n");
    for cell in &cells {
        if let Some(run) = &cell.run {
            for c in &run.cohorts {
                cohorts.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.formation,
                    cell.j,
                    cell.k,
                    cell.groups,
                    fmt_exact(c.loser_ann),
                    fmt_exact(c.winner_ann),
                    fmt_exact(c.contrarian_ann),
                ));
            }
        }
    }

    write_file(&config.out, "summary.csv", &summary)?;
    write_file(&config.out, "cohorts.csv", &cohorts)?;

    let any_cohorts = cells
        .iter()
        .any(|c| c.run.as_ref().is_some_and(|r| !r.cohorts.is_empty()));
    if !any_cohorts {
        return Err(Failure::no_cells());
    }
    Ok(())
}

/// `sweep`: evaluate a (J, K) grid for a single group count and write one
/// `grid_<leg>.csv` per requested leg, with empty ret/tstat fields for cells
/// the panel cannot support.
pub fn cmd_sweep(config: &RunConfig) -> CliResult<()> {
    if config.groups.len() != 1 {
        return Err(Failure::usage(
            "sweep uses a single group count (pass --groups with one value)",
        ));
    }
    let panel = load_panel(single_input(config)?, config)?;
    let cells = evaluate_grid(&panel, config, true)?;

    for &leg in &config.legs {
        let mut grid = String::from("J,K,ret,tstat,n\n");
        for cell in &cells {
            let (ret, tstat, n, _) = summary_fields(leg_summary(cell, leg));
            grid.push_str(&format!("{},{},{},{},{}\n", cell.j, cell.k, ret, tstat, n));
        }
        write_file(&config.out, &format!("grid_{leg}.csv"), &grid)?;
    }

    let any_cohorts = cells
        .iter()
        .any(|c| c.run.as_ref().is_some_and(|r| !r.cohorts.is_empty()));
    if !any_cohorts {
        return Err(Failure::no_cells());
    }
    Ok(())
}

/// Outcome of one paired difference cell, shaped for rendering.
enum DiffCell {
    Ok(DiffResult),
    /// Constant difference series: delta defined, inference not.
    ZeroVariance {
        delta: f64,
        n: usize,
    },
    /// Too little overlap between the runs.
    NoOverlap {
        n: usize,
    },
    /// One or both runs had no cohorts at all.
    Empty,
}

fn diff_cell(a: Option<&StrategyRun>, b: Option<&StrategyRun>, leg: Leg) -> DiffCell {
    let (Some(a), Some(b)) = (a, b) else {
        return DiffCell::Empty;
    };
    match diff_test(a, b, leg) {
        Ok(result) => DiffCell::Ok(result),
        Err(Error::ZeroVariance { mean, n }) => DiffCell::ZeroVariance { delta: mean, n },
        Err(Error::TooFewSharedMonths { got, .. }) => DiffCell::NoOverlap { n: got },
        Err(_) => DiffCell::Empty,
    }
}

fn diff_fields(cell: &DiffCell) -> (String, String, usize, &'static str, bool) {
    match cell {
        DiffCell::Ok(d) => (
            fmt_ret(d.delta),
            fmt_tstat(d.tstat),
            d.n,
            d.sig.symbol(),
            true,
        ),
        DiffCell::ZeroVariance { delta, n } => (fmt_ret(*delta), String::new(), *n, "ERR", true),
        DiffCell::NoOverlap { n } => (String::new(), String::new(), *n, "", false),
        DiffCell::Empty => (String::new(), String::new(), 0, "", false),
    }
}

/// `compare`: paired difference tests, either between grouping counts on one
/// panel (pairs like `10-3`) or between two panels at a fixed grouping
/// (pair `A-B`, first input minus second). Writes `diff.csv`.
pub fn cmd_compare(config: &RunConfig, mode: CompareMode) -> CliResult<()> {
    let mut rows: Vec<(String, u32, u32, Leg, DiffCell)> = Vec::new();

    match mode {
        CompareMode::GroupingPairs => {
            if config.groups.len() < 2 {
                return Err(Failure::usage(
                    "grouping-pairs needs at least two --groups values",
                ));
            }
            let panel = load_panel(single_input(config)?, config)?;
            let cells = evaluate_grid(&panel, config, false)?;
            let find = |groups: u32, j: u32, k: u32| {
                cells
                    .iter()
                    .find(|c| c.groups == groups && c.j == j && c.k == k)
                    .and_then(|c| c.run.as_ref())
            };
            // Pairs ordered as (5-3, 10-5, 10-3) for groups {3, 5, 10}:
            // larger count ascending, smaller count descending.
            for (ai, &a) in config.groups.iter().enumerate().skip(1) {
                for &b in config.groups[..ai].iter().rev() {
                    let pair = format!("{a}-{b}");
                    for &(j, k) in &config.jk_cells(false) {
                        for &leg in &config.legs {
                            rows.push((
                                pair.clone(),
                                j,
                                k,
                                leg,
                                diff_cell(find(a, j, k), find(b, j, k), leg),
                            ));
                        }
                    }
                }
            }
        }
        CompareMode::PanelPairs => {
            if config.inputs.len() != 2 {
                return Err(Failure::usage(
                    "panel-pairs needs exactly two --input paths",
                ));
            }
            if config.groups.len() != 1 {
                return Err(Failure::usage(
                    "panel-pairs uses a single group count (pass --groups with one value)",
                ));
            }
            let panel_a = load_panel(&config.inputs[0], config)?;
            let panel_b = load_panel(&config.inputs[1], config)?;
            let cells_a = evaluate_grid(&panel_a, config, false)?;
            let cells_b = evaluate_grid(&panel_b, config, false)?;
            for (ca, cb) in cells_a.iter().zip(&cells_b) {
                for &leg in &config.legs {
                    rows.push((
                        "A-B".to_string(),
                        ca.j,
                        ca.k,
                        leg,
                        diff_cell(ca.run.as_ref(), cb.run.as_ref(), leg),
                    ));
                }
            }
        }
    }

    let mut diff = String::from("pair,J,K,leg,delta,tstat,n,sig\n");
    let mut any_computable = false;
    for (pair, j, k, leg, cell) in &rows {
        let (delta, tstat, n, sig, computable) = diff_fields(cell);
        any_computable |= computable;
        diff.push_str(&format!("{pair},{j},{k},{leg},{delta},{tstat},{n},{sig}\n"));
    }
    write_file(&config.out, "diff.csv", &diff)?;

    if !any_computable {
        return Err(Failure::no_cells());
    }
    Ok(())
}

/// `synth`: generate a seeded synthetic panel and write `<out>/panel.csv`
/// through the canonical emitter.
pub fn cmd_synth(config: &SynthConfig, out: &Path) -> CliResult<()> {
    let panel = contrarian_core::generate(config)?;
    write_file(out, "panel.csv", &panel.to_csv_string())?;
    Ok(())
}
