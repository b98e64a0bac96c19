//! Flag parsing and config-file merging.
//!
//! Every option can come from the command line or from an optional
//! `key=value` config file; explicit flags win. Keys mirror the long flag
//! names (`-` and `_` are interchangeable).

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use contrarian_core::{Leg, MonthIndex, SynthConfig};

/// A command failure carrying the process exit code: 1 for usage/data
/// errors, 2 for runs where no cell was computable.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn no_cells() -> Failure {
        Failure {
            code: 2,
            message: "no computable cells".to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<contrarian_core::Error> for Failure {
    fn from(e: contrarian_core::Error) -> Failure {
        Failure::usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Flags shared by `run`, `sweep` and `compare`.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Input panel CSV (repeatable; `compare --mode panel-pairs` takes two)
    #[arg(long = "input", value_name = "PATH")]
    pub input: Vec<PathBuf>,

    /// Optional key=value config file; command-line flags win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// First month to keep, as YYYY-MM
    #[arg(long, value_name = "YYYY-MM")]
    pub start: Option<String>,

    /// Last month to keep, as YYYY-MM
    #[arg(long, value_name = "YYYY-MM")]
    pub end: Option<String>,

    /// Comma-separated estimation horizons in months
    #[arg(long, value_name = "LIST")]
    pub j: Option<String>,

    /// Comma-separated holding horizons in months
    #[arg(long, value_name = "LIST")]
    pub k: Option<String>,

    /// Months skipped between estimation and holding windows
    #[arg(long, value_name = "N")]
    pub skip: Option<u32>,

    /// Comma-separated group counts (each >= 2)
    #[arg(long, value_name = "LIST")]
    pub groups: Option<String>,

    /// Comma-separated subset of loser,winner,contrarian
    #[arg(long, value_name = "LIST")]
    pub legs: Option<String>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Mask each stock's first observation (IPO-month exclusion); on by default
    #[arg(
        long = "drop-first-month",
        value_name = "BOOL",
        num_args = 0..=1,
        default_missing_value = "true",
        action = clap::ArgAction::Set
    )]
    pub drop_first_month: Option<bool>,
}

#[derive(clap::Args, Debug, Clone)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Comparison mode: grouping-pairs | panel-pairs
    #[arg(long, value_name = "MODE")]
    pub mode: Option<String>,
}

#[derive(clap::Args, Debug, Clone)]
pub struct SynthArgs {
    /// Optional key=value config file; command-line flags win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Number of stocks
    #[arg(long, value_name = "N")]
    pub stocks: Option<usize>,

    /// Number of months
    #[arg(long, value_name = "N")]
    pub months: Option<usize>,

    /// Idiosyncratic AR(1) coefficient in (-1, 1); negative = reversal world
    #[arg(long, value_name = "PHI", allow_hyphen_values = true)]
    pub phi: Option<f64>,

    /// Monthly idiosyncratic volatility
    #[arg(long = "sigma-idio", value_name = "SD")]
    pub sigma_idio: Option<f64>,

    /// Monthly common-factor volatility
    #[arg(long = "sigma-mkt", value_name = "SD")]
    pub sigma_mkt: Option<f64>,

    /// Common monthly drift
    #[arg(long, value_name = "MU", allow_hyphen_values = true)]
    pub mu: Option<f64>,

    /// RNG seed
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Output directory; the panel is written to panel.csv inside it
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareMode {
    GroupingPairs,
    PanelPairs,
}

/// Fully resolved configuration for run/sweep/compare.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub start: Option<MonthIndex>,
    pub end: Option<MonthIndex>,
    pub j_set: Vec<u32>,
    /// `None` when no --k was given anywhere; run/compare then pair K = J.
    pub k_set: Option<Vec<u32>>,
    pub skip: u32,
    pub groups: Vec<u32>,
    pub legs: Vec<Leg>,
    pub out: PathBuf,
    pub drop_first_month: bool,
}

impl RunConfig {
    /// The (J, K) cells to evaluate. With an explicit K list this is the full
    /// J x K product; without one, run/compare use the J = K diagonal (the
    /// classic table shape) while sweep always wants a grid.
    pub fn jk_cells(&self, grid_by_default: bool) -> Vec<(u32, u32)> {
        match (&self.k_set, grid_by_default) {
            (Some(k_set), _) => self
                .j_set
                .iter()
                .flat_map(|&j| k_set.iter().map(move |&k| (j, k)))
                .collect(),
            (None, true) => self
                .j_set
                .iter()
                .flat_map(|&j| self.j_set.iter().map(move |&k| (j, k)))
                .collect(),
            (None, false) => self.j_set.iter().map(|&j| (j, j)).collect(),
        }
    }
}

const DEFAULT_HORIZONS: [u32; 9] = [1, 6, 12, 18, 24, 30, 36, 42, 48];

/// Key=value file contents, keys normalized to use `-`.
struct ConfigFile {
    values: BTreeMap<String, Vec<String>>,
}

impl ConfigFile {
    fn load(path: Option<&PathBuf>) -> CliResult<ConfigFile> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let Some(path) = path else {
            return Ok(ConfigFile { values });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Failure::usage(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    ln + 1
                )));
            };
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Failure::usage(format!(
                    "{}:{}: unknown key '{key}'",
                    path.display(),
                    ln + 1
                )));
            }
            values
                .entry(key)
                .or_default()
                .push(value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    fn single(&self, key: &str) -> CliResult<Option<&str>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0].as_str())),
            Some(_) => Err(Failure::usage(format!(
                "config key '{key}' given more than once"
            ))),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.single(key)? {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Failure::usage(format!("config key '{key}': bad value '{s}'"))),
        }
    }
}

const KNOWN_KEYS: [&str; 18] = [
    "input",
    "start",
    "end",
    "j",
    "k",
    "skip",
    "groups",
    "legs",
    "out",
    "drop-first-month",
    "mode",
    "stocks",
    "months",
    "phi",
    "sigma-idio",
    "sigma-mkt",
    "mu",
    "seed",
];

fn parse_u32_list(text: &str, what: &str, min: u32) -> CliResult<Vec<u32>> {
    let mut out = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let v: u32 = piece
            .parse()
            .map_err(|_| Failure::usage(format!("bad {what} value '{piece}'")))?;
        if v < min {
            return Err(Failure::usage(format!(
                "{what} values must be >= {min}, got {v}"
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Failure::usage(format!("empty {what} list")));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_legs(text: &str) -> CliResult<Vec<Leg>> {
    let mut picked = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let leg = Leg::parse(piece).ok_or_else(|| {
            Failure::usage(format!(
                "bad leg '{piece}' (expected loser, winner or contrarian)"
            ))
        })?;
        if !picked.contains(&leg) {
            picked.push(leg);
        }
    }
    if picked.is_empty() {
        return Err(Failure::usage("empty legs list"));
    }
    // Canonical report order regardless of how they were listed.
    Ok(Leg::ALL
        .into_iter()
        .filter(|l| picked.contains(l))
        .collect())
}

fn parse_month(text: &str, what: &str) -> CliResult<MonthIndex> {
    MonthIndex::parse(text).map_err(|_| Failure::usage(format!("bad {what} month '{text}'")))
}

impl CommonArgs {
    /// Merge flags over the config file and apply defaults.
    /// `default_groups` differs per subcommand (sweep wants a single grid).
    pub fn resolve(&self, default_groups: &[u32]) -> CliResult<RunConfig> {
        let file = ConfigFile::load(self.config.as_ref())?;

        let inputs: Vec<PathBuf> = if !self.input.is_empty() {
            self.input.clone()
        } else {
            file.values
                .get("input")
                .map(|v| v.iter().map(PathBuf::from).collect())
                .unwrap_or_default()
        };

        let start = match (&self.start, file.single("start")?) {
            (Some(s), _) => Some(parse_month(s, "start")?),
            (None, Some(s)) => Some(parse_month(s, "start")?),
            (None, None) => None,
        };
        let end = match (&self.end, file.single("end")?) {
            (Some(s), _) => Some(parse_month(s, "end")?),
            (None, Some(s)) => Some(parse_month(s, "end")?),
            (None, None) => None,
        };
        if let (Some(s), Some(e)) = (start, end) {
            if s > e {
                return Err(Failure::usage(format!("start {s} is after end {e}")));
            }
        }

        let j_set = match self.j.as_deref().or(file.single("j")?) {
            Some(text) => parse_u32_list(text, "J", 1)?,
            None => DEFAULT_HORIZONS.to_vec(),
        };
        let k_set = match self.k.as_deref().or(file.single("k")?) {
            Some(text) => Some(parse_u32_list(text, "K", 1)?),
            None => None,
        };
        let groups = match self.groups.as_deref().or(file.single("groups")?) {
            Some(text) => parse_u32_list(text, "group count", 2)?,
            None => default_groups.to_vec(),
        };
        let legs = match self.legs.as_deref().or(file.single("legs")?) {
            Some(text) => parse_legs(text)?,
            None => Leg::ALL.to_vec(),
        };
        let skip = match self.skip {
            Some(v) => v,
            None => file.parsed::<u32>("skip")?.unwrap_or(0),
        };
        let out = match &self.out {
            Some(p) => p.clone(),
            None => file
                .single("out")?
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
        };
        let drop_first_month = match self.drop_first_month {
            Some(v) => v,
            None => file.parsed::<bool>("drop-first-month")?.unwrap_or(true),
        };

        Ok(RunConfig {
            inputs,
            start,
            end,
            j_set,
            k_set,
            skip,
            groups,
            legs,
            out,
            drop_first_month,
        })
    }
}

impl CompareArgs {
    pub fn resolve(&self) -> CliResult<(RunConfig, CompareMode)> {
        let config = self.common.resolve(&[3, 5, 10])?;
        let file = ConfigFile::load(self.common.config.as_ref())?;
        let mode = match self.mode.as_deref().or(file.single("mode")?) {
            Some("grouping-pairs") => CompareMode::GroupingPairs,
            Some("panel-pairs") => CompareMode::PanelPairs,
            Some(other) => {
                return Err(Failure::usage(format!(
                    "bad mode '{other}' (expected grouping-pairs or panel-pairs)"
                )))
            }
            None => {
                return Err(Failure::usage(
                    "compare requires --mode grouping-pairs or --mode panel-pairs",
                ))
            }
        };
        Ok((config, mode))
    }
}

impl SynthArgs {
    pub fn resolve(&self) -> CliResult<(SynthConfig, PathBuf)> {
        let file = ConfigFile::load(self.config.as_ref())?;
        let defaults = SynthConfig::default();
        let config = SynthConfig {
            n_stocks: match self.stocks {
                Some(v) => v,
                None => file.parsed::<usize>("stocks")?.unwrap_or(defaults.n_stocks),
            },
            n_months: match self.months {
                Some(v) => v,
                None => file.parsed::<usize>("months")?.unwrap_or(defaults.n_months),
            },
            phi: match self.phi {
                Some(v) => v,
                None => file.parsed::<f64>("phi")?.unwrap_or(defaults.phi),
            },
            sigma_idio: match self.sigma_idio {
                Some(v) => v,
                None => file
                    .parsed::<f64>("sigma-idio")?
                    .unwrap_or(defaults.sigma_idio),
            },
            sigma_mkt: match self.sigma_mkt {
                Some(v) => v,
                None => file
                    .parsed::<f64>("sigma-mkt")?
                    .unwrap_or(defaults.sigma_mkt),
            },
            mu: match self.mu {
                Some(v) => v,
                None => file.parsed::<f64>("mu")?.unwrap_or(defaults.mu),
            },
            seed: match self.seed {
                Some(v) => v,
                None => file.parsed::<u64>("seed")?.unwrap_or(defaults.seed),
            },
        };
        let out = match &self.out {
            Some(p) => p.clone(),
            None => file
                .single("out")?
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
        };
        Ok((config, out))
    }
}
