//! Seeded synthetic return panels with a known reversal/momentum structure.
//!
//! Model: `r[i,t] = mu + m[t] + s[i,t]` with a common factor
//! `m[t] ~ N(0, sigma_mkt^2)` and an idiosyncratic AR(1) component
//! `s[i,t] = phi * s[i,t-1] + eps[i,t]`, `eps ~ N(0, sigma_idio^2)`,
//! initialized from the stationary distribution
//! `s[i,0] ~ N(0, sigma_idio^2 / (1 - phi^2))`. Returns are clamped at
//! -0.99. `phi < 0` builds a reversal world, `phi > 0` a momentum world,
//! `phi = 0` a null world.
//!
//! Reproducibility contract: the random stream is ChaCha20 seeded with
//! `seed` via `seed_from_u64`; every uniform consumes one `u64`
//! (`(x >> 11) * 2^-53`), every normal is a Box-Muller pair
//! `sqrt(-2 ln u1) * cos(2 pi u2)` consuming exactly two uniforms.
//! Consumption order: the `n_months` market draws in month order, then for
//! each stock in id order its stationary draw followed by the `n_months - 1`
//! innovations in month order. Draws are consumed even when a sigma is zero,
//! so changing one sigma never shifts the rest of the stream.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::panel::{MonthIndex, ReturnPanel, StockId};

/// Panel months start here; the generator has no calendar semantics beyond
/// needing a concrete starting month.
const SYNTH_EPOCH: (i32, u32) = (2000, 1);

/// Returns are clamped to stay above -1.
const CLAMP_FLOOR: f64 = -0.99;

/// Parameters of the synthetic panel generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_stocks: usize,
    pub n_months: usize,
    /// Idiosyncratic AR(1) coefficient in (-1, 1); negative means reversal.
    pub phi: f64,
    /// Monthly idiosyncratic volatility.
    pub sigma_idio: f64,
    /// Monthly common-factor volatility.
    pub sigma_mkt: f64,
    /// Common monthly drift.
    pub mu: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_stocks: 200,
            n_months: 240,
            phi: 0.0,
            sigma_idio: 0.08,
            sigma_mkt: 0.05,
            mu: 0.005,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidSynthConfig(msg.to_string()));
        if self.n_stocks < 2 {
            return fail("need at least 2 stocks");
        }
        if self.n_stocks > 9999 {
            // Ids are "S0001".. and must sort byte-wise in numeric order.
            return fail("at most 9999 stocks");
        }
        if self.n_months < 2 {
            return fail("need at least 2 months");
        }
        if !(self.phi.is_finite() && self.phi.abs() < 1.0) {
            return fail("phi must satisfy |phi| < 1");
        }
        if !(self.sigma_idio.is_finite() && self.sigma_idio >= 0.0) {
            return fail("sigma_idio must be >= 0");
        }
        if !(self.sigma_mkt.is_finite() && self.sigma_mkt >= 0.0) {
            return fail("sigma_mkt must be >= 0");
        }
        if !self.mu.is_finite() {
            return fail("mu must be finite");
        }
        Ok(())
    }
}

/// Generation side effects worth auditing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenStats {
    /// Cells clamped at the -0.99 floor.
    pub clamped: usize,
}

fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller; consumes exactly two uniforms.
fn standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1 = 1.0 - uniform(rng); // (0, 1]
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generate a dense panel.
pub fn generate(config: &SynthConfig) -> Result<ReturnPanel> {
    generate_with_stats(config).map(|(panel, _)| panel)
}

/// Generate a dense panel, reporting clamp counts.
pub fn generate_with_stats(config: &SynthConfig) -> Result<(ReturnPanel, GenStats)> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let (n, t) = (config.n_stocks, config.n_months);

    let market: Vec<f64> = (0..t)
        .map(|_| standard_normal(&mut rng) * config.sigma_mkt)
        .collect();

    let stationary_sd = config.sigma_idio / (1.0 - config.phi * config.phi).sqrt();
    let mut cells = vec![None; n * t];
    let mut stats = GenStats::default();
    for stock in 0..n {
        let mut s = standard_normal(&mut rng) * stationary_sd;
        for month in 0..t {
            if month > 0 {
                s = config.phi * s + standard_normal(&mut rng) * config.sigma_idio;
            }
            let mut r = config.mu + market[month] + s;
            if r < CLAMP_FLOOR {
                r = CLAMP_FLOOR;
                stats.clamped += 1;
            }
            cells[month * n + stock] = Some(r);
        }
    }

    let stocks: Vec<StockId> = (1..=n)
        .map(|i| StockId::new(format!("S{i:04}")).expect("generated ids are valid"))
        .collect();
    let start = MonthIndex::from_ym(SYNTH_EPOCH.0, SYNTH_EPOCH.1).expect("fixed epoch");
    let panel = ReturnPanel::from_parts(start, stocks, cells)?;
    Ok((panel, stats))
}

/// Mask each cell independently with probability `rate`, deterministically
/// per seed. A stock that would lose its last present return has its row of
/// draws redrawn, so every stock keeps at least one observation.
///
/// Consumption order: one uniform per (stock, month) cell, stocks outer in
/// id order, months inner; a redraw repeats the stock's row.
pub fn inject_missing(panel: &ReturnPanel, rate: f64, seed: u64) -> Result<ReturnPanel> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidSynthConfig(format!(
            "missing rate must be in [0, 1), got {rate}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = panel.n_stocks();
    let t = panel.n_months();
    let mut cells: Vec<Option<f64>> = Vec::with_capacity(n * t);
    cells.resize(n * t, None);
    for stock in 0..n {
        loop {
            let mask: Vec<bool> = (0..t).map(|_| uniform(&mut rng) < rate).collect();
            let survives =
                (0..t).any(|m| panel.cell(panel.start() + m as i32, stock).is_some() && !mask[m]);
            if survives {
                for (m, &drop) in mask.iter().enumerate() {
                    let value = panel.cell(panel.start() + m as i32, stock);
                    cells[m * n + stock] = if drop { None } else { value };
                }
                break;
            }
        }
    }
    ReturnPanel::from_parts(panel.start(), panel.stocks().to_vec(), cells)
}
