//! Block-bootstrap Monte-Carlo: synthetic market histories stitched from
//! blocks of consecutive historical days, many simulated realizations, and
//! percentile risk/reward metrics with resampled confidence intervals.
//!
//! Random streams come from ChaCha8 seeded with `seed` (via
//! `SeedableRng::seed_from_u64`), one stream per realization index, so a
//! realization's market path does not depend on how work is scheduled.

mod frontier;
mod stats;

use chrono::NaiveDate;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use frontier::{sweep_frontier, FrontierRow, FrontierSpec, STOCK_FRACTION_GRID};
pub use stats::{
    bootstrap_ci, cagr, max_drawdown, percentile, percentile_sorted, summarize, Estimate, MetricsSummary, CI_HIGH,
    CI_LOW,
};

use crate::engine::{run_with, Strategy};
use crate::error::{Error, Result};
use crate::market::MarketHistory;
use stats::DrawdownTracker;

/// Environment variable bounding the worker count; 0 or unset means one per core.
pub const THREADS_ENV: &str = "LEVSIM_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Consecutive trading days per sampled block.
    pub block_length: usize,
    pub horizon_years: u32,
    pub trading_days_per_year: usize,
    pub realizations: usize,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            block_length: 5,
            horizon_years: 10,
            trading_days_per_year: 252,
            realizations: 2000,
            bootstrap_resamples: 300,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_length == 0 {
            return Err(Error::config("sampler.block_length", "must be at least 1"));
        }
        if self.horizon_years == 0 {
            return Err(Error::config("sampler.horizon_years", "must be at least 1"));
        }
        if !(12..=372).contains(&self.trading_days_per_year) {
            return Err(Error::config("sampler.trading_days_per_year", "must be in 12..=372"));
        }
        if self.realizations == 0 {
            return Err(Error::config("sampler.realizations", "must be at least 1"));
        }
        if self.bootstrap_resamples == 0 {
            return Err(Error::config("sampler.bootstrap_resamples", "must be at least 1"));
        }
        Ok(())
    }

    pub fn horizon_days(&self) -> usize {
        self.horizon_years as usize * self.trading_days_per_year
    }
}

/// Stream `id` of the generator seeded with `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform index in `0..n` by the multiply-shift map of a 64-bit draw.
/// The bias is below `n / 2^64`.
pub fn uniform_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}

/// Trading day `i` of the synthetic calendar: years of `days_per_year`
/// days split evenly into twelve months, starting in year 2000.
fn synthetic_date(i: usize, days_per_year: usize) -> NaiveDate {
    let year = 2000 + (i / days_per_year) as i32;
    let j = i % days_per_year;
    let month = j * 12 / days_per_year;
    let first = (month * days_per_year).div_ceil(12);
    NaiveDate::from_ymd_opt(year, month as u32 + 1, (j - first) as u32 + 1).expect("valid synthetic date")
}

/// Stitches a synthetic history of `horizon_days` days from blocks of
/// `block_length` consecutive source days with uniform random start. The last
/// block is cut to fit. Records carry synthetic dates with the same number of
/// trading days in every year.
pub fn sample_realization(history: &MarketHistory, sampler: &SamplerConfig, rng: &mut ChaCha8Rng) -> Result<MarketHistory> {
    let block = sampler.block_length;
    if block == 0 || history.len() < block {
        return Err(Error::HistoryTooShort {
            len: history.len(),
            block,
        });
    }
    let days = sampler.horizon_days();
    let starts = history.len() - block + 1;
    let start_date = NaiveDate::from_ymd_opt(1999, 12, 31).expect("valid date");
    let mut out = MarketHistory::with_capacity(start_date, history.indices().to_vec(), days);
    while out.len() < days {
        let s = uniform_index(rng, starts);
        for k in s..s + block.min(days - out.len()) {
            let date = synthetic_date(out.len(), sampler.trading_days_per_year);
            out.push_from(history, k, date);
        }
    }
    Ok(out)
}

/// Outcome of one simulated realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealizationResult {
    pub final_yield: f64,
    pub min_yield: f64,
    pub max_drawdown: f64,
    pub insolvent: bool,
}

/// Runs `strategy` over `history` and reduces the yield trajectory, which
/// includes the opening state.
pub fn evaluate(strategy: &Strategy, history: &MarketHistory) -> Result<RealizationResult> {
    let mut track = DrawdownTracker::default();
    let outcome = run_with(strategy, history, |_, state| track.push(state.portfolio_yield()))?;
    Ok(RealizationResult {
        final_yield: track.last,
        min_yield: track.min,
        max_drawdown: track.max_drawdown,
        insolvent: outcome.insolvent,
    })
}

/// Realization `index`: its own random stream, a sampled history, a run.
pub fn run_realization(
    strategy: &Strategy,
    history: &MarketHistory,
    sampler: &SamplerConfig,
    index: usize,
) -> Result<RealizationResult> {
    let mut rng = stream(sampler.seed, index as u64);
    let synthetic = sample_realization(history, sampler, &mut rng)?;
    evaluate(strategy, &synthetic)
}

/// Worker count from `LEVSIM_THREADS`; 0 lets the pool pick one per core.
pub fn worker_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::config(THREADS_ENV, format!("expected a worker count, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

/// Runs `f` on a pool of `threads` workers (0 = one per core).
pub fn with_workers<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// All `sampler.realizations` realizations, in index order. Call inside
/// [`with_workers`] to bound parallelism.
pub fn run_monte_carlo(strategy: &Strategy, history: &MarketHistory, sampler: &SamplerConfig) -> Result<Vec<RealizationResult>> {
    sampler.validate()?;
    (0..sampler.realizations)
        .into_par_iter()
        .map(|k| run_realization(strategy, history, sampler, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_backtest, AssetSpec, EngineConfig};
    use crate::market::DividendModel;
    use chrono::Datelike;

    fn source(n: usize) -> MarketHistory {
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        let mut h = MarketHistory::empty(start, vec!["S".into(), "B".into()]);
        for k in 0..n {
            let x = k as f64;
            h.push(
                start + chrono::Days::new(k as u64 + 1),
                &[x, -x],
                &[x + 0.5, -x + 0.5],
                x / 10.0,
            );
        }
        h
    }

    fn sampler(block: usize, years: u32) -> SamplerConfig {
        SamplerConfig {
            block_length: block,
            horizon_years: years,
            realizations: 8,
            bootstrap_resamples: 20,
            seed: 7,
            ..SamplerConfig::default()
        }
    }

    fn strategy() -> Strategy {
        Strategy {
            assets: vec![
                AssetSpec::etf("S", "S", 0.0, DividendModel::ZERO),
                AssetSpec::etf("B", "B", 0.0, DividendModel::ZERO),
            ],
            ideal_fractions: vec![0.6, 0.4],
            target_leverage: 1.0,
            initial_investment: 1.0,
            engine: EngineConfig::frictionless(),
        }
    }

    #[test]
    fn synthetic_calendar_has_fixed_years() {
        let dates: Vec<NaiveDate> = (0..504).map(|i| synthetic_date(i, 252)).collect();
        assert!(dates.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(dates[0], NaiveDate::from_ymd_opt(2000, 1, 1).unwrap());
        assert_eq!(dates[251], NaiveDate::from_ymd_opt(2000, 12, 21).unwrap());
        assert_eq!(dates[252], NaiveDate::from_ymd_opt(2001, 1, 1).unwrap());
        assert_eq!(dates.iter().filter(|d| d.year() == 2000 && d.month() == 5).count(), 21);
        let odd: Vec<NaiveDate> = (0..250).map(|i| synthetic_date(i, 250)).collect();
        assert!(odd.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(odd[249].month(), 12);
    }

    #[test]
    fn blocks_are_consecutive_source_days() {
        let h = source(40);
        let mut rng = stream(3, 0);
        let s = SamplerConfig {
            horizon_years: 1,
            ..sampler(5, 1)
        };
        let out = sample_realization(&h, &s, &mut rng).unwrap();
        assert_eq!(out.len(), 252);
        for b in 0..50 {
            let first = out.day(5 * b).dp_price[0];
            for j in 1..5 {
                assert_eq!(out.day(5 * b + j).dp_price[0], first + j as f64);
            }
        }
    }

    #[test]
    fn history_shorter_than_block_rejected() {
        let mut rng = stream(0, 0);
        assert!(matches!(
            sample_realization(&source(3), &sampler(5, 1), &mut rng),
            Err(Error::HistoryTooShort { len: 3, block: 5 })
        ));
    }

    #[test]
    fn single_block_source_is_replayed() {
        let h = source(252);
        let mut rng = stream(11, 4);
        let out = sample_realization(&h, &sampler(252, 1), &mut rng).unwrap();
        for k in 0..252 {
            assert_eq!(out.day(k).dp_price, h.day(k).dp_price);
            assert_eq!(out.day(k).dp_total_return, h.day(k).dp_total_return);
            assert_eq!(out.day(k).libor, h.day(k).libor);
        }
    }

    #[test]
    fn evaluate_matches_backtest_trajectory() {
        let h = source(30);
        let bt = run_backtest(&strategy(), &h).unwrap();
        let r = evaluate(&strategy(), &h).unwrap();
        let y = bt.yields();
        assert_eq!(r.final_yield, bt.final_yield());
        assert_eq!(r.min_yield, y.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(r.max_drawdown, max_drawdown(&y));
        assert_eq!(r.insolvent, bt.insolvent);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let h = source(60);
        let s = sampler(5, 2);
        let one = with_workers(1, || run_monte_carlo(&strategy(), &h, &s)).unwrap().unwrap();
        let four = with_workers(4, || run_monte_carlo(&strategy(), &h, &s)).unwrap().unwrap();
        assert_eq!(one, four);
        let serial: Vec<_> = (0..s.realizations)
            .map(|k| run_realization(&strategy(), &h, &s, k).unwrap())
            .collect();
        assert_eq!(one, serial);
    }

    #[test]
    fn uniform_index_stays_in_range() {
        let mut rng = stream(5, 1);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[uniform_index(&mut rng, 7)] += 1;
        }
        assert!(seen.iter().all(|c| (800..1200).contains(c)), "{seen:?}");
    }
}
