//! Command drivers: run a scenario and write its tables.
//!
//! CSV files use a header row, comma separators and shortest round-trip
//! float formatting, so equal results give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::engine::run_backtest;
use crate::error::{Error, Result};
use crate::montecarlo::{
    run_monte_carlo, summarize, sweep_frontier, with_workers, Estimate, FrontierRow, MetricsSummary,
    RealizationResult, CI_HIGH, CI_LOW,
};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const FRONTIER_FILE: &str = "frontier.csv";

pub const HISTOGRAM_BINS: usize = 60;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub files: Vec<PathBuf>,
    pub final_yield: f64,
    pub insolvent: bool,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub files: Vec<PathBuf>,
    pub summary: MetricsSummary,
}

#[derive(Debug, Clone)]
pub struct FrontierReport {
    pub files: Vec<PathBuf>,
    pub rows: Vec<FrontierRow>,
}

impl FrontierReport {
    /// Largest insolvent share over all rows.
    pub fn worst_insolvent_fraction(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.summary.insolvent_fraction())
            .fold(0.0, f64::max)
    }
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_row<I, T>(w: &mut csv::Writer<fs::File>, path: &Path, row: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(row).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    })
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs the scenario once over its historical window and writes the daily
/// trajectory, starting with the opening state.
pub fn cmd_backtest(config: &ScenarioConfig, out: &Path) -> Result<BacktestReport> {
    let strategy = config.strategy()?;
    let history = config.load_history()?;
    let bt = run_backtest(&strategy, &history)?;

    prepare(out)?;
    let path = out.join(TRAJECTORY_FILE);
    let mut w = writer(&path)?;
    let mut header = vec!["date".to_string(), "yield".into(), "total".into(), "margin_debt".into()];
    header.extend(strategy.assets.iter().map(|a| format!("f_{}", a.asset_id)));
    header.extend(["leverage".into(), "gains".into(), "cumulative_tax".into()]);
    write_row(&mut w, &path, &header)?;
    for p in &bt.points {
        let mut row = vec![
            p.date.to_string(),
            p.portfolio_yield.to_string(),
            p.total.to_string(),
            p.margin_debt.to_string(),
        ];
        row.extend(p.fractions.iter().map(f64::to_string));
        row.extend([p.leverage.to_string(), p.gains.to_string(), p.cumulative_tax.to_string()]);
        write_row(&mut w, &path, &row)?;
    }
    finish(w, &path)?;
    Ok(BacktestReport {
        files: vec![path],
        final_yield: bt.final_yield(),
        insolvent: bt.insolvent,
    })
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    schema_version: u32,
    realizations: usize,
    insolvent: usize,
    insolvent_fraction: f64,
    horizon_years: u32,
    block_length: usize,
    bootstrap_resamples: usize,
    seed: u64,
    ci_percentiles: (f64, f64),
    metrics: MetricsDoc<'a>,
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    reward: &'a Estimate,
    risk_rational: &'a Estimate,
    risk_min_yield: &'a Estimate,
    risk_drawdown: &'a Estimate,
    cagr_reward: &'a Estimate,
}

/// Runs the Monte-Carlo realizations on `threads` workers (0 = one per
/// core) and writes per-realization results, the summary and histograms.
pub fn cmd_mc(config: &ScenarioConfig, out: &Path, threads: usize) -> Result<McReport> {
    let strategy = config.strategy()?;
    let history = config.load_history()?;
    let sampler = &config.sampler;
    let results = with_workers(threads, || run_monte_carlo(&strategy, &history, sampler))??;
    let summary = summarize(
        &results,
        f64::from(sampler.horizon_years),
        sampler.bootstrap_resamples,
        sampler.seed,
    )?;

    prepare(out)?;
    let results_path = out.join(RESULTS_FILE);
    write_results(&results_path, &results)?;

    let summary_path = out.join(SUMMARY_FILE);
    let doc = SummaryDoc {
        schema_version: SCHEMA_VERSION,
        realizations: summary.realizations,
        insolvent: summary.insolvent,
        insolvent_fraction: summary.insolvent_fraction(),
        horizon_years: sampler.horizon_years,
        block_length: sampler.block_length,
        bootstrap_resamples: sampler.bootstrap_resamples,
        seed: sampler.seed,
        ci_percentiles: (CI_LOW, CI_HIGH),
        metrics: MetricsDoc {
            reward: &summary.reward,
            risk_rational: &summary.risk_rational,
            risk_min_yield: &summary.risk_min_yield,
            risk_drawdown: &summary.risk_drawdown,
            cagr_reward: &summary.cagr_reward,
        },
    };
    let mut json = serde_json::to_string_pretty(&doc).map_err(|e| Error::Invalid(e.to_string()))?;
    json.push('\n');
    fs::write(&summary_path, json).map_err(|e| Error::io(&summary_path, e))?;

    let histogram_path = out.join(HISTOGRAM_FILE);
    write_histograms(&histogram_path, &results)?;

    Ok(McReport {
        files: vec![results_path, summary_path, histogram_path],
        summary,
    })
}

fn write_results(path: &Path, results: &[RealizationResult]) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, ["realization", "final_yield", "min_yield", "max_drawdown", "insolvent"])?;
    for (k, r) in results.iter().enumerate() {
        write_row(
            &mut w,
            path,
            [
                k.to_string(),
                r.final_yield.to_string(),
                r.min_yield.to_string(),
                r.max_drawdown.to_string(),
                r.insolvent.to_string(),
            ],
        )?;
    }
    finish(w, path)
}

/// One histogram bin; `lo` is inclusive, `hi` exclusive except for the last bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Bins spaced evenly in `ln y` over the observed positive range. Values at
/// or below zero, which only insolvent runs produce, are counted in one
/// extra leading bin `[min, 0]`.
pub fn log_histogram(values: &[f64], bins: usize) -> Vec<Bin> {
    let mut out = Vec::new();
    let non_positive: Vec<f64> = values.iter().copied().filter(|v| *v <= 0.0).collect();
    if !non_positive.is_empty() {
        out.push(Bin {
            lo: non_positive.iter().copied().fold(f64::INFINITY, f64::min),
            hi: 0.0,
            count: non_positive.len(),
        });
    }
    let logs: Vec<f64> = values.iter().filter(|v| **v > 0.0).map(|v| v.ln()).collect();
    out.extend(
        even_bins(&logs, bins)
            .into_iter()
            .map(|b| Bin {
                lo: b.lo.exp(),
                hi: b.hi.exp(),
                count: b.count,
            }),
    );
    out
}

/// `bins` equal-width bins over the range of `values`. A range of zero width
/// gives a single bin.
pub fn even_bins(values: &[f64], bins: usize) -> Vec<Bin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![Bin {
            lo,
            hi,
            count: values.len(),
        }];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| Bin {
            lo: lo + width * k as f64,
            hi: if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 },
            count,
        })
        .collect()
}

fn write_histograms(path: &Path, results: &[RealizationResult]) -> Result<()> {
    let finals: Vec<f64> = results.iter().map(|r| r.final_yield).collect();
    let mins: Vec<f64> = results.iter().map(|r| r.min_yield).collect();
    let drawdowns: Vec<f64> = results.iter().map(|r| r.max_drawdown).collect();
    let tables = [
        ("final_yield", log_histogram(&finals, HISTOGRAM_BINS)),
        ("min_yield", log_histogram(&mins, HISTOGRAM_BINS)),
        ("max_drawdown", even_bins(&drawdowns, HISTOGRAM_BINS)),
    ];
    let mut w = writer(path)?;
    write_row(&mut w, path, ["metric", "bin_lo", "bin_hi", "count"])?;
    for (name, bins) in &tables {
        for b in bins {
            write_row(
                &mut w,
                path,
                [name.to_string(), b.lo.to_string(), b.hi.to_string(), b.count.to_string()],
            )?;
        }
    }
    finish(w, path)
}

/// Sweeps stock fraction and leverage variant and writes one row per pair.
pub fn cmd_frontier(config: &ScenarioConfig, out: &Path, threads: usize) -> Result<FrontierReport> {
    let spec = config.frontier_spec()?;
    let history = config.load_history()?;
    config.sampler.validate()?;
    let rows = with_workers(threads, || sweep_frontier(&spec, &history, &config.sampler))??;

    prepare(out)?;
    let path = out.join(FRONTIER_FILE);
    let mut w = writer(&path)?;
    write_row(
        &mut w,
        &path,
        [
            "stock_fraction",
            "variant",
            "reward_median",
            "reward_ci_lo",
            "reward_ci_hi",
            "cagr",
            "risk5_final",
            "risk5_ci_lo",
            "risk5_ci_hi",
            "risk5_min_yield",
            "drawdown_median",
            "cagr_ci_lo",
            "cagr_ci_hi",
            "risk5_min_yield_ci_lo",
            "risk5_min_yield_ci_hi",
            "drawdown_ci_lo",
            "drawdown_ci_hi",
            "insolvent_fraction",
        ],
    )?;
    for r in &rows {
        let s = &r.summary;
        write_row(
            &mut w,
            &path,
            [
                r.stock_fraction.to_string(),
                r.variant.label(),
                s.reward.value.to_string(),
                s.reward.ci.0.to_string(),
                s.reward.ci.1.to_string(),
                s.cagr_reward.value.to_string(),
                s.risk_rational.value.to_string(),
                s.risk_rational.ci.0.to_string(),
                s.risk_rational.ci.1.to_string(),
                s.risk_min_yield.value.to_string(),
                s.risk_drawdown.value.to_string(),
                s.cagr_reward.ci.0.to_string(),
                s.cagr_reward.ci.1.to_string(),
                s.risk_min_yield.ci.0.to_string(),
                s.risk_min_yield.ci.1.to_string(),
                s.risk_drawdown.ci.0.to_string(),
                s.risk_drawdown.ci.1.to_string(),
                s.insolvent_fraction().to_string(),
            ],
        )?;
    }
    finish(w, &path)?;
    Ok(FrontierReport { files: vec![path], rows })
}
