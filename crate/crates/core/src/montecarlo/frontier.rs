use super::{run_monte_carlo, summarize, MetricsSummary, SamplerConfig};
use crate::engine::{AssetSpec, EngineConfig, Leverage, Strategy};
use crate::error::Result;
use crate::market::MarketHistory;

/// Stock fractions 0, 0.05, ..., 1.
pub const STOCK_FRACTION_GRID: [f64; 21] = {
    let mut grid = [0.0; 21];
    let mut i = 0;
    while i < 21 {
        grid[i] = i as f64 / 20.0;
        i += 1;
    }
    grid
};

/// A two-asset stock/bond family swept over allocations and leverage.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierSpec {
    pub stock: AssetSpec,
    pub bond: AssetSpec,
    /// Expense ratio of the funds used in LETF variants.
    pub letf_expense_ratio: f64,
    pub initial_investment: f64,
    pub engine: EngineConfig,
    pub stock_fractions: Vec<f64>,
    pub variants: Vec<Leverage>,
}

impl FrontierSpec {
    pub fn default_variants() -> Vec<Leverage> {
        vec![
            Leverage::None,
            Leverage::Letf(2.0),
            Leverage::Letf(3.0),
            Leverage::Margin(1.8),
        ]
    }

    pub fn strategy(&self, stock_fraction: f64, variant: Leverage) -> Result<Strategy> {
        Strategy::build(
            &[self.stock.clone(), self.bond.clone()],
            vec![stock_fraction, 1.0 - stock_fraction],
            variant,
            self.letf_expense_ratio,
            self.initial_investment,
            self.engine.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    pub stock_fraction: f64,
    pub variant: Leverage,
    pub summary: MetricsSummary,
}

/// Metrics for every (stock fraction, variant) pair, fraction-major. Every
/// row sees the same sampled markets because each uses `sampler.seed`.
pub fn sweep_frontier(spec: &FrontierSpec, history: &MarketHistory, sampler: &SamplerConfig) -> Result<Vec<FrontierRow>> {
    let mut rows = Vec::with_capacity(spec.stock_fractions.len() * spec.variants.len());
    for &f in &spec.stock_fractions {
        for &variant in &spec.variants {
            let strategy = spec.strategy(f, variant)?;
            let results = run_monte_carlo(&strategy, history, sampler)?;
            let summary = summarize(
                &results,
                f64::from(sampler.horizon_years),
                sampler.bootstrap_resamples,
                sampler.seed,
            )?;
            rows.push(FrontierRow {
                stock_fraction: f,
                variant,
                summary,
            });
        }
    }
    Ok(rows)
}
