//! Day-by-day portfolio evolution: fund price changes, dividends, margin
//! interest, monthly reinvestment, threshold rebalancing and year-end tax.

mod asset;
mod portfolio;
mod sim;

use serde::{Deserialize, Serialize};

pub use asset::{
    accrue_dividend_cash, accrue_margin_interest, evolve_etf_daily, evolve_letf_daily, AssetSpec,
};
pub use portfolio::{Holding, PaperLot, PortfolioState, RebalanceOutcome};
pub use sim::{
    run_backtest, run_with, step_day, Backtest, DayFlags, Leverage, RunOutcome, Solvency, Strategy,
    TrajectoryPoint,
};

#[cfg(test)]
pub(crate) use portfolio::tests as tests_support;

use crate::error::{Error, Result};
use crate::tax::TaxScheme;

/// Costs, triggers and tax settings shared by every simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Fraction of each transaction's gross value paid as fee.
    pub transaction_fee: f64,
    /// Yearly percent charged on margin debt.
    pub margin_rate: f64,
    /// Allowed drift of any asset fraction, in absolute percentage points.
    pub rebalance_fraction_trigger: f64,
    /// Allowed relative drift of margin leverage from its target.
    pub rebalance_leverage_trigger: f64,
    /// Capital gains tax fraction.
    pub cgt: f64,
    pub tax_enabled: bool,
    pub tax_scheme: TaxScheme,
    /// Cash added at every monthly reinvestment.
    pub periodic_investment: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            transaction_fee: 0.001,
            margin_rate: 1.59,
            rebalance_fraction_trigger: 20.0,
            rebalance_leverage_trigger: 0.10,
            cgt: 0.25,
            tax_enabled: false,
            tax_scheme: TaxScheme::Optimized,
            periodic_investment: 0.0,
        }
    }
}

impl EngineConfig {
    /// No fees, no margin interest, no tax; triggers at their defaults.
    pub fn frictionless() -> Self {
        EngineConfig {
            transaction_fee: 0.0,
            margin_rate: 0.0,
            ..EngineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.transaction_fee) {
            return Err(Error::config("engine.transaction_fee", "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.cgt) {
            return Err(Error::config("engine.cgt", "must be in [0, 1)"));
        }
        if !(self.margin_rate.is_finite() && self.margin_rate >= 0.0) {
            return Err(Error::config("engine.margin_rate", "must be a non-negative yearly percent"));
        }
        if !(self.rebalance_fraction_trigger > 0.0) {
            return Err(Error::config("engine.rebalance_fraction_trigger", "must be positive"));
        }
        if !(self.rebalance_leverage_trigger > 0.0) {
            return Err(Error::config("engine.rebalance_leverage_trigger", "must be positive"));
        }
        if !(self.periodic_investment.is_finite() && self.periodic_investment >= 0.0) {
            return Err(Error::config("engine.periodic_investment", "must be non-negative"));
        }
        Ok(())
    }
}
