use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DividendModel, TRADING_DAYS_PER_YEAR};

/// An investable instrument tracking one index of the market history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSpec {
    pub asset_id: String,
    pub underlying_index: String,
    /// Daily leverage factor; 1 for a plain ETF.
    pub leverage_factor: f64,
    /// Yearly percent.
    pub expense_ratio: f64,
    pub dividend_model: DividendModel,
    /// Follow the index's total-return changes instead of its price changes.
    pub tracks_total_return: bool,
}

impl AssetSpec {
    /// A 1X fund following the price index and paying dividends.
    pub fn etf(
        asset_id: impl Into<String>,
        index: impl Into<String>,
        expense_ratio: f64,
        dividend_model: DividendModel,
    ) -> Self {
        AssetSpec {
            asset_id: asset_id.into(),
            underlying_index: index.into(),
            leverage_factor: 1.0,
            expense_ratio,
            dividend_model,
            tracks_total_return: false,
        }
    }

    /// A daily-leveraged fund on the index's total return. Pays no dividends.
    pub fn letf(
        asset_id: impl Into<String>,
        index: impl Into<String>,
        leverage_factor: f64,
        expense_ratio: f64,
    ) -> Self {
        AssetSpec {
            asset_id: asset_id.into(),
            underlying_index: index.into(),
            leverage_factor,
            expense_ratio,
            dividend_model: DividendModel::ZERO,
            tracks_total_return: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.leverage_factor >= 1.0) || !self.leverage_factor.is_finite() {
            return Err(Error::Invalid(format!(
                "asset `{}`: leverage factor must be >= 1",
                self.asset_id
            )));
        }
        if !self.expense_ratio.is_finite() {
            return Err(Error::Invalid(format!(
                "asset `{}`: expense ratio must be finite",
                self.asset_id
            )));
        }
        if self.leverage_factor > 1.0 && (!self.tracks_total_return || !self.dividend_model.is_zero()) {
            return Err(Error::Invalid(format!(
                "asset `{}`: leveraged funds track total return and pay no dividends",
                self.asset_id
            )));
        }
        Ok(())
    }

    /// The fund's daily percent change given the index changes and LIBOR.
    pub fn daily_change(&self, dp_price: f64, dp_total_return: f64, libor: f64) -> f64 {
        let dp_index = if self.tracks_total_return {
            dp_total_return
        } else {
            dp_price
        };
        if self.leverage_factor == 1.0 {
            evolve_etf_daily(dp_index, self.expense_ratio)
        } else {
            evolve_letf_daily(dp_index, self.leverage_factor, self.expense_ratio, libor)
        }
    }
}

/// Daily percent change of an ETF: the index change less a 1/252 share of
/// the yearly expense ratio.
pub fn evolve_etf_daily(dp_index: f64, expense_ratio: f64) -> f64 {
    dp_index - expense_ratio / TRADING_DAYS_PER_YEAR
}

/// Daily percent change of a leveraged ETF. The fund's borrowing cost is
/// LIBOR on every unit of leverage above one.
pub fn evolve_letf_daily(dp_index_tr: f64, leverage: f64, expense_ratio: f64, libor: f64) -> f64 {
    dp_index_tr * leverage
        - expense_ratio / TRADING_DAYS_PER_YEAR
        - libor * (leverage - 1.0) / TRADING_DAYS_PER_YEAR
}

/// Cash paid in one day by a holding of value `value` at yearly dividend
/// rate `rate` (percent).
pub fn accrue_dividend_cash(value: f64, rate: f64) -> f64 {
    value * rate / (100.0 * TRADING_DAYS_PER_YEAR)
}

/// One day of interest on margin debt at a yearly percent rate.
pub fn accrue_margin_interest(debt: f64, rate: f64) -> f64 {
    debt * rate / (100.0 * TRADING_DAYS_PER_YEAR)
}
