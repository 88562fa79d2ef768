//! Capital gains tracking and year-end settlement.
//!
//! Gains accumulate from dividends and from sales during the year. At year
//! end a positive balance is taxed at `cgt`, paid by selling lots. Selling a
//! lot realizes part of its own profit (or loss), which changes the tax due,
//! so the amount sold from each lot solves `t = (G + realized(t)) * cgt`.

use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, PortfolioState};
use crate::error::Result;

/// Order in which lots are sold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxScheme {
    /// Least profitable lot first.
    #[default]
    Optimized,
    /// Purchase order.
    Fifo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxLedger {
    /// Gains of the current tax year; a negative balance is a loss carried
    /// forward.
    pub gains: f64,
    pub cumulative_tax_paid: f64,
    pub scheme: TaxScheme,
}

impl TaxLedger {
    pub fn new(scheme: TaxScheme) -> Self {
        TaxLedger {
            gains: 0.0,
            cumulative_tax_paid: 0.0,
            scheme,
        }
    }

    pub fn record_dividend_gain(&mut self, dividend: f64) {
        self.gains += dividend;
    }
}

/// Amount to sell from a lot with profit `profit` so the sale covers the tax
/// on gains `gains` plus whatever the sale itself realizes.
///
/// While the sale stays within the lot's profit (or loss) the realized part
/// grows one-for-one with the amount sold, giving `G * cgt / (1 - sign(P) *
/// cgt)`. Past the break-even point `G*` the whole profit is realized and the
/// amount is `(G + P) * cgt`.
pub fn tax_sell_amount(gains: f64, profit: f64, cgt: f64) -> f64 {
    if !(gains > 0.0) || cgt == 0.0 {
        return 0.0;
    }
    let s = if profit > 0.0 {
        1.0
    } else if profit < 0.0 {
        -1.0
    } else {
        0.0
    };
    let break_even = (1.0 - s * cgt) / cgt * profit.abs();
    if gains <= break_even {
        gains * cgt / (1.0 - s * cgt)
    } else {
        (gains + profit) * cgt
    }
}

/// What a year-end settlement did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Settlement {
    pub tax_paid: f64,
    /// Tax still owed after every lot was sold.
    pub unpaid: f64,
}

impl Settlement {
    pub fn insolvent(&self) -> bool {
        self.unpaid > 0.0
    }
}

/// Pays the year's capital gains tax by selling lots.
///
/// Each asset is charged its ideal fraction of the gains and sells its lots
/// in scheme order. A share left uncovered when an asset runs out of lots
/// moves on to the next asset. Sales pay the transaction fee, which comes out
/// of cash. Tax that cannot be covered at all is booked as margin debt, so
/// the account's equity reflects the liability.
pub fn settle_year_end(state: &mut PortfolioState, config: &EngineConfig) -> Result<Settlement> {
    let gains = state.ledger.gains;
    if gains <= 0.0 {
        return Ok(Settlement::default());
    }
    state.ledger.gains = 0.0;
    let cgt = config.cgt;
    if cgt == 0.0 {
        return Ok(Settlement::default());
    }

    let scheme = state.ledger.scheme;
    let mut tax_paid = 0.0;
    let mut carry = 0.0;
    let shares: Vec<f64> = state.ideal_fractions.iter().map(|f| f * gains).collect();
    for pass in 0..2 {
        for (i, share) in shares.iter().enumerate() {
            let mut owed = carry + if pass == 0 { *share } else { 0.0 };
            if owed <= 0.0 {
                continue;
            }
            let holding = &mut state.holdings[i];
            for idx in holding.sale_order(scheme) {
                let value = holding.lot_value(idx);
                let amount = tax_sell_amount(owed, holding.lot_profit(idx), cgt);
                if amount <= value {
                    holding.sell_partial(idx, amount);
                    tax_paid += amount;
                    owed = 0.0;
                    break;
                }
                holding.close_lot(idx);
                tax_paid += value;
                owed = (amount - value) / cgt;
            }
            holding.purge();
            carry = owed;
        }
        if carry <= 0.0 {
            break;
        }
    }

    state.cash -= config.transaction_fee * tax_paid;
    state.ledger.cumulative_tax_paid += tax_paid;
    let unpaid = carry.max(0.0) * cgt;
    if unpaid > 0.0 {
        state.margin_debt += unpaid;
    }
    cover_cash_shortfall(state, config)?;
    Ok(Settlement { tax_paid, unpaid })
}

/// Sells across assets, in proportion to their value, until cash is no
/// longer negative. Gains realized here belong to the new tax year.
fn cover_cash_shortfall(state: &mut PortfolioState, config: &EngineConfig) -> Result<()> {
    if state.cash >= 0.0 {
        return Ok(());
    }
    let fee = config.transaction_fee;
    let needed = -state.cash / (1.0 - fee);
    let values: Vec<f64> = state.holdings.iter().map(|h| h.value()).collect();
    let held: f64 = values.iter().sum();
    if held <= 0.0 {
        // Nothing left to sell; the shortfall becomes debt.
        state.margin_debt -= state.cash;
        state.cash = 0.0;
        return Ok(());
    }
    let sell = needed.min(held);
    let scheme = state.ledger.scheme;
    let mut realized = 0.0;
    for (i, v) in values.iter().enumerate() {
        realized += state.sell_amount(i, sell * v / held, scheme, fee)?;
    }
    if config.tax_enabled {
        state.ledger.gains += realized;
    }
    if state.cash < 0.0 {
        state.margin_debt -= state.cash;
        state.cash = 0.0;
    }
    Ok(())
}
