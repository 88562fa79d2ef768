use chrono::NaiveDate;

use super::{AssetSpec, EngineConfig};
use crate::error::{Error, Result};
use crate::tax::{TaxLedger, TaxScheme};

/// Relative slack for comparisons against fraction/leverage triggers, so a
/// drift of exactly the trigger value counts as reached.
const TRIGGER_EPS: f64 = 1e-12;

/// One purchase of an asset. Its value is `units` times the asset's price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperLot {
    pub units: f64,
    pub cost_basis: f64,
    pub purchase_date: NaiveDate,
}

impl PaperLot {
    pub fn value(&self, price: f64) -> f64 {
        self.units * price
    }

    pub fn profit(&self, price: f64) -> f64 {
        self.value(price) - self.cost_basis
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// All lots of one asset. Lots share the asset's price, so a day's price
/// change is applied once per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct Holding {
    pub spec: AssetSpec,
    pub price: f64,
    pub lots: Vec<PaperLot>,
}

impl Holding {
    pub fn new(spec: AssetSpec) -> Self {
        Holding {
            spec,
            price: 1.0,
            lots: Vec::new(),
        }
    }

    pub fn value(&self) -> f64 {
        self.lots.iter().map(|l| l.value(self.price)).sum()
    }

    pub fn lot_value(&self, idx: usize) -> f64 {
        self.lots[idx].value(self.price)
    }

    pub fn lot_profit(&self, idx: usize) -> f64 {
        self.lots[idx].profit(self.price)
    }

    /// Applies a daily percent change. A loss of 100% or more wipes every lot
    /// (cost bases are kept) and restarts the price at 1.
    pub fn apply_change(&mut self, dp: f64) {
        let factor = 1.0 + dp / 100.0;
        if factor > 0.0 {
            self.price *= factor;
        } else {
            for lot in &mut self.lots {
                lot.units = 0.0;
            }
            self.price = 1.0;
        }
    }

    /// Lot indices in the order they are sold: purchase order for FIFO,
    /// ascending profit for the optimized scheme.
    pub fn sale_order(&self, scheme: TaxScheme) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.lots.len()).collect();
        if scheme == TaxScheme::Optimized {
            order.sort_by(|&a, &b| self.lot_profit(a).total_cmp(&self.lot_profit(b)));
        }
        order
    }

    /// Sells `amount` out of lot `idx`, which must hold more than `amount`.
    /// Returns the realized gain `sign(P) * min(amount, |P|)`; the cost basis
    /// drops so the lot's remaining profit is `P` minus that gain.
    pub(crate) fn sell_partial(&mut self, idx: usize, amount: f64) -> f64 {
        let profit = self.lot_profit(idx);
        let gain = sign(profit) * amount.min(profit.abs());
        let price = self.price;
        let lot = &mut self.lots[idx];
        lot.units -= amount / price;
        lot.cost_basis -= amount - gain;
        gain
    }

    /// Sells lot `idx` completely, returning its value and realized profit.
    /// The lot stays in place, emptied, until [`Holding::purge`].
    pub(crate) fn close_lot(&mut self, idx: usize) -> (f64, f64) {
        let value = self.lot_value(idx);
        let profit = self.lot_profit(idx);
        self.lots[idx].units = 0.0;
        self.lots[idx].cost_basis = 0.0;
        (value, profit)
    }

    /// Drops lots closed by [`Holding::close_lot`].
    pub(crate) fn purge(&mut self) {
        self.lots.retain(|l| l.units > 0.0 || l.cost_basis > 0.0);
    }
}

/// Result of one rebalance.
#[derive(Debug, Clone, PartialEq)]
pub struct RebalanceOutcome {
    /// Change of margin debt.
    pub delta_margin: f64,
    /// Target value change per asset; negative entries were sold.
    pub transfers: Vec<f64>,
    /// Gain realized by the sales.
    pub realized_gain: f64,
}

/// Holdings, cash, debt and tax state of one simulated account.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    pub holdings: Vec<Holding>,
    pub cash: f64,
    pub margin_debt: f64,
    pub ideal_fractions: Vec<f64>,
    pub target_leverage: f64,
    pub ledger: TaxLedger,
    pub initial_investment: f64,
    /// Periodic investments added after the start.
    pub contributions: f64,
}

impl PortfolioState {
    /// An account holding `initial_investment` in cash and no lots.
    pub fn new(
        assets: Vec<AssetSpec>,
        ideal_fractions: Vec<f64>,
        target_leverage: f64,
        initial_investment: f64,
        scheme: TaxScheme,
    ) -> Result<Self> {
        if assets.is_empty() || assets.len() != ideal_fractions.len() {
            return Err(Error::Invalid("one ideal fraction per asset is required".into()));
        }
        for a in &assets {
            a.validate()?;
        }
        if ideal_fractions.iter().any(|f| !(0.0..=1.0).contains(f))
            || (ideal_fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Invalid("ideal fractions must lie in [0, 1] and sum to 1".into()));
        }
        if !(target_leverage >= 1.0 && target_leverage.is_finite()) {
            return Err(Error::Invalid("target leverage must be >= 1".into()));
        }
        if !(initial_investment > 0.0 && initial_investment.is_finite()) {
            return Err(Error::Invalid("initial investment must be positive".into()));
        }
        Ok(PortfolioState {
            holdings: assets.into_iter().map(Holding::new).collect(),
            cash: initial_investment,
            margin_debt: 0.0,
            ideal_fractions,
            target_leverage,
            ledger: TaxLedger::new(scheme),
            initial_investment,
            contributions: 0.0,
        })
    }

    /// Total value `T`: all lots plus cash.
    pub fn total(&self) -> f64 {
        self.holdings.iter().map(Holding::value).sum::<f64>() + self.cash
    }

    pub fn equity(&self) -> f64 {
        self.total() - self.margin_debt
    }

    /// Margin leverage `T / (T - M)`; infinite when equity is not positive.
    pub fn leverage(&self) -> f64 {
        let equity = self.equity();
        if equity > 0.0 {
            self.total() / equity
        } else {
            f64::INFINITY
        }
    }

    /// Current fraction of `T` held in each asset.
    pub fn fractions(&self) -> Vec<f64> {
        let total = self.total();
        self.holdings
            .iter()
            .map(|h| if total > 0.0 { h.value() / total } else { 0.0 })
            .collect()
    }

    pub fn margin_allowed(&self) -> bool {
        self.target_leverage > 1.0
    }

    /// Capital put in so far: the initial investment plus contributions.
    pub fn invested(&self) -> f64 {
        self.initial_investment + self.contributions
    }

    /// Equity as a multiple of the capital invested.
    pub fn portfolio_yield(&self) -> f64 {
        self.equity() / self.invested()
    }

    /// Spends `cash_amount` on asset `asset`. The fee is taken from the gross
    /// amount, so the new lot is worth `cash_amount * (1 - fee)`. Spending
    /// nothing creates no lot.
    pub fn buy_paper(
        &mut self,
        asset: usize,
        cash_amount: f64,
        date: NaiveDate,
        fee: f64,
    ) -> Result<Option<PaperLot>> {
        if cash_amount > self.cash {
            if cash_amount - self.cash > 1e-9 * cash_amount.max(1.0) {
                return Err(Error::InsufficientCash {
                    requested: cash_amount,
                    available: self.cash,
                });
            }
        }
        let cash_amount = cash_amount.min(self.cash);
        if !(cash_amount > 0.0) {
            return Ok(None);
        }
        self.cash -= cash_amount;
        let value = cash_amount * (1.0 - fee);
        let holding = &mut self.holdings[asset];
        let lot = PaperLot {
            units: value / holding.price,
            cost_basis: value,
            purchase_date: date,
        };
        holding.lots.push(lot);
        Ok(Some(lot))
    }

    /// Sells `amount` of value from asset `asset`, consuming lots in the
    /// scheme's order, and returns the realized gain. Proceeds less the fee
    /// are added to cash. The tax ledger is not touched.
    pub fn sell_amount(&mut self, asset: usize, amount: f64, scheme: TaxScheme, fee: f64) -> Result<f64> {
        if !(amount > 0.0) {
            return Ok(0.0);
        }
        let holding = &mut self.holdings[asset];
        let held = holding.value();
        let amount = if amount > held {
            if amount - held > 1e-9 * held.max(1.0) {
                return Err(Error::Oversell {
                    asset: holding.spec.asset_id.clone(),
                    requested: amount,
                    held,
                });
            }
            held
        } else {
            amount
        };

        let mut remaining = amount;
        let mut gain = 0.0;
        for idx in holding.sale_order(scheme) {
            if remaining <= 0.0 {
                break;
            }
            let value = holding.lot_value(idx);
            if remaining >= value {
                let (v, p) = holding.close_lot(idx);
                gain += p;
                remaining -= v;
            } else {
                gain += holding.sell_partial(idx, remaining);
                remaining = 0.0;
            }
        }
        holding.purge();
        self.cash += (1.0 - fee) * amount;
        Ok(gain)
    }

    /// True when an asset fraction has drifted by the fraction trigger
    /// (percentage points) or, for margin accounts, leverage has drifted by
    /// the relative leverage trigger.
    pub fn check_rebalance_trigger(&self, config: &EngineConfig) -> bool {
        let fraction_limit = config.rebalance_fraction_trigger / 100.0 - TRIGGER_EPS;
        let fractions_off = self
            .fractions()
            .iter()
            .zip(&self.ideal_fractions)
            .any(|(f, ideal)| (f - ideal).abs() >= fraction_limit);
        if fractions_off {
            return true;
        }
        self.margin_allowed()
            && (self.leverage() / self.target_leverage - 1.0).abs()
                >= config.rebalance_leverage_trigger - TRIGGER_EPS
    }

    /// Moves every asset back to its ideal fraction and, for margin accounts,
    /// resets debt so leverage equals the target. Sales run first and fund
    /// the purchases. Realized gains go to the tax ledger when tax is on.
    pub fn rebalance(&mut self, config: &EngineConfig, date: NaiveDate) -> Result<RebalanceOutcome> {
        let equity = self.equity();
        if !(equity > 0.0) {
            return Err(Error::Bankrupt { equity });
        }
        let total = self.total();
        let delta_margin = if self.margin_allowed() {
            self.target_leverage * (total - self.margin_debt) - total
        } else {
            0.0
        };
        let transfers: Vec<f64> = self
            .holdings
            .iter()
            .zip(&self.ideal_fractions)
            .map(|(h, ideal)| total * (ideal - h.value() / total) + ideal * delta_margin)
            .collect();

        let fee = config.transaction_fee;
        let scheme = self.ledger.scheme;
        let mut realized_gain = 0.0;
        for (i, dt) in transfers.iter().enumerate() {
            if *dt < 0.0 {
                realized_gain += self.sell_amount(i, -dt, scheme, fee)?;
            }
        }
        if config.tax_enabled {
            self.ledger.gains += realized_gain;
        }

        if delta_margin > 0.0 {
            self.margin_debt += delta_margin;
            self.cash += delta_margin;
        } else if delta_margin < 0.0 {
            let repay = (-delta_margin).min(self.cash);
            self.margin_debt -= repay;
            self.cash -= repay;
        }

        let wanted: f64 = transfers.iter().filter(|t| **t > 0.0).sum();
        if wanted > 0.0 {
            let scale = (self.cash / wanted).min(1.0);
            for (i, dt) in transfers.iter().enumerate() {
                if *dt > 0.0 {
                    self.buy_paper(i, dt * scale, date, fee)?;
                }
            }
        }

        Ok(RebalanceOutcome {
            delta_margin,
            transfers,
            realized_gain,
        })
    }
}
