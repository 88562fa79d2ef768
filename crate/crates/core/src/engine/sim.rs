use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{accrue_dividend_cash, accrue_margin_interest, AssetSpec, EngineConfig, PortfolioState};
use crate::error::{Error, Result};
use crate::market::{DayRecord, MarketHistory};
use crate::tax::settle_year_end;

/// What to hold and how: assets, target mix, leverage and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub assets: Vec<AssetSpec>,
    pub ideal_fractions: Vec<f64>,
    /// Margin leverage target; 1 disables margin.
    pub target_leverage: f64,
    pub initial_investment: f64,
    pub engine: EngineConfig,
}

/// How a portfolio is leveraged. Margin and leveraged funds are never mixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leverage {
    None,
    /// Every asset is replaced by a daily-leveraged fund of this factor.
    Letf(f64),
    /// Margin account with this target leverage.
    Margin(f64),
}

impl Leverage {
    pub fn label(&self) -> String {
        match self {
            Leverage::None => "1x".to_string(),
            Leverage::Letf(k) => format!("letf{k}x"),
            Leverage::Margin(l) => format!("margin{l}x"),
        }
    }
}

impl Strategy {
    /// Builds a strategy from 1X assets. In LETF mode each asset becomes a
    /// leveraged fund on the same index with `letf_expense_ratio`.
    pub fn build(
        assets: &[AssetSpec],
        ideal_fractions: Vec<f64>,
        leverage: Leverage,
        letf_expense_ratio: f64,
        initial_investment: f64,
        engine: EngineConfig,
    ) -> Result<Self> {
        let (assets, target_leverage) = match leverage {
            Leverage::None => (assets.to_vec(), 1.0),
            Leverage::Margin(l) => {
                if !(l >= 1.0 && l.is_finite()) {
                    return Err(Error::config("leverage.margin", "target leverage must be >= 1"));
                }
                (assets.to_vec(), l)
            }
            Leverage::Letf(k) => {
                if !(k >= 1.0 && k.is_finite()) {
                    return Err(Error::config("leverage.letf", "leverage factor must be >= 1"));
                }
                let funds = assets
                    .iter()
                    .map(|a| {
                        if k == 1.0 {
                            a.clone()
                        } else {
                            AssetSpec::letf(
                                format!("{}{}x", a.asset_id, k),
                                a.underlying_index.clone(),
                                k,
                                letf_expense_ratio,
                            )
                        }
                    })
                    .collect();
                (funds, 1.0)
            }
        };
        for a in &assets {
            a.validate()?;
        }
        Ok(Strategy {
            assets,
            ideal_fractions,
            target_leverage,
            initial_investment,
            engine,
        })
    }

    /// Opens the account at the close of `date`: borrows up to the target
    /// leverage and buys every asset at its ideal fraction.
    pub fn open(&self, date: NaiveDate) -> Result<PortfolioState> {
        self.engine.validate()?;
        let mut state = PortfolioState::new(
            self.assets.clone(),
            self.ideal_fractions.clone(),
            self.target_leverage,
            self.initial_investment,
            self.engine.tax_scheme,
        )?;
        if state.margin_allowed() {
            let debt = (self.target_leverage - 1.0) * self.initial_investment;
            state.margin_debt += debt;
            state.cash += debt;
        }
        invest_cash(&mut state, date, self.engine.transaction_fee)?;
        Ok(state)
    }
}

/// Calendar events for one trading day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DayFlags {
    pub first_of_month: bool,
    pub last_of_year: bool,
}

impl DayFlags {
    /// Flags for record `k`. The final record of a history counts as a year
    /// end so the last tax year is settled.
    pub fn for_day(history: &MarketHistory, k: usize) -> Self {
        let dates = history.dates();
        let prev = if k == 0 { history.start_date() } else { dates[k - 1] };
        let date = dates[k];
        DayFlags {
            first_of_month: (date.year(), date.month()) != (prev.year(), prev.month()),
            last_of_year: k + 1 == dates.len() || dates[k + 1].year() != date.year(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solvency {
    Solvent,
    /// Equity is not positive; the realization stops here.
    Bankrupt,
}

fn invest_cash(state: &mut PortfolioState, date: NaiveDate, fee: f64) -> Result<()> {
    let cash = state.cash;
    if cash <= 0.0 {
        return Ok(());
    }
    for i in 0..state.holdings.len() {
        let amount = (cash * state.ideal_fractions[i]).min(state.cash);
        state.buy_paper(i, amount, date, fee)?;
    }
    Ok(())
}

/// Advances the account by one trading day.
///
/// In order: fund price changes, dividends to cash (and to taxable gains),
/// margin interest, monthly reinvestment of cash, a rebalance if a trigger
/// fired, and the tax settlement on the year's last day. `columns[i]` is the
/// market index column of asset `i`.
pub fn step_day(
    state: &mut PortfolioState,
    day: &DayRecord<'_>,
    columns: &[usize],
    flags: DayFlags,
    config: &EngineConfig,
) -> Result<Solvency> {
    for (holding, &col) in state.holdings.iter_mut().zip(columns) {
        let dp = holding
            .spec
            .daily_change(day.dp_price[col], day.dp_total_return[col], day.libor);
        holding.apply_change(dp);
    }

    for i in 0..state.holdings.len() {
        let model = state.holdings[i].spec.dividend_model;
        if model.is_zero() {
            continue;
        }
        let dividend = accrue_dividend_cash(state.holdings[i].value(), model.rate(day.libor));
        state.cash += dividend;
        if config.tax_enabled {
            state.ledger.record_dividend_gain(dividend);
        }
    }

    state.margin_debt += accrue_margin_interest(state.margin_debt, config.margin_rate);
    if state.equity() <= 0.0 {
        return Ok(Solvency::Bankrupt);
    }

    if flags.first_of_month {
        if config.periodic_investment > 0.0 {
            state.cash += config.periodic_investment;
            state.contributions += config.periodic_investment;
        }
        invest_cash(state, day.date, config.transaction_fee)?;
    }

    if state.check_rebalance_trigger(config) {
        state.rebalance(config, day.date)?;
    }

    if flags.last_of_year && config.tax_enabled {
        settle_year_end(state, config)?;
    }

    Ok(if state.equity() > 0.0 {
        Solvency::Solvent
    } else {
        Solvency::Bankrupt
    })
}

/// End state of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: PortfolioState,
    pub insolvent: bool,
}

/// Runs `strategy` over `history`, calling `observe` with the opening state
/// and after every simulated day. Stops early on bankruptcy.
pub fn run_with<F>(strategy: &Strategy, history: &MarketHistory, mut observe: F) -> Result<RunOutcome>
where
    F: FnMut(NaiveDate, &PortfolioState),
{
    if history.is_empty() {
        return Err(Error::Invalid("market history is empty".into()));
    }
    let columns = strategy
        .assets
        .iter()
        .map(|a| history.index_of(&a.underlying_index))
        .collect::<Result<Vec<_>>>()?;
    let mut state = strategy.open(history.start_date())?;
    observe(history.start_date(), &state);
    let mut insolvent = false;
    for k in 0..history.len() {
        let day = history.day(k);
        let status = step_day(&mut state, &day, &columns, DayFlags::for_day(history, k), &strategy.engine)?;
        observe(day.date, &state);
        if status == Solvency::Bankrupt {
            insolvent = true;
            break;
        }
    }
    Ok(RunOutcome { state, insolvent })
}

/// One row of a backtest trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub date: NaiveDate,
    /// Equity over capital invested.
    pub portfolio_yield: f64,
    pub total: f64,
    pub margin_debt: f64,
    pub fractions: Vec<f64>,
    pub leverage: f64,
    pub gains: f64,
    pub cumulative_tax: f64,
}

impl TrajectoryPoint {
    fn capture(date: NaiveDate, state: &PortfolioState) -> Self {
        TrajectoryPoint {
            date,
            portfolio_yield: state.portfolio_yield(),
            total: state.total(),
            margin_debt: state.margin_debt,
            fractions: state.fractions(),
            leverage: state.leverage(),
            gains: state.ledger.gains,
            cumulative_tax: state.ledger.cumulative_tax_paid,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Backtest {
    /// Opening state followed by one point per simulated day.
    pub points: Vec<TrajectoryPoint>,
    pub insolvent: bool,
    pub final_state: PortfolioState,
}

impl Backtest {
    pub fn yields(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.portfolio_yield).collect()
    }

    pub fn final_yield(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.portfolio_yield)
    }
}

/// Runs `strategy` over `history` and records the daily trajectory.
pub fn run_backtest(strategy: &Strategy, history: &MarketHistory) -> Result<Backtest> {
    let mut points = Vec::with_capacity(history.len() + 1);
    let outcome = run_with(strategy, history, |date, state| {
        points.push(TrajectoryPoint::capture(date, state))
    })?;
    Ok(Backtest {
        points,
        insolvent: outcome.insolvent,
        final_state: outcome.state,
    })
}
