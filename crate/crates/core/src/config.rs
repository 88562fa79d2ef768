//! Scenario documents: a single JSON object naming data files, assets,
//! allocation, leverage, costs and Monte-Carlo settings.
//!
//! Rates (expense ratios, dividend yields, margin rate, LIBOR) are yearly
//! percents. Fees, fractions and the tax rate are decimal fractions.
//! Relative paths resolve against `data_dir`, which itself resolves against
//! the directory holding the scenario file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::engine::{AssetSpec, EngineConfig, Leverage, Strategy};
use crate::error::{Error, Result};
use crate::market::{
    align_histories, load_price_csv, load_rate_csv, slice_window, splice_total_return, synthesize_total_return,
    DividendModel, MarketHistory, PriceSeries, RateSeries,
};
use crate::montecarlo::{FrontierSpec, SamplerConfig, STOCK_FRACTION_GRID};

const FRACTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Backtest,
    Mc,
    Frontier,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Backtest => "backtest",
            Mode::Mc => "mc",
            Mode::Frontier => "frontier",
        }
    }
}

/// Where an index's total-return changes come from.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TotalReturnSource {
    /// Same as the price changes.
    #[default]
    Price,
    /// The `Adj Close` column of the price file.
    AdjClose,
    /// A separate total-return file, optionally extended backwards by a
    /// dividend model applied to the price series.
    Csv {
        path: PathBuf,
        #[serde(default)]
        backfill: Option<DividendModel>,
    },
    /// Price changes plus a modeled daily dividend.
    Model(DividendModel),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSource {
    pub price_csv: PathBuf,
    #[serde(default)]
    pub total_return: TotalReturnSource,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LiborSource {
    Constant(f64),
    Csv(PathBuf),
}

impl Default for LiborSource {
    fn default() -> Self {
        LiborSource::Constant(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    pub asset_id: String,
    pub index: String,
    #[serde(default = "one")]
    pub leverage_factor: f64,
    #[serde(default)]
    pub expense_ratio: f64,
    #[serde(default)]
    pub dividend_model: DividendModel,
    /// Defaults to true for leveraged funds.
    #[serde(default)]
    pub tracks_total_return: Option<bool>,
}

impl AssetConfig {
    pub fn spec(&self) -> AssetSpec {
        AssetSpec {
            asset_id: self.asset_id.clone(),
            underlying_index: self.index.clone(),
            leverage_factor: self.leverage_factor,
            expense_ratio: self.expense_ratio,
            dividend_model: self.dividend_model,
            tracks_total_return: self.tracks_total_return.unwrap_or(self.leverage_factor > 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    pub fractions: Vec<f64>,
    #[serde(default = "one")]
    pub initial_investment: f64,
}

/// `{}` for none, `{"letf": k}` or `{"margin": L}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeverageConfig {
    #[serde(default)]
    pub letf: Option<f64>,
    #[serde(default)]
    pub margin: Option<f64>,
}

impl LeverageConfig {
    pub fn resolve(&self, path: &str) -> Result<Leverage> {
        match (self.letf, self.margin) {
            (Some(_), Some(_)) => Err(Error::config(
                path,
                "set either `letf` or `margin`; the two kinds of leverage are not combined",
            )),
            (Some(k), None) if !(k >= 1.0 && k.is_finite()) => {
                Err(Error::config(format!("{path}.letf"), "leverage factor must be >= 1"))
            }
            (None, Some(l)) if !(l >= 1.0 && l.is_finite()) => {
                Err(Error::config(format!("{path}.margin"), "target leverage must be >= 1"))
            }
            (Some(k), None) if k == 1.0 => Ok(Leverage::None),
            (None, Some(l)) if l == 1.0 => Ok(Leverage::None),
            (Some(k), None) => Ok(Leverage::Letf(k)),
            (None, Some(l)) => Ok(Leverage::Margin(l)),
            (None, None) => Ok(Leverage::None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontierConfig {
    /// Defaults to 0, 0.05, ..., 1.
    pub stock_fractions: Option<Vec<f64>>,
    /// Defaults to 1X, 2X LETF, 3X LETF and 1.8X margin.
    pub variants: Option<Vec<LeverageConfig>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub data_dir: PathBuf,
    pub indices: BTreeMap<String, IndexSource>,
    #[serde(default)]
    pub libor: LiborSource,
    pub assets: Vec<AssetConfig>,
    pub portfolio: PortfolioConfig,
    #[serde(default)]
    pub leverage: LeverageConfig,
    /// Expense ratio of the funds substituted in LETF mode.
    #[serde(default = "one")]
    pub letf_expense_ratio: f64,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub window: Option<Window>,
    /// Overrides `sampler.horizon_years` when given.
    #[serde(default)]
    pub horizon_years: Option<u32>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub frontier: FrontierConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Share of insolvent realizations above which the run is flagged.
    #[serde(default = "half")]
    pub insolvency_warning: f64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read scenario: {e}")))?;
    let mut config = parse_config_str(&text)?;
    config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(config)
}

/// Parses and validates a scenario document. Relative paths resolve against
/// the current directory.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<document>".to_string() } else { path }, e.into_inner().to_string())
    })?;
    if let Some(years) = config.horizon_years {
        config.sampler.horizon_years = years;
    }
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.assets.is_empty() {
            return Err(Error::config("assets", "at least one asset is required"));
        }
        for (i, a) in self.assets.iter().enumerate() {
            if !self.indices.contains_key(&a.index) {
                return Err(Error::config(
                    format!("assets[{i}].index"),
                    format!("unknown index `{}`", a.index),
                ));
            }
            if self.assets[..i].iter().any(|b| b.asset_id == a.asset_id) {
                return Err(Error::config(
                    format!("assets[{i}].asset_id"),
                    format!("duplicate asset `{}`", a.asset_id),
                ));
            }
            a.spec()
                .validate()
                .map_err(|e| Error::config(format!("assets[{i}]"), e.to_string()))?;
        }

        let f = &self.portfolio.fractions;
        if f.len() != self.assets.len() {
            return Err(Error::config(
                "portfolio.fractions",
                format!("expected {} fractions, one per asset, got {}", self.assets.len(), f.len()),
            ));
        }
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::config("portfolio.fractions", "each fraction must be in [0, 1]"));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > FRACTION_TOLERANCE {
            return Err(Error::config("portfolio.fractions", format!("fractions sum to {sum}, not 1")));
        }
        if !(self.portfolio.initial_investment > 0.0 && self.portfolio.initial_investment.is_finite()) {
            return Err(Error::config("portfolio.initial_investment", "must be positive"));
        }

        let leverage = self.leverage.resolve("leverage")?;
        if leverage != Leverage::None && self.assets.iter().any(|a| a.leverage_factor > 1.0) {
            return Err(Error::config(
                "leverage",
                "portfolio leverage cannot be applied to assets that are already leveraged funds",
            ));
        }
        if !(self.letf_expense_ratio.is_finite() && self.letf_expense_ratio >= 0.0) {
            return Err(Error::config("letf_expense_ratio", "must be a non-negative yearly percent"));
        }
        if let Some(w) = self.window {
            if w.start > w.end {
                return Err(Error::config("window", "start is after end"));
            }
        }
        if !(0.0..=1.0).contains(&self.insolvency_warning) {
            return Err(Error::config("insolvency_warning", "must be in [0, 1]"));
        }
        if let Some(fr) = &self.frontier.stock_fractions {
            if fr.is_empty() || fr.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::config("frontier.stock_fractions", "need fractions in [0, 1]"));
            }
        }
        if let Some(vs) = &self.frontier.variants {
            for (i, v) in vs.iter().enumerate() {
                v.resolve(&format!("frontier.variants[{i}]"))?;
            }
        }
        self.engine.validate()?;
        self.sampler.validate()?;
        Ok(())
    }

    /// Fails unless the document's `mode`, if any, is `mode`.
    pub fn expect_mode(&self, mode: Mode) -> Result<()> {
        match self.mode {
            Some(m) if m != mode => Err(Error::config(
                "mode",
                format!("scenario is for `{}`, not `{}`", m.name(), mode.name()),
            )),
            _ => Ok(()),
        }
    }

    pub fn leverage(&self) -> Result<Leverage> {
        self.leverage.resolve("leverage")
    }

    pub fn strategy(&self) -> Result<Strategy> {
        let assets: Vec<AssetSpec> = self.assets.iter().map(AssetConfig::spec).collect();
        Strategy::build(
            &assets,
            self.portfolio.fractions.clone(),
            self.leverage()?,
            self.letf_expense_ratio,
            self.portfolio.initial_investment,
            self.engine.clone(),
        )
    }

    /// The first asset is the stock, the second the bond.
    pub fn frontier_spec(&self) -> Result<FrontierSpec> {
        if self.assets.len() != 2 || self.assets.iter().any(|a| a.leverage_factor != 1.0) {
            return Err(Error::config(
                "assets",
                "a frontier needs exactly two 1X assets: stock first, bond second",
            ));
        }
        let variants = match &self.frontier.variants {
            Some(vs) => vs
                .iter()
                .enumerate()
                .map(|(i, v)| v.resolve(&format!("frontier.variants[{i}]")))
                .collect::<Result<_>>()?,
            None => FrontierSpec::default_variants(),
        };
        Ok(FrontierSpec {
            stock: self.assets[0].spec(),
            bond: self.assets[1].spec(),
            letf_expense_ratio: self.letf_expense_ratio,
            initial_investment: self.portfolio.initial_investment,
            engine: self.engine.clone(),
            stock_fractions: self
                .frontier
                .stock_fractions
                .clone()
                .unwrap_or_else(|| STOCK_FRACTION_GRID.to_vec()),
            variants,
        })
    }

    pub fn data_path(&self, file: &Path) -> PathBuf {
        self.base_dir.join(&self.data_dir).join(file)
    }

    /// Loads every index the assets use, aligned on their common trading
    /// days and cut to the window.
    pub fn load_history(&self) -> Result<MarketHistory> {
        let libor = match &self.libor {
            LiborSource::Constant(r) => RateSeries::constant(*r),
            LiborSource::Csv(p) => load_rate_csv(&self.data_path(p))?,
        };
        let mut used: Vec<&str> = Vec::new();
        for a in &self.assets {
            if !used.contains(&a.index.as_str()) {
                used.push(&a.index);
            }
        }
        let mut prices = Vec::with_capacity(used.len());
        let mut total_returns = Vec::with_capacity(used.len());
        for id in used {
            let source = &self.indices[id];
            let price = load_price_csv(&self.data_path(&source.price_csv), id)?;
            let tr = self.total_return(id, source, &price, &libor)?;
            prices.push(price);
            total_returns.push(tr);
        }
        let history = align_histories(&prices, &total_returns, &libor)?;
        match self.window {
            Some(w) => slice_window(&history, w.start, w.end),
            None => Ok(history),
        }
    }

    fn total_return(&self, id: &str, source: &IndexSource, price: &PriceSeries, libor: &RateSeries) -> Result<PriceSeries> {
        match &source.total_return {
            TotalReturnSource::Price => Ok(price.clone()),
            TotalReturnSource::AdjClose => price.adjusted().ok_or_else(|| Error::MissingColumn {
                path: self.data_path(&source.price_csv),
                column: "Adj Close",
            }),
            TotalReturnSource::Model(model) => synthesize_total_return(price, *model, libor),
            TotalReturnSource::Csv { path, backfill } => {
                let actual = load_price_csv(&self.data_path(path), &format!("{id}-TR"))?;
                match backfill {
                    Some(model) => {
                        let synthetic = synthesize_total_return(price, *model, libor)?;
                        splice_total_return(&synthetic, &actual)
                    }
                    None => Ok(actual),
                }
            }
        }
    }
}
