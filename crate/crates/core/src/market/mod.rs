//! Market data: price and rate series, total-return synthesis and the
//! aligned daily-change history the simulations consume.

mod csv;

use std::collections::BTreeSet;

use chrono::NaiveDate;

pub use self::csv::{load_price_csv, load_rate_csv};
use crate::error::{Error, Result};

/// Trading days per year used for every yearly-rate to daily-rate conversion.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Daily closing prices of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub asset_id: String,
    pub dates: Vec<NaiveDate>,
    pub close: Vec<f64>,
    pub adj_close: Option<Vec<f64>>,
    /// Rows skipped while loading.
    pub dropped_rows: usize,
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, dates: Vec<NaiveDate>, close: Vec<f64>) -> Result<Self> {
        let s = PriceSeries {
            asset_id: asset_id.into(),
            dates,
            close,
            adj_close: None,
            dropped_rows: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.close.len() != self.dates.len()
            || self.adj_close.as_ref().is_some_and(|a| a.len() != self.dates.len())
        {
            return Err(Error::Invalid(format!(
                "series `{}` has mismatched column lengths",
                self.asset_id
            )));
        }
        if self.dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!(
                "series `{}` dates are not strictly increasing",
                self.asset_id
            )));
        }
        if self.close.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Invalid(format!(
                "series `{}` has non-positive prices",
                self.asset_id
            )));
        }
        Ok(())
    }

    /// The `Adj Close` column as its own series, if the file had one.
    pub fn adjusted(&self) -> Option<PriceSeries> {
        let adj = self.adj_close.as_ref()?;
        Some(PriceSeries {
            asset_id: format!("{}-TR", self.asset_id),
            dates: self.dates.clone(),
            close: adj.clone(),
            adj_close: None,
            dropped_rows: self.dropped_rows,
        })
    }

    pub fn daily_changes(&self) -> Result<Vec<f64>> {
        compute_daily_changes(&self.close)
            .map_err(|_| Error::SeriesTooShort(self.asset_id.clone()))
    }
}

/// A yearly-percent rate sampled on irregular dates (LIBOR).
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub dates: Vec<NaiveDate>,
    pub rate: Vec<f64>,
}

impl RateSeries {
    pub fn new(dates: Vec<NaiveDate>, rate: Vec<f64>) -> Result<Self> {
        if dates.is_empty() || dates.len() != rate.len() {
            return Err(Error::Invalid("rate series must be non-empty with matching lengths".into()));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) || rate.iter().any(|r| !r.is_finite()) {
            return Err(Error::Invalid("rate series must have increasing dates and finite rates".into()));
        }
        Ok(RateSeries { dates, rate })
    }

    /// A rate that never changes.
    pub fn constant(rate: f64) -> Self {
        RateSeries {
            dates: vec![NaiveDate::MIN],
            rate: vec![rate],
        }
    }

    /// The most recent rate on or before `date`; dates before the first
    /// record get the first rate.
    pub fn rate_at(&self, date: NaiveDate) -> f64 {
        match self.dates.partition_point(|d| *d <= date) {
            0 => self.rate[0],
            i => self.rate[i - 1],
        }
    }
}

/// Yearly dividend yield `base + libor_coefficient * LIBOR`, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DividendModel {
    pub base: f64,
    #[serde(default)]
    pub libor_coefficient: f64,
}

impl DividendModel {
    pub const ZERO: DividendModel = DividendModel {
        base: 0.0,
        libor_coefficient: 0.0,
    };

    pub fn constant(base: f64) -> Self {
        DividendModel {
            base,
            libor_coefficient: 0.0,
        }
    }

    /// Effective yearly percent given the day's LIBOR rate.
    pub fn rate(&self, libor: f64) -> f64 {
        self.base + self.libor_coefficient * libor
    }

    pub fn is_zero(&self) -> bool {
        self.base == 0.0 && self.libor_coefficient == 0.0
    }
}

/// Daily percent changes `100 * (p[k+1] / p[k] - 1)`. A single price gives
/// an empty change series; an empty input is an error.
pub fn compute_daily_changes(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.is_empty() {
        return Err(Error::SeriesTooShort("prices".into()));
    }
    Ok(prices
        .windows(2)
        .map(|w| 100.0 * (w[1] / w[0] - 1.0))
        .collect())
}

/// Builds a total-return series from a price series by adding a daily
/// dividend increment `d(t) / (100 * 252)` to each day's relative change,
/// where `d(t)` is evaluated with the LIBOR rate at the start of the day.
pub fn synthesize_total_return(
    series: &PriceSeries,
    model: DividendModel,
    libor: &RateSeries,
) -> Result<PriceSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries(series.asset_id.clone()));
    }
    let mut tr = Vec::with_capacity(series.len());
    tr.push(series.close[0]);
    if model.is_zero() {
        tr.extend_from_slice(&series.close[1..]);
    } else {
        for k in 0..series.len() - 1 {
            let dp = 100.0 * (series.close[k + 1] / series.close[k] - 1.0);
            let d = model.rate(libor.rate_at(series.dates[k]));
            let next = tr[k] * (1.0 + dp / 100.0 + d / (100.0 * TRADING_DAYS_PER_YEAR));
            tr.push(next);
        }
    }
    Ok(PriceSeries {
        asset_id: format!("{}-TR", series.asset_id),
        dates: series.dates.clone(),
        close: tr,
        adj_close: None,
        dropped_rows: 0,
    })
}

/// Joins a synthetic total-return series (used before `actual` begins) with
/// an actual one. The actual series is rescaled so the joined level is
/// continuous at its first date.
pub fn splice_total_return(synthetic: &PriceSeries, actual: &PriceSeries) -> Result<PriceSeries> {
    if synthetic.is_empty() {
        return Err(Error::EmptySeries(synthetic.asset_id.clone()));
    }
    if actual.is_empty() {
        return Err(Error::EmptySeries(actual.asset_id.clone()));
    }
    let join = actual.dates[0];
    let cut = synthetic.dates.partition_point(|d| *d <= join);
    if cut == 0 {
        return Ok(actual.clone());
    }
    let mut dates = synthetic.dates[..cut].to_vec();
    let mut close = synthetic.close[..cut].to_vec();
    let scale = close[cut - 1] / actual.close[0];
    if dates[cut - 1] != join {
        // Synthetic series ends before the join date: treat the join as flat.
        dates.push(join);
        close.push(close[cut - 1]);
    }
    for (d, c) in actual.dates.iter().zip(&actual.close).skip(1) {
        dates.push(*d);
        close.push(c * scale);
    }
    PriceSeries::new(actual.asset_id.clone(), dates, close)
}

/// One trading day of the aligned history.
#[derive(Debug, Clone, Copy)]
pub struct DayRecord<'a> {
    pub date: NaiveDate,
    /// Price change of each index since the previous trading day, in percent.
    pub dp_price: &'a [f64],
    /// Total-return change of each index, in percent.
    pub dp_total_return: &'a [f64],
    /// LIBOR rate for the day, yearly percent.
    pub libor: f64,
}

/// Daily changes of every index on a shared trading calendar.
///
/// Record `k` holds the change from the previous trading day to `dates[k]`;
/// `start_date` is the trading day preceding the first record.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketHistory {
    start_date: NaiveDate,
    indices: Vec<String>,
    dates: Vec<NaiveDate>,
    dp_price: Vec<f64>,
    dp_total_return: Vec<f64>,
    libor: Vec<f64>,
}

impl MarketHistory {
    /// An empty history over the given indices; rows are added with
    /// [`MarketHistory::push`].
    pub fn empty(start_date: NaiveDate, indices: Vec<String>) -> Self {
        MarketHistory {
            start_date,
            indices,
            dates: Vec::new(),
            dp_price: Vec::new(),
            dp_total_return: Vec::new(),
            libor: Vec::new(),
        }
    }

    pub fn with_capacity(start_date: NaiveDate, indices: Vec<String>, days: usize) -> Self {
        let n = indices.len();
        MarketHistory {
            start_date,
            indices,
            dates: Vec::with_capacity(days),
            dp_price: Vec::with_capacity(days * n),
            dp_total_return: Vec::with_capacity(days * n),
            libor: Vec::with_capacity(days),
        }
    }

    pub fn push(&mut self, date: NaiveDate, dp_price: &[f64], dp_total_return: &[f64], libor: f64) {
        debug_assert_eq!(dp_price.len(), self.indices.len());
        debug_assert_eq!(dp_total_return.len(), self.indices.len());
        self.dates.push(date);
        self.dp_price.extend_from_slice(dp_price);
        self.dp_total_return.extend_from_slice(dp_total_return);
        self.libor.push(libor);
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn indices(&self) -> &[String] {
        &self.indices
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.indices
            .iter()
            .position(|i| i == id)
            .ok_or_else(|| Error::UnknownIndex(id.to_string()))
    }

    pub fn libor(&self) -> &[f64] {
        &self.libor
    }

    pub fn day(&self, k: usize) -> DayRecord<'_> {
        let n = self.indices.len();
        DayRecord {
            date: self.dates[k],
            dp_price: &self.dp_price[k * n..(k + 1) * n],
            dp_total_return: &self.dp_total_return[k * n..(k + 1) * n],
            libor: self.libor[k],
        }
    }

    pub fn days(&self) -> impl ExactSizeIterator<Item = DayRecord<'_>> + '_ {
        (0..self.len()).map(move |k| self.day(k))
    }

    /// Price-change column of one index.
    pub fn dp_price_of(&self, index: usize) -> Vec<f64> {
        self.days().map(|d| d.dp_price[index]).collect()
    }

    pub fn dp_total_return_of(&self, index: usize) -> Vec<f64> {
        self.days().map(|d| d.dp_total_return[index]).collect()
    }

    /// Copies day `k` of `source` onto the end of this history under a new date.
    pub fn push_from(&mut self, source: &MarketHistory, k: usize, date: NaiveDate) {
        let d = source.day(k);
        self.push(date, d.dp_price, d.dp_total_return, d.libor);
    }
}

/// Aligns price and total-return series (paired by position) and the LIBOR
/// rate onto the intersection of all series' calendars.
pub fn align_histories(
    prices: &[PriceSeries],
    total_returns: &[PriceSeries],
    libor: &RateSeries,
) -> Result<MarketHistory> {
    if prices.is_empty() {
        return Err(Error::Invalid("at least one index is required".into()));
    }
    if prices.len() != total_returns.len() {
        return Err(Error::Invalid(
            "every index needs both a price and a total-return series".into(),
        ));
    }

    let mut calendar: BTreeSet<NaiveDate> = prices[0].dates.iter().copied().collect();
    for s in prices.iter().chain(total_returns) {
        let dates: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        calendar = calendar.intersection(&dates).copied().collect();
    }
    if calendar.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let calendar: Vec<NaiveDate> = calendar.into_iter().collect();

    // Restrict each series to the calendar; every calendar date is present.
    let restrict = |s: &PriceSeries| -> Vec<f64> {
        let mut out = Vec::with_capacity(calendar.len());
        let mut j = 0;
        for d in &calendar {
            while s.dates[j] < *d {
                j += 1;
            }
            out.push(s.close[j]);
        }
        out
    };
    let price_cols: Vec<Vec<f64>> = prices
        .iter()
        .map(|s| compute_daily_changes(&restrict(s)))
        .collect::<Result<_>>()?;
    let tr_cols: Vec<Vec<f64>> = total_returns
        .iter()
        .map(|s| compute_daily_changes(&restrict(s)))
        .collect::<Result<_>>()?;

    let indices = prices.iter().map(|s| s.asset_id.clone()).collect();
    let mut history = MarketHistory::with_capacity(calendar[0], indices, calendar.len() - 1);
    let mut dp = vec![0.0; prices.len()];
    let mut dtr = vec![0.0; prices.len()];
    for (k, date) in calendar.iter().enumerate().skip(1) {
        for i in 0..prices.len() {
            dp[i] = price_cols[i][k - 1];
            dtr[i] = tr_cols[i][k - 1];
        }
        history.push(*date, &dp, &dtr, libor.rate_at(*date));
    }
    Ok(history)
}

/// Keeps the records dated within `start..=end`.
pub fn slice_window(history: &MarketHistory, start: NaiveDate, end: NaiveDate) -> Result<MarketHistory> {
    if start > end {
        return Err(Error::Invalid(format!("window start {start} is after end {end}")));
    }
    let lo = history.dates.partition_point(|d| *d < start);
    let hi = history.dates.partition_point(|d| *d <= end);
    if lo >= hi {
        return Err(Error::EmptyWindow { start, end });
    }
    let n = history.indices.len();
    Ok(MarketHistory {
        start_date: if lo == 0 {
            history.start_date
        } else {
            history.dates[lo - 1]
        },
        indices: history.indices.clone(),
        dates: history.dates[lo..hi].to_vec(),
        dp_price: history.dp_price[lo * n..hi * n].to_vec(),
        dp_total_return: history.dp_total_return[lo * n..hi * n].to_vec(),
        libor: history.libor[lo..hi].to_vec(),
    })
}
