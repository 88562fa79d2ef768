//! CSV ingestion for Yahoo-style price files and LIBOR rate files.

use std::path::Path;

use chrono::NaiveDate;

use super::{PriceSeries, RateSeries};
use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

fn parse_date(field: Option<&str>) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(field?, DATE_FORMAT).ok()
}

fn parse_price(field: Option<&str>) -> Option<f64> {
    let v: f64 = field?.parse().ok()?;
    (v.is_finite() && v > 0.0).then_some(v)
}

/// Sorts rows by date and rejects duplicates.
fn sort_unique<T>(path: &Path, rows: &mut [(NaiveDate, T)]) -> Result<()> {
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate {
            path: path.to_path_buf(),
            date: w[0].0,
        });
    }
    Ok(())
}

/// Loads a price file with `Date` and `Close` columns and an optional
/// `Adj Close` column.
///
/// Rows whose date does not parse, or whose close (or adjusted close, when
/// that column exists) is missing, non-numeric or non-positive are skipped;
/// the number skipped is kept in [`PriceSeries::dropped_rows`].
pub fn load_price_csv(path: impl AsRef<Path>, asset_id: &str) -> Result<PriceSeries> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .clone();
    let date_col = column(&headers, "Date").ok_or(Error::MissingColumn {
        path: path.to_path_buf(),
        column: "Date",
    })?;
    let close_col = column(&headers, "Close").ok_or(Error::MissingColumn {
        path: path.to_path_buf(),
        column: "Close",
    })?;
    let adj_col = column(&headers, "Adj Close");

    let mut rows: Vec<(NaiveDate, (f64, Option<f64>))> = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let date = parse_date(record.get(date_col));
        let close = parse_price(record.get(close_col));
        let adj = adj_col.map(|c| parse_price(record.get(c)));
        match (date, close, adj) {
            (Some(d), Some(c), None) => rows.push((d, (c, None))),
            (Some(d), Some(c), Some(Some(a))) => rows.push((d, (c, Some(a)))),
            _ => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::NoValidRows {
            path: path.to_path_buf(),
        });
    }
    sort_unique(path, &mut rows)?;

    let dates = rows.iter().map(|r| r.0).collect();
    let close = rows.iter().map(|r| r.1 .0).collect();
    let adj_close = adj_col.map(|_| rows.iter().map(|r| r.1 .1.unwrap_or(f64::NAN)).collect());
    Ok(PriceSeries {
        asset_id: asset_id.to_string(),
        dates,
        close,
        adj_close,
        dropped_rows: dropped,
    })
}

/// Loads a rate file with `Date` and `Rate` columns (yearly percent). A file
/// with exactly two columns is accepted whatever the second header is named,
/// which covers FRED exports.
pub fn load_rate_csv(path: impl AsRef<Path>) -> Result<RateSeries> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .clone();
    let date_col = column(&headers, "Date").ok_or(Error::MissingColumn {
        path: path.to_path_buf(),
        column: "Date",
    })?;
    let rate_col = column(&headers, "Rate")
        .or_else(|| (headers.len() == 2).then_some(1 - date_col))
        .ok_or(Error::MissingColumn {
            path: path.to_path_buf(),
            column: "Rate",
        })?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let date = parse_date(record.get(date_col));
        let rate = record
            .get(rate_col)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|r| r.is_finite());
        if let (Some(d), Some(r)) = (date, rate) {
            rows.push((d, r));
        }
    }
    if rows.is_empty() {
        return Err(Error::NoValidRows {
            path: path.to_path_buf(),
        });
    }
    sort_unique(path, &mut rows)?;
    Ok(RateSeries {
        dates: rows.iter().map(|r| r.0).collect(),
        rate: rows.iter().map(|r| r.1).collect(),
    })
}
