#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use levsim::market::MarketHistory;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = unit(rng).max(f64::MIN_POSITIVE);
    let v = unit(rng);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn weekdays(from: NaiveDate, n: usize) -> Vec<NaiveDate> {
    from.iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

/// Daily percent changes of a stock-like and a bond-like index: normal
/// shocks with the given yearly drift and volatility, mildly anti-correlated.
pub fn random_changes(days: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..days)
        .map(|_| {
            let a = normal(&mut rng);
            let b = -0.3 * a + (1.0f64 - 0.09).sqrt() * normal(&mut rng);
            (0.035 + 1.15 * a, 0.02 + 0.55 * b)
        })
        .collect()
}

/// Writes `stock.csv`, `bond.csv` (Date, Close, Adj Close) and `libor.csv`
/// into `dir`, `days + 1` trading days from 1990-01-02.
pub fn write_market(dir: &Path, days: usize, seed: u64) {
    let dates = weekdays(NaiveDate::from_ymd_opt(1990, 1, 2).unwrap(), days + 1);
    let dp = random_changes(days, seed);
    let mut stock = String::from("Date,Close,Adj Close\n");
    let mut bond = String::from("Date,Close,Adj Close\n");
    let mut libor = String::from("DATE,USD1MTD156N\n");
    let (mut s, mut st, mut b, mut bt) = (100.0, 100.0, 50.0, 50.0);
    for (k, d) in dates.iter().enumerate() {
        if k > 0 {
            let (x, y) = dp[k - 1];
            s *= 1.0 + x / 100.0;
            st *= 1.0 + x / 100.0 + 2.0 / 25200.0;
            b *= 1.0 + y / 100.0;
            bt *= 1.0 + y / 100.0 + 3.0 / 25200.0;
        }
        writeln!(stock, "{d},{s},{st}").unwrap();
        writeln!(bond, "{d},{b},{bt}").unwrap();
        if k % 21 == 0 {
            let rate = 2.0 + (k as f64 / 400.0).sin();
            writeln!(libor, "{d},{rate}").unwrap();
        }
    }
    std::fs::write(dir.join("stock.csv"), stock).unwrap();
    std::fs::write(dir.join("bond.csv"), bond).unwrap();
    std::fs::write(dir.join("libor.csv"), libor).unwrap();
}

/// A scenario over the files of [`write_market`]; `extra` is merged into
/// the top-level object.
pub fn scenario(dir: &Path, name: &str, extra: serde_json::Value) -> PathBuf {
    let mut doc = serde_json::json!({
        "indices": {
            "STOCK": {"price_csv": "stock.csv", "total_return": "adj_close"},
            "BOND": {"price_csv": "bond.csv", "total_return": "adj_close"}
        },
        "libor": {"csv": "libor.csv"},
        "assets": [
            {"asset_id": "VOO", "index": "STOCK", "expense_ratio": 0.03, "dividend_model": {"base": 2.0}},
            {"asset_id": "VUSTX", "index": "BOND", "expense_ratio": 0.05,
             "dividend_model": {"base": 5.0, "libor_coefficient": 0.5}}
        ],
        "portfolio": {"fractions": [0.5, 0.5], "initial_investment": 1.0}
    });
    for (k, v) in extra.as_object().unwrap() {
        doc[k] = v.clone();
    }
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

/// An in-memory two-index history of [`random_changes`].
pub fn random_history(days: usize, seed: u64) -> MarketHistory {
    let dates = weekdays(NaiveDate::from_ymd_opt(1990, 1, 2).unwrap(), days + 1);
    let mut h = MarketHistory::with_capacity(dates[0], vec!["STOCK".into(), "BOND".into()], days);
    for (k, (x, y)) in random_changes(days, seed).into_iter().enumerate() {
        h.push(dates[k + 1], &[x, y], &[x + 2.0 / 252.0, y + 3.0 / 252.0], 2.0);
    }
    h
}
