mod common;

use std::fs;

use levsim::config::parse_config;
use levsim::report::{cmd_backtest, cmd_frontier, cmd_mc, FRONTIER_FILE, HISTOGRAM_FILE, SUMMARY_FILE, TRAJECTORY_FILE};
use serde_json::json;

fn read_csv(path: &std::path::Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn backtest_trajectory_accounts_for_equity() {
    let dir = tempfile::tempdir().unwrap();
    common::write_market(dir.path(), 2600, 1);
    let path = common::scenario(
        dir.path(),
        "s.json",
        json!({"mode": "backtest", "portfolio": {"fractions": [0.6, 0.4], "initial_investment": 1000.0},
               "leverage": {"margin": 1.8}}),
    );
    let config = parse_config(&path).unwrap();
    let out = dir.path().join("out");
    let report = cmd_backtest(&config, &out).unwrap();
    assert!(!report.insolvent);
    let (h, rows) = read_csv(&out.join(TRAJECTORY_FILE));
    assert_eq!(
        h,
        ["date", "yield", "total", "margin_debt", "f_VOO", "f_VUSTX", "leverage", "gains", "cumulative_tax"]
    );
    assert_eq!(rows.len(), 2601);
    let num = |r: &Vec<String>, c: &str| r[col(&h, c)].parse::<f64>().unwrap();
    for r in &rows {
        let equity = num(r, "total") - num(r, "margin_debt");
        let expected = num(r, "yield") * 1000.0;
        assert!((equity - expected).abs() <= 1e-6 * expected.abs());
        assert!((num(r, "leverage") / 1.8 - 1.0).abs() < 0.10 + 1e-9, "{r:?}");
    }
}

#[test]
fn taxed_backtest_pays_nondecreasing_tax() {
    let dir = tempfile::tempdir().unwrap();
    common::write_market(dir.path(), 2600, 2);
    let path = common::scenario(
        dir.path(),
        "s.json",
        json!({"engine": {"tax_enabled": true}, "leverage": {"letf": 3}}),
    );
    let config = parse_config(&path).unwrap();
    let out = dir.path().join("out");
    cmd_backtest(&config, &out).unwrap();
    let (h, rows) = read_csv(&out.join(TRAJECTORY_FILE));
    let tax: Vec<f64> = rows.iter().map(|r| r[col(&h, "cumulative_tax")].parse().unwrap()).collect();
    assert!(tax.windows(2).all(|w| w[1] >= w[0]));
    assert!(*tax.last().unwrap() > 0.0);
}

#[test]
fn mc_writes_summary_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    common::write_market(dir.path(), 1500, 3);
    let path = common::scenario(
        dir.path(),
        "s.json",
        json!({"mode": "mc", "horizon_years": 2, "sampler": {"realizations": 60, "bootstrap_resamples": 40, "seed": 9}}),
    );
    let config = parse_config(&path).unwrap();
    let out = dir.path().join("out");
    let report = cmd_mc(&config, &out, 2).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["realizations"], 60);
    for m in ["reward", "risk_rational", "risk_min_yield", "risk_drawdown", "cagr_reward"] {
        let ci = summary["metrics"][m]["ci"].as_array().unwrap();
        assert!(ci[0].as_f64().unwrap() <= ci[1].as_f64().unwrap());
    }
    assert!(report.summary.risk_rational.value <= report.summary.reward.value);
    let (h, rows) = read_csv(&out.join(HISTOGRAM_FILE));
    assert_eq!(h, ["metric", "bin_lo", "bin_hi", "count"]);
    for metric in ["final_yield", "min_yield", "max_drawdown"] {
        let counts: usize = rows
            .iter()
            .filter(|r| r[0] == metric)
            .map(|r| r[3].parse::<usize>().unwrap())
            .sum();
        assert_eq!(counts, 60);
    }
    assert_eq!(rows.iter().filter(|r| r[0] == "final_yield").count(), 60);
}

#[test]
fn single_realization_has_equal_percentiles() {
    let dir = tempfile::tempdir().unwrap();
    common::write_market(dir.path(), 600, 4);
    let path = common::scenario(
        dir.path(),
        "s.json",
        json!({"horizon_years": 1, "sampler": {"realizations": 1, "bootstrap_resamples": 10}}),
    );
    let config = parse_config(&path).unwrap();
    let s = cmd_mc(&config, &dir.path().join("out"), 1).unwrap().summary;
    assert_eq!(s.reward.value, s.risk_rational.value);
    assert_eq!(s.reward.ci, (s.reward.value, s.reward.value));
}

#[test]
fn frontier_has_one_row_per_pair_and_tax_lowers_reward() {
    let dir = tempfile::tempdir().unwrap();
    common::write_market(dir.path(), 1500, 5);
    let sampler = json!({"realizations": 40, "bootstrap_resamples": 20, "seed": 3});
    let free = common::scenario(dir.path(), "free.json", json!({"horizon_years": 3, "sampler": sampler}));
    let taxed = common::scenario(
        dir.path(),
        "taxed.json",
        json!({"horizon_years": 3, "sampler": sampler, "engine": {"tax_enabled": true}}),
    );
    let a = cmd_frontier(&parse_config(&free).unwrap(), &dir.path().join("a"), 0).unwrap();
    let b = cmd_frontier(&parse_config(&taxed).unwrap(), &dir.path().join("b"), 0).unwrap();
    assert_eq!(a.rows.len(), 84);
    let (h, rows) = read_csv(&dir.path().join("a").join(FRONTIER_FILE));
    assert_eq!(rows.len(), 84);
    assert_eq!(&h[..11], [
        "stock_fraction", "variant", "reward_median", "reward_ci_lo", "reward_ci_hi", "cagr",
        "risk5_final", "risk5_ci_lo", "risk5_ci_hi", "risk5_min_yield", "drawdown_median"
    ]);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!((x.stock_fraction, x.variant), (y.stock_fraction, y.variant));
        assert!(y.summary.reward.value <= x.summary.reward.value + 1e-12, "{x:?} {y:?}");
    }
}

#[test]
fn missing_data_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::scenario(dir.path(), "s.json", json!({}));
    let config = parse_config(&path).unwrap();
    let e = cmd_backtest(&config, &dir.path().join("out")).unwrap_err();
    assert!(!e.is_config());
}

#[test]
fn window_limits_the_backtest() {
    let dir = tempfile::tempdir().unwrap();
    common::write_market(dir.path(), 800, 6);
    let path = common::scenario(
        dir.path(),
        "s.json",
        json!({"window": {"start": "1991-01-01", "end": "1991-12-31"}}),
    );
    let config = parse_config(&path).unwrap();
    let out = dir.path().join("out");
    cmd_backtest(&config, &out).unwrap();
    let (_, rows) = read_csv(&out.join(TRAJECTORY_FILE));
    assert_eq!(rows[0][0], "1990-12-31");
    assert!(rows[1..].iter().all(|r| r[0].starts_with("1991-")));
    assert_eq!(rows.len(), 262);
}
