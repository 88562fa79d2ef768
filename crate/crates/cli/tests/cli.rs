use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dates(n: usize) -> impl Iterator<Item = String> {
    (2000..)
        .flat_map(|y| (1..=12).flat_map(move |m| (1..=28).map(move |d| format!("{y}-{m:02}-{d:02}"))))
        .take(n)
}

/// Two zig-zag price series and a flat LIBOR file, `n` dated rows each.
fn write_data(dir: &Path, n: usize) {
    let (mut stock, mut bond) = (String::from("Date,Close,Adj Close\n"), String::from("Date,Close,Adj Close\n"));
    let (mut s, mut b) = (100.0, 40.0);
    for (k, d) in dates(n).enumerate() {
        if k > 0 {
            s *= if k % 3 == 0 { 0.985 } else { 1.009 };
            b *= if k % 2 == 0 { 0.997 } else { 1.0035 };
        }
        writeln!(stock, "{d},{s},{}", s * 1.0001f64.powi(k as i32)).unwrap();
        writeln!(bond, "{d},{b},{}", b * 1.0002f64.powi(k as i32)).unwrap();
    }
    fs::write(dir.join("stock.csv"), stock).unwrap();
    fs::write(dir.join("bond.csv"), bond).unwrap();
    fs::write(dir.join("libor.csv"), "DATE,USD1MTD156N\n2000-01-01,2.5\n").unwrap();
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    let doc = format!(
        r#"{{
  "indices": {{
    "STOCK": {{"price_csv": "stock.csv", "total_return": "adj_close"}},
    "BOND": {{"price_csv": "bond.csv", "total_return": "adj_close"}}
  }},
  "libor": {{"csv": "libor.csv"}},
  "assets": [
    {{"asset_id": "S", "index": "STOCK", "expense_ratio": 0.03}},
    {{"asset_id": "B", "index": "BOND", "expense_ratio": 0.05}}
  ],
  {body}
}}"#
    );
    fs::write(&path, doc).unwrap();
    path
}

fn levsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levsim"))
        .args(args)
        .env("LEVSIM_THREADS", "2")
        .output()
        .unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    levsim(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn backtest_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 600);
    let config = write_config(
        dir.path(),
        r#""mode": "backtest", "portfolio": {"fractions": [0.6, 0.4]}, "leverage": {"letf": 2}"#,
    );
    let out = dir.path().join("out");
    let o = run("backtest", &config, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trajectory = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = trajectory.lines();
    assert_eq!(
        lines.next().unwrap(),
        "date,yield,total,margin_debt,f_S2x,f_B2x,leverage,gains,cumulative_tax"
    );
    assert_eq!(lines.count(), 600);
    assert!(String::from_utf8_lossy(&o.stdout).contains("final yield"));
}

#[test]
fn mc_respects_overrides_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 800);
    let config = write_config(
        dir.path(),
        r#""mode": "mc", "portfolio": {"fractions": [0.5, 0.5]}, "horizon_years": 1,
  "sampler": {"realizations": 500, "bootstrap_resamples": 50}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run("mc", &config, &a, &["--seed", "7", "--realizations", "30"])), 0);
    assert_eq!(code(&run("mc", &config, &b, &["--seed", "7", "--realizations", "30"])), 0);
    for f in ["results.csv", "summary.json", "histogram.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let results = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 31);
    let summary = fs::read_to_string(a.join("summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 7"), "{summary}");
}

#[test]
fn frontier_writes_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 700);
    let config = write_config(
        dir.path(),
        r#""mode": "frontier", "portfolio": {"fractions": [0.5, 0.5]}, "horizon_years": 1,
  "frontier": {"stock_fractions": [0.0, 0.5, 1.0], "variants": [{"letf": 2}, {}]},
  "sampler": {"realizations": 20, "bootstrap_resamples": 10}"#,
    );
    let out = dir.path().join("out");
    let o = run("frontier", &config, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("frontier.csv")).unwrap();
    assert_eq!(rows.lines().count(), 7);
}

#[test]
fn bad_fractions_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 50);
    let config = write_config(dir.path(), r#""portfolio": {"fractions": [0.6, 0.6]}"#);
    let o = run("backtest", &config, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("portfolio.fractions"));
}

#[test]
fn mode_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 50);
    let config = write_config(dir.path(), r#""mode": "mc", "portfolio": {"fractions": [0.5, 0.5]}"#);
    assert_eq!(code(&run("backtest", &config, &dir.path().join("out"), &[])), 1);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&levsim(&["backtest"])), 1);
    assert_eq!(code(&levsim(&["rebalance", "--config", "x.json"])), 1);
    assert_eq!(code(&levsim(&["--help"])), 0);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("backtest", &dir.path().join("nope.json"), &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#""portfolio": {"fractions": [0.5, 0.5]}"#);
    let o = run("backtest", &config, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 300);
    let config = write_config(
        dir.path(),
        r#""mode": "mc", "portfolio": {"fractions": [0.5, 0.5]}, "horizon_years": 1, "sampler": {"realizations": 5}"#,
    );
    let o = Command::new(env!("CARGO_BIN_EXE_levsim"))
        .args(["mc", "--config", config.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()])
        .env("LEVSIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn bankrupt_backtest_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut stock = String::from("Date,Close,Adj Close\n");
    let mut bond = String::from("Date,Close,Adj Close\n");
    let mut p = 100.0;
    for (k, d) in dates(40).enumerate() {
        if k > 0 {
            p *= 0.9;
        }
        writeln!(stock, "{d},{p},{p}").unwrap();
        writeln!(bond, "{d},50,50").unwrap();
    }
    fs::write(dir.path().join("stock.csv"), stock).unwrap();
    fs::write(dir.path().join("bond.csv"), bond).unwrap();
    fs::write(dir.path().join("libor.csv"), "DATE,USD1MTD156N\n2000-01-01,2.5\n").unwrap();
    let config = write_config(
        dir.path(),
        r#""portfolio": {"fractions": [1.0, 0.0]}, "leverage": {"margin": 3.0},
  "engine": {"rebalance_leverage_trigger": 1e9}"#,
    );
    let o = run("backtest", &config, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
