use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levsim::config::{parse_config, Mode, ScenarioConfig};
use levsim::montecarlo::worker_threads;
use levsim::report::{cmd_backtest, cmd_frontier, cmd_mc};
use levsim::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INSOLVENCY: u8 = 3;

/// Leveraged stock/bond portfolio simulator.
#[derive(Parser)]
#[command(name = "levsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay the scenario over its historical window.
    Backtest(Common),
    /// Block-bootstrap Monte-Carlo of the scenario.
    Mc(Common),
    /// Sweep stock fraction and leverage variants.
    Frontier(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `sampler.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `sampler.realizations`.
    #[arg(long)]
    realizations: Option<usize>,
    /// Output directory; defaults to the scenario's `output`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(common: &Common, mode: Mode) -> Result<(ScenarioConfig, PathBuf), Error> {
    let mut config = parse_config(&common.config)?;
    config.expect_mode(mode)?;
    if let Some(seed) = common.seed {
        config.sampler.seed = seed;
    }
    if let Some(n) = common.realizations {
        config.sampler.realizations = n;
    }
    config.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(|p| config.base_dir.join(p)))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Backtest(common) => {
            let (config, out) = load(&common, Mode::Backtest)?;
            let report = cmd_backtest(&config, &out)?;
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            println!("final yield {}", report.final_yield);
            if report.insolvent {
                eprintln!("warning: the portfolio went bankrupt");
                return Ok(EXIT_INSOLVENCY);
            }
            Ok(0)
        }
        Command::Mc(common) => {
            let (config, out) = load(&common, Mode::Mc)?;
            let report = cmd_mc(&config, &out, worker_threads()?)?;
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            let s = &report.summary;
            println!(
                "reward {} (cagr {}), rational risk {}, min-yield risk {}, drawdown {}",
                s.reward.value, s.cagr_reward.value, s.risk_rational.value, s.risk_min_yield.value, s.risk_drawdown.value
            );
            if s.insolvent_fraction() > config.insolvency_warning {
                eprintln!(
                    "warning: {} of {} realizations went bankrupt",
                    s.insolvent, s.realizations
                );
                return Ok(EXIT_INSOLVENCY);
            }
            Ok(0)
        }
        Command::Frontier(common) => {
            let (config, out) = load(&common, Mode::Frontier)?;
            let report = cmd_frontier(&config, &out, worker_threads()?)?;
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            let worst = report.worst_insolvent_fraction();
            if worst > config.insolvency_warning {
                eprintln!("warning: up to {worst} of realizations went bankrupt in a frontier row");
                return Ok(EXIT_INSOLVENCY);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_DATA })
        }
    }
}
