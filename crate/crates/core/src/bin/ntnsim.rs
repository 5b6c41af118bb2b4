use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ntnsim::harness::{load_config, run_scenario, write_output, ScenarioId};
use ntnsim::Error;

/// Monte Carlo simulator for UAV, HAPS and satellite networks.
#[derive(Debug, Parser)]
#[command(name = "ntnsim", version)]
struct Cli {
    /// adhoc, cellfree-energy, coverage or iab
    scenario: String,
    /// TOML config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Main CSV; extra tables are written next to it.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// `key=value`, repeatable. Undotted keys resolve to the scenario section.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SCENARIO: u8 = 3;

fn fail(e: &Error) -> ExitCode {
    eprintln!("ntnsim: {e}");
    ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_SCENARIO })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.overrides.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("run.seed={s}"));
    }
    if let Some(t) = cli.threads {
        overrides.push(format!("run.threads={t}"));
    }
    let cfg = cli
        .scenario
        .parse::<ScenarioId>()
        .and_then(|id| {
            if let Some(t) = cli.trials {
                overrides.push(format!("{}.trials={t}", id.section()));
            }
            load_config(Some(id), cli.config.as_deref(), &overrides)
        });
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let out = match run_scenario(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    match write_output(&out, &cli.out) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            if out.failed_trials > 0 {
                eprintln!("ntnsim: {} trial(s) failed", out.failed_trials);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
