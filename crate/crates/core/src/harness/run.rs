//! Run a configured scenario and write its CSV files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{ScenarioId, SimConfig};
use super::trials::Parallelism;
use crate::error::Result;
use crate::scenario::{adhoc, cellfree, coverage, iab, ScenarioOutput};

/// Run the selected scenario. Every output table gets the run metadata
/// (scenario, seed, trials, version, resolved config) ahead of its own.
pub fn run_scenario(cfg: &SimConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let id = cfg.scenario_id()?;
    let seed = cfg.run.seed;
    let parallelism = Parallelism::from_threads(cfg.run.threads);
    let started = Instant::now();
    let mut out = match id {
        ScenarioId::Adhoc => adhoc::run(&cfg.adhoc, &cfg.radio, seed, parallelism),
        ScenarioId::CellfreeEnergy => cellfree::run(&cfg.cellfree, &cfg.radio, seed, parallelism),
        ScenarioId::Coverage => coverage::run(&cfg.coverage, &cfg.radio, seed, parallelism),
        ScenarioId::Iab => iab::run(&cfg.iab, &cfg.radio, seed, parallelism),
    }?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut meta: Vec<(String, String)> = vec![
        ("scenario".into(), id.to_string()),
        ("seed".into(), seed.to_string()),
        ("trials".into(), cfg.trials()?.to_string()),
        ("version".into(), format!("ntnsim {}", env!("CARGO_PKG_VERSION"))),
        ("failed_trials".into(), out.failed_trials.to_string()),
        ("threads".into(), cfg.run.threads.to_string()),
        ("wall_time_s".into(), format!("{elapsed:.3}")),
    ];
    for line in cfg.echo()?.lines() {
        meta.push(("config".into(), line.to_string()));
    }
    for table in std::iter::once(&mut out.main).chain(out.extras.iter_mut().map(|(_, t)| t)) {
        let own = std::mem::take(&mut table.metadata);
        table.metadata = meta.iter().cloned().chain(own).collect();
    }
    Ok(out)
}

/// `results/run.csv` with suffix `nodes` gives `results/run_nodes.csv`.
pub fn extra_path(main: &Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = main.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    main.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Write the main table to `path` and each extra next to it. Returns every
/// path written.
pub fn write_output(out: &ScenarioOutput, path: &Path) -> Result<Vec<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut written = vec![path.to_path_buf()];
    out.main.write_csv(path)?;
    for (suffix, table) in &out.extras {
        let p = extra_path(path, suffix);
        table.write_csv(&p)?;
        written.push(p);
    }
    Ok(written)
}
