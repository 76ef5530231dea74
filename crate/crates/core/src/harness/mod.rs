//! Config-driven Monte-Carlo orchestration and CSV output.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use std::path::Path;

pub use config::{ungrouped_mode, ExperimentConfig, Scheme, SweepVar};
pub use output::{beliefs_csv, config_hash, exit_rows, manifest, result_rows, results_csv, MetricRow};
pub use presets::Preset;
pub use run::{exit_chart, run_experiment, run_point, PointResult, SchemeTally};

use crate::error::Result;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "PHC_WORKERS";

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| crate::error::invalid("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Files written by [`run_to_dir`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFiles {
    pub results: String,
    pub beliefs: Option<String>,
    pub manifest: String,
}

/// Runs `config` (or the EXIT chart for the exit preset) and writes
/// `<name>.csv`, `<name>-beliefs.csv` and `run-manifest` into `out`.
pub fn run_to_dir(config: &ExperimentConfig, preset: Option<Preset>, workers: usize, out: &Path) -> Result<RunFiles> {
    let name = preset.map_or("results", |p| p.tag());
    let results = format!("{name}.csv");
    let mut files = vec![results.clone()];
    let mut beliefs = None;
    if preset == Some(Preset::Exit) {
        let mut rows = Vec::new();
        for &eb in &config.eb_dbj {
            let chart = with_workers(workers, || exit_chart(config, eb))??;
            rows.extend(exit_rows(config, eb, &chart));
        }
        output::write_file(out, &results, &results_csv(&rows))?;
    } else {
        let points = with_workers(workers, || run_experiment(config))??;
        output::write_file(out, &results, &results_csv(&result_rows(config, &points)))?;
        if config.schemes.iter().any(Scheme::is_proposed) {
            let b = format!("{name}-beliefs.csv");
            output::write_file(out, &b, &beliefs_csv(config, &points))?;
            files.push(b.clone());
            beliefs = Some(b);
        }
    }
    let manifest_name = "run-manifest".to_string();
    output::write_file(out, &manifest_name, &manifest(config, name, &files))?;
    Ok(RunFiles {
        results,
        beliefs,
        manifest: manifest_name,
    })
}
