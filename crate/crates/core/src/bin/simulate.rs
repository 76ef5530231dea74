use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use phc_owc::harness::{default_workers, run_to_dir, ExperimentConfig, Preset, Scheme};

/// Monte-Carlo simulation of the grant-free photon-counting uplink.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Flat `key = value` config file, applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; falls back to the config's `output` key.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: $PHC_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated scheme list.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    /// fig8, fig9, fig10, fig11, fig12, fig15, fig16, fig17, fig18, exit or full.
    #[arg(long)]
    preset: Option<String>,
}

fn run(args: Args) -> phc_owc::Result<PathBuf> {
    let preset = args.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    let base = ExperimentConfig::default();
    let base = preset.map_or(base.clone(), |p| p.apply(&base));
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::parse_over(base, &std::fs::read_to_string(path)?)?,
        None => base,
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(list) = &args.scheme {
        config.schemes = list.iter().map(|s| s.trim().parse::<Scheme>()).collect::<phc_owc::Result<_>>()?;
    }
    config.validate()?;
    let out = args
        .out
        .or_else(|| config.output.clone())
        .ok_or_else(|| phc_owc::Error::ConfigField {
            field: "output".into(),
            reason: "no output directory given (--out or `output = ...`)".into(),
        })?;
    let workers = args.workers.unwrap_or_else(default_workers);
    run_to_dir(&config, preset, workers, &out)?;
    Ok(out)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(out) => {
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::FAILURE
        }
    }
}
