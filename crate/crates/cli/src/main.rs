use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;

use cfmimo::harness::{
    cdf_csv, run_experiment_with, trial_statistics, write_rows, DirectionSelect, ExperimentConfig, OutputFormat,
};
use cfmimo::ChannelStatistics;

/// Cell-free massive MIMO beamforming experiments: runs the configured
/// scheme/estimator grid and writes per-UE spectral efficiencies.
#[derive(Debug, Parser)]
#[command(name = "cfmimo", version)]
struct Args {
    /// Experiment config (flat `key = value` file). Built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// ul, dl or both.
    #[arg(long, value_parser = parse_direction)]
    direction: Option<DirectionSelect>,
    /// Monte-Carlo realizations per cell.
    #[arg(long, value_name = "N")]
    mc_samples: Option<usize>,
    /// Samples for the sampled-moment OBE (`obe-mc` scheme).
    #[arg(long, value_name = "N")]
    obe_samples: Option<usize>,
    /// Worker threads. Affects speed only.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Write the channel statistics of the first trial and sweep point as JSON.
    #[arg(long, value_name = "PATH")]
    export_stats: Option<PathBuf>,
    /// Replay channel statistics from a JSON file instead of drawing geometry.
    #[arg(long, value_name = "PATH")]
    stats_in: Option<PathBuf>,
    /// Write the per-UE SE CDF of every (direction, scheme, estimator) group.
    #[arg(long, value_name = "PATH")]
    cdf_out: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: cfmimo::Error| e.to_string())
}

fn parse_direction(s: &str) -> std::result::Result<DirectionSelect, String> {
    s.parse().map_err(|e: cfmimo::Error| e.to_string())
}

fn build_config(args: &Args) -> Result<ExperimentConfig> {
    let mut exp = match &args.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        exp.seed = s;
    }
    if let Some(f) = args.format {
        exp.format = f;
    }
    if let Some(d) = args.direction {
        exp.direction = d;
    }
    if let Some(n) = args.mc_samples {
        exp.mc_samples = n;
    }
    if let Some(n) = args.obe_samples {
        exp.obe_samples = n;
    }
    if let Some(p) = &args.out {
        exp.output = Some(p.clone());
    }
    exp.validate()?;
    Ok(exp)
}

fn run(args: Args) -> Result<()> {
    if let Some(n) = args.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let exp = build_config(&args)?;
    if let Some(path) = &args.export_stats {
        let first = exp.sweep_points()[0];
        let (_, stats) = trial_statistics(&exp, 0, first)?;
        stats.save_json(path).with_context(|| format!("writing {}", path.display()))?;
        log::info!("statistics written to {}", path.display());
    }
    let fixed = match &args.stats_in {
        Some(p) => Some(ChannelStatistics::load_json(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let rows = run_experiment_with(&exp, fixed.as_ref())?;
    match &exp.output {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_rows(&rows, exp.format, io::BufWriter::new(file))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_rows(&rows, exp.format, &mut lock)?;
            lock.flush()?;
        }
    }
    if let Some(path) = &args.cdf_out {
        fs::write(path, cdf_csv(&rows)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::from(2)
        }
    }
}
