//! Command line front end.
//!
//! Exit codes: 0 on success, 1 when some runs failed or are missing,
//! 2 on configuration or input-data errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posthead::runner::{self, RunFilter};
use posthead::{ablation, al, io, report, subset, Error, ExperimentConfig, Result};
use posthead_core::synthetic;

#[derive(Parser)]
#[command(
    name = "posthead",
    version,
    about = "Posterior linear heads over frozen embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides the configuration.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads; overrides the configuration.
    #[arg(long, short)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train and score every (method, label mode, seed) run.
    RunGrid {
        #[command(flatten)]
        common: Common,
        /// Only these runs, e.g. `method=proposed,label=soft,seed=42`.
        #[arg(long)]
        only: Option<RunFilter>,
    },
    /// Sampler ablations over cycles, temperature and samples per cycle.
    RunAblation {
        #[command(flatten)]
        common: Common,
    },
    /// Active-learning curves per strategy and seed.
    RunAl {
        #[command(flatten)]
        common: Common,
    },
    /// Refit temperature scaling from saved posteriors.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        only: Option<RunFilter>,
    },
    /// Recompute the statistical protocol from finished runs.
    Stats {
        #[command(flatten)]
        common: Common,
    },
    /// Divergence on the high-disagreement validation subset.
    SubsetDiagnostic {
        #[command(flatten)]
        common: Common,
    },
    /// Write grid.csv and summary.csv from bundle.json.
    Report {
        /// Output directory of a finished grid.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Write the synthetic corpus of a configuration as input files.
    Synth {
        #[command(flatten)]
        common: Common,
    },
}

struct Prepared {
    config: ExperimentConfig,
    out: PathBuf,
}

fn prepare(common: &Common) -> Result<Prepared> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(j) = common.jobs {
        config.jobs = j;
    }
    let out = common
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Prepared { config, out })
}

fn write_synthetic(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let src = config
        .data
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("`synth` needs a [data.synthetic] table".into()))?;
    let corpus = synthetic::generate(&src.corpus, src.seed).map_err(Error::from)?;
    io::write_dataset(
        &corpus.dataset,
        &out.join("features.phfm"),
        &out.join("examples.jsonl"),
        &out.join("categories.json"),
    )?;
    io::write_json(&out.join("generative.json"), &corpus.generative)
}

/// Ok(true) when every unit of work finished.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::RunGrid { common, only } => {
            let p = prepare(&common)?;
            let data = p.config.load_data()?;
            let bundle = runner::run_grid(&p.config, &data, &p.out, &only.unwrap_or_default())?;
            Ok(!bundle.partial)
        }
        Command::RunAblation { common } => {
            let p = prepare(&common)?;
            let data = p.config.load_data()?;
            ablation::run_ablation(&p.config, &data, &p.out)?;
            Ok(true)
        }
        Command::RunAl { common } => {
            let p = prepare(&common)?;
            let data = p.config.load_data()?;
            Ok(!al::run_al(&p.config, &data, &p.out)?.partial())
        }
        Command::Calibrate { common, only } => {
            let p = prepare(&common)?;
            let data = p.config.load_data()?;
            let filter = only.unwrap_or_default();
            let wanted = runner::grid_keys(&p.config)
                .into_iter()
                .filter(|k| filter.matches(k))
                .count();
            let done = runner::recalibrate(&p.config, &data, &p.out, &filter)?;
            Ok(done.len() == wanted)
        }
        Command::Stats { common } => {
            let p = prepare(&common)?;
            let data = p.config.load_data()?;
            Ok(!runner::restats(&p.config, &data, &p.out)?.partial)
        }
        Command::SubsetDiagnostic { common } => {
            let p = prepare(&common)?;
            let data = p.config.load_data()?;
            let diag = subset::subset_diagnostic(&p.config, &data, &p.out)?;
            for n in &diag.notes {
                log::warn!("{n}");
            }
            Ok(true)
        }
        Command::Report { out } => Ok(!report::write_report(&out)?.partial),
        Command::Synth { common } => {
            let p = prepare(&common)?;
            write_synthetic(&p.config, &p.out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::warn!("finished with failed or missing runs");
            ExitCode::from(1)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
