use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::LazyLock;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kfusion_cli::{
    cmd_bench, cmd_inspect, cmd_run, cmd_train, documented_defaults, BenchConfig, RowSelection, RunConfig,
};

static CONFIG_HELP: LazyLock<String> = LazyLock::new(|| {
    format!(
        "Run config fields and their defaults (TOML):\n\n{}",
        documented_defaults()
    )
});

/// Kernel LMS classifier fusion: train base ensembles, fuse them with a
/// kernel LMS combiner and compare against classical fusion rules.
#[derive(Debug, Parser)]
#[command(name = "kfusion", version, after_long_help = CONFIG_HELP.as_str())]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    #[command(after_long_help = CONFIG_HELP.as_str())]
    Run {
        /// Run config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several experiments and print one combined table.
    Bench {
        /// TOML file with `runs = ["iris.toml", ...]`.
        #[arg(long)]
        config: PathBuf,
        /// CSV of reference errors (`dataset,VT,DS,...`).
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on one fold and save the model.
    #[command(after_long_help = CONFIG_HELP.as_str())]
    Train {
        /// Run config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Index of the protocol fold whose training rows are used.
        #[arg(long, default_value_t = 0)]
        fold: usize,
        /// Output directory for `model.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print member and combiner confusion matrices of a saved model.
    Inspect {
        /// `model.json` written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Dataset file, parsed with the schema stored in the model.
        #[arg(long)]
        data: PathBuf,
        /// Rows to evaluate, relative to the model's training fold.
        #[arg(long, value_enum, default_value_t = RowSelection::Test)]
        fold: RowSelection,
    },
    /// Print the default run config.
    Defaults,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?.resolved(cli.seed);
            let report = cmd_run(&cfg, &out)?;
            print!("{}", report.to_table());
        }
        Command::Bench { config, reference, out } => {
            let bench = BenchConfig::load(&config)?;
            let outcome = cmd_bench(&bench, reference.as_deref(), cli.seed, &out)?;
            print!("{}", outcome.table);
        }
        Command::Train { config, fold, out } => {
            let cfg = RunConfig::load(&config)?.resolved(cli.seed);
            let (path, _) = cmd_train(&cfg, fold, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Inspect { model, data, fold } => {
            print!("{}", cmd_inspect(&model, &data, fold)?.text);
        }
        Command::Defaults => print!("{}", documented_defaults()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let pool = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool"),
        None => rayon::ThreadPoolBuilder::new().build().context("building thread pool"),
    };
    let result = pool.and_then(|p| p.install(|| execute(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
