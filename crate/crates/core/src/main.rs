use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rankreduce::experiment::{parse_config, run_convergence, run_rank_sweep, write_csv};

#[derive(Parser)]
#[command(
    name = "rankreduce",
    version,
    about = "Reduced-rank RLS DS-CDMA experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write aggregated results as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's Monte-Carlo run count.
        #[arg(long)]
        runs: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    RankSweep,
    Convergence,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let Command::Run {
        config,
        mode,
        out,
        seed,
        runs,
    } = cli.command;
    let text = std::fs::read_to_string(&config)
        .with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", config.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(runs) = runs {
        cfg.runs = runs;
    }
    cfg.validate().context("after command-line overrides")?;
    let rows = match mode {
        Mode::RankSweep => run_rank_sweep(&cfg)?,
        Mode::Convergence => run_convergence(&cfg)?,
    };
    write_csv(&out, &rows, &cfg.echo_lines())
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
