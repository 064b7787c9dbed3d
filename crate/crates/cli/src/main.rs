//! `circle-sim`: runs CIRCLE Monte Carlo experiments and writes CSV results.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use circle_core::harness::{self, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "circle-sim", version, about = "CSIT-free massive MIMO precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a preset or a TOML config
    Run(RunArgs),
    /// List preset names
    Presets,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Figure preset (fig2, fig4a..fig4d, fig5, fig6)
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// TOML file with experiment fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the published trial count instead of desk scale
    #[arg(long, requires = "preset")]
    full: bool,
    /// RNG seed; overrides CIRCLE_SEED and the config
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of trials
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Record per-method wall time in the CSV
    #[arg(long)]
    timing: bool,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), None) => harness::preset(name, args.full)?,
        (None, Some(path)) => ExperimentConfig::from_file(path)?,
        _ => return Err("give exactly one of --preset and --config".into()),
    };
    if let Ok(seed) = std::env::var("CIRCLE_SEED") {
        cfg.seed = seed
            .trim()
            .parse()
            .map_err(|_| format!("CIRCLE_SEED is not an unsigned integer: {seed:?}"))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.n_trials = trials;
    }
    cfg.record_timing |= args.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = load_config(args)?;
    let results = harness::run_experiment(&cfg, args.threads)?;
    let sweep = cfg.sweep_variable();

    // the summary goes to stderr when stdout carries the CSV
    let mut summary: Box<dyn Write> = match &args.out {
        Some(path) => {
            harness::write_csv(&results, sweep, path)?;
            Box::new(io::stdout())
        }
        None => {
            harness::write_csv_to(&results, sweep, io::stdout().lock())?;
            Box::new(io::stderr())
        }
    };
    writeln!(summary, "{:>12} {:>10} {:>7} {:>12} {:>10}", sweep.as_str(), "method", "trials", "mean_se", "std_err")?;
    for row in harness::summarize(&results) {
        writeln!(
            summary,
            "{:>12} {:>10} {:>7} {:>12.4} {:>10.4}",
            row.sweep_value,
            row.method.as_str(),
            row.trials,
            row.mean,
            row.std_err
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Presets => {
            for name in harness::PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
