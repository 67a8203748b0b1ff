use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phasespace::scenarios::{list_scenarios, load_scenario};
use phasespace::AxisLabel;
use phasespace_cli::render::{heatmap, write_pgm};
use phasespace_cli::run::execute;
use phasespace_cli::snapshot::read_snapshot;
use phasespace_cli::{CliError, RunConfig, THREADS_ENV};

#[derive(Parser)]
#[command(name = "phasespace", version, about = "Spectral phase-space propagators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a built-in scenario.
    Run {
        #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        /// Snapshot directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        snapshot_every: Option<usize>,
        /// Only print the final summary.
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in scenarios.
    Scenarios,
    /// Write a PGM heatmap of a snapshot.
    Render {
        snapshot: PathBuf,
        output: PathBuf,
        /// Image axes as `horizontal,vertical`; other axes are integrated out.
        #[arg(long, default_value = "x,p")]
        axes: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = matches!(cli.command, Command::Run { quiet: true, .. });
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "warn" } else { "info" }))
        .format_target(false)
        .init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = value
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, scenario, out, snapshot_every, quiet: _ } => {
            let mut cfg = match (config, scenario) {
                (Some(path), _) => RunConfig::load(&path)?,
                (None, Some(name)) => load_scenario(&name)?.into(),
                (None, None) => unreachable!("clap requires one of --config and --scenario"),
            };
            if let Some(n) = snapshot_every {
                cfg.snapshot_every = n;
            }
            let out = out.or_else(|| cfg.output.clone());
            let summary = execute(&cfg, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            println!("{}: ok ({} mode, {} steps, run id {})", config.display(), cfg.mode, cfg.n_steps, cfg.run_id());
            Ok(())
        }
        Command::Scenarios => {
            for name in list_scenarios() {
                let s = load_scenario(name)?;
                println!("{name:<20} {:<20} {}", s.mode.name(), s.description);
            }
            Ok(())
        }
        Command::Render { snapshot, output, axes } => {
            let (h, v) = parse_axes(&axes)?;
            let (_, field) = read_snapshot(&snapshot)?;
            let image = heatmap(&field, (h, v))?;
            write_pgm(&image, &output)?;
            Ok(())
        }
    }
}

fn parse_axes(s: &str) -> Result<(AxisLabel, AxisLabel), CliError> {
    let bad = || CliError::Usage(format!("--axes expects two axis names such as `x,p`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((AxisLabel::parse(a.trim()).ok_or_else(bad)?, AxisLabel::parse(b.trim()).ok_or_else(bad)?))
}
