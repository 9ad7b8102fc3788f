use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cddsim_cli::analysis::{contour_export, turning_point_map};
use cddsim_cli::output::{write_calibration, write_contour, write_records, write_turning_points};
use cddsim_cli::runner::{run_calibration, run_grid, run_single, run_sweep};
use cddsim_cli::{load_config, CliError, ConfigError, Format, RunConfig};

/// Concatenated dynamical decoupling of encoded exchange gates.
#[derive(Parser)]
#[command(name = "cddsim", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` with optional sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set model.j=10kHz`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true, value_parser = parse_override)]
    overrides: Vec<(String, String)>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Levels 0..=n_max at one coupling point, each with its free baseline.
    Simulate,
    /// Every (J, beta) grid cell at levels 0..=n_max.
    Sweep,
    /// log10(1 - F) over the grid at one level, on (J tau0, beta tau0) axes.
    Contour {
        /// Concatenation level; defaults to n_max.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Turning point of every grid cell over levels 0..=n_max.
    TurningPoint,
    /// Bath-scaling multiplier matching the smallest bath to the largest.
    CalibrateBath {
        /// Bath sizes to simulate, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        baths: Vec<usize>,
        /// Level of the memory run used as the observable.
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
}

fn parse_override(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("`{s}` is not KEY=VALUE"))
}

fn config(common: &Common) -> Result<RunConfig, CliError> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Validation(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = load_config(&text, &common.overrides)?;
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    if let Some(f) = &common.format {
        cfg.format = f.parse::<Format>().map_err(ConfigError::Validation)?;
    }
    Ok(cfg)
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config(&cli.common)?;
    let format = cfg.format;
    match cli.command {
        Command::Simulate => {
            let records = run_single(&cfg)?;
            write_records(&records, &cfg, format, sink(&cfg)?)
        }
        Command::Sweep => {
            let records = run_sweep(&cfg)?;
            write_records(&records, &cfg, format, sink(&cfg)?)
        }
        Command::Contour { level } => {
            let n = level.unwrap_or(cfg.n_max);
            let records = run_grid(&cfg, &[n])?;
            let grid = contour_export(&records, n, cfg.delta)?;
            write_contour(&grid, format, sink(&cfg)?)
        }
        Command::TurningPoint => {
            let points = turning_point_map(&run_sweep(&cfg)?)?;
            write_turning_points(&points, &cfg, format, sink(&cfg)?)
        }
        Command::CalibrateBath { baths, level } => {
            let report = run_calibration(&cfg, &baths, level)?;
            write_calibration(&report, format, sink(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
