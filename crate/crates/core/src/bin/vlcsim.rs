use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vlc_elm::circulant::complexity_report;
use vlc_elm::frontend::{fit_polynomial_iv, parse_iv_csv, DEFAULT_IV_TABLE, DEFAULT_ORDER};
use vlc_elm::harness::{dump_constellation, run_ser_sweep, ExperimentConfig, ReceiverKind};
use vlc_elm::Result;

/// LED MIMO link simulator with ELM receivers.
#[derive(Debug, Parser)]
#[command(name = "vlcsim", version)]
struct Cli {
    /// Experiment config (TOML); defaults to the built-in reference scene.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the channel matrix as CSV.
    Channel {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit LED polynomial coefficients to an I-V table.
    FitNonlinearity {
        /// CSV of `volts, amps`; defaults to the built-in table.
        #[arg(long)]
        iv: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the SER sweep and write the results as CSV.
    SerSweep {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record measured wall times instead of zeros.
        #[arg(long)]
        timing: bool,
    },
    /// Dump pre-decision soft values as CSV.
    Constellation {
        #[arg(long, default_value = "ELM")]
        receiver: String,
        #[arg(long, default_value_t = 45.0)]
        snr: f64,
        #[arg(long, default_value_t = 2000)]
        symbols: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiplication counts of the dense and circulant hidden layers.
    Complexity {
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long, default_value_t = 64)]
        inputs: usize,
        #[arg(long)]
        csv: bool,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Channel { out } => emit(out, &load_config(cli)?.channel()?.to_csv()),
        Command::FitNonlinearity { iv, order, out } => {
            let text = match iv {
                Some(path) => std::fs::read_to_string(path)?,
                None => DEFAULT_IV_TABLE.to_string(),
            };
            let model = fit_polynomial_iv(&parse_iv_csv(&text)?, *order)?;
            emit(out, &model.to_text())
        }
        Command::SerSweep { out, timing } => {
            let report = run_ser_sweep(&load_config(cli)?)?;
            for f in &report.failures {
                eprintln!(
                    "vlcsim: {} failed at {} dB: {}",
                    f.receiver, f.snr_db, f.message
                );
            }
            emit(out, &report.to_csv(*timing))
        }
        Command::Constellation {
            receiver,
            snr,
            symbols,
            out,
        } => {
            let kind = ReceiverKind::from_name(receiver)?;
            let dump = dump_constellation(&load_config(cli)?, kind, *snr, *symbols)?;
            emit(out, &dump.to_csv())
        }
        Command::Complexity {
            hidden,
            inputs,
            csv,
        } => {
            let report = complexity_report(*hidden, *inputs)?;
            let text = if *csv {
                report.to_csv()
            } else {
                report.to_table()
            };
            emit(&None, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vlcsim: {e}");
            ExitCode::from(1)
        }
    }
}
