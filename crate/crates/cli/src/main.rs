//! `papr-sim`: seeded, config-driven experiment runner for the OFDM PAPR
//! reduction lab. Subcommands: ccdf, ber, denoise-eval, train-nn, compare.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "papr-sim",
    about = "Link-level OFDM PAPR reduction experiments with reproducible CSV output",
    after_help = "Exit codes: 0 success, 1 usage/config error, 2 runtime error, 3 non-convergence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Empirical PAPR exceedance curves per technique (CSV) and the 2% operating points (stdout)
    Ccdf(CommonArgs),
    /// Measured BER per technique over an SNR grid plus the union-bound column (CSV)
    Ber(CommonArgs),
    /// Wavelet denoising quality sweep over (family, levels, input SNR) (CSV)
    DenoiseEval(CommonArgs),
    /// Train the envelope reducer on imitation data; writes the model file and loss history
    TrainNn(CommonArgs),
    /// Comparison table: PAPR at 2% and relative reduction per technique (CSV)
    Compare(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Plain-text config file (key = value lines, # comments)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed of every random stream
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count (symbols; per SNR point for `ber`, training symbols for `train-nn`)
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path (each command has a documented default)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated technique list: none,sat,clip,slm,pts,nn
    #[arg(long)]
    technique: Option<String>,
    /// Adaptivity constant of the peak-detection threshold
    #[arg(long)]
    k: Option<f64>,
    /// Peak replacement filter: simple|exponential|weighted
    #[arg(long)]
    filter: Option<String>,
    /// Worker threads (results are identical for any value)
    #[arg(long)]
    threads: Option<usize>,
    /// Extra `key=value` overrides for any config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommonArgs {
    /// Resolution order: defaults, then file, then --set pairs, then the
    /// named flags.
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path).map_err(CliError::usage)?;
        }
        for pair in &self.set {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got '{pair}'")))?;
            cfg.apply(key.trim(), value.trim()).map_err(CliError::usage)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = Some(trials);
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(list) = &self.technique {
            cfg.apply("techniques", list).map_err(CliError::usage)?;
        }
        if let Some(k) = self.k {
            cfg.apply("k", &k.to_string()).map_err(CliError::usage)?;
        }
        if let Some(filter) = &self.filter {
            cfg.apply("filter", filter).map_err(CliError::usage)?;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    return Ok(());
                }
                _ => return Err(CliError::usage(err.to_string())),
            }
        }
    };
    let mut stdout = std::io::stdout();
    match &cli.command {
        Command::Ccdf(args) => commands::cmd_ccdf(&args.resolve()?, &mut stdout),
        Command::Ber(args) => commands::cmd_ber(&args.resolve()?, &mut stdout),
        Command::DenoiseEval(args) => commands::cmd_denoise_eval(&args.resolve()?, &mut stdout),
        Command::TrainNn(args) => commands::cmd_train_nn(&args.resolve()?, &mut stdout),
        Command::Compare(args) => commands::cmd_compare(&args.resolve()?, &mut stdout),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("papr-sim: {err}");
            ExitCode::from(err.exit_code as u8)
        }
    }
}
