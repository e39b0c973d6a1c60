use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use shelab::commands::{self, RunOptions};
use shelab::config;
use shelab::Result;

#[derive(Parser)]
#[command(name = "shelab", version, about = "Fluctuation experiments for the stochastic heat equation in d >= 3")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config; omitted fields take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Reuse per-realization checkpoints from a previous run with the same config
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Effective variance and sigma_t^2 (theory_card.json)
    Theory,
    /// Variance scaling and normality across the eps ladder
    Fluctuations,
    /// Z_infinity draws, sigma_f and negative moments
    Polymer,
    /// Gaussian toy model for sigma_f
    Toy,
    /// Spatial covariance decay of f(u)
    Covdecay,
}

fn load<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        Some(p) => config::load(p),
        None => Ok(T::default()),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let opts = RunOptions {
        out: cli.out.clone(),
        workers: cli.workers,
        seed: cli.seed,
        resume: cli.resume,
    };
    match cli.command {
        Command::Theory => {
            let card = commands::run_theory(&load(&cli.config)?, &opts)?;
            println!("nu_eff^2 = {} +- {}", card.nu_eff_sq, card.se);
        }
        Command::Fluctuations => {
            let out = commands::run_fluctuations(&load(&cli.config)?, &opts)?;
            for r in &out.scaling[0] {
                println!("eps = {}: ratio {:.4} (n = {})", r.eps, r.ratio, r.n);
            }
        }
        Command::Polymer => {
            let out = commands::run_polymer(&load(&cli.config)?, &opts)?;
            println!("E[Z] = {} +- {}", out.summary.mean_z, out.summary.mean_z_se);
        }
        Command::Toy => {
            commands::run_toy(&load(&cli.config)?, &opts)?;
        }
        Command::Covdecay => {
            let report = commands::run_covdecay(&load(&cli.config)?, &opts)?;
            for fit in report.fits.iter().filter_map(|f| f.fit.as_ref().map(|x| (f.f, x))) {
                println!("{}: slope {:.3} +- {:.3}", fit.0, fit.1.slope, fit.1.slope_se);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
