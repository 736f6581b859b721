use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracpq_cli::experiment as exp;
use fracpq_cli::{ExperimentConfig, Result};
use log::{error, info};

#[derive(Parser, Debug)]
#[command(version, about = "Forward solves and coefficient reconstruction for fractional reaction-diffusion")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed (overrides `noise.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time-step the first run at the configured coefficients.
    Forward,
    /// Steady state of the first run.
    Steady,
    /// Reconstruct p and q from synthetic observations.
    Invert,
    /// Repeat the reconstruction over a parameter range.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
    },
    /// Empirical contraction ratio of the fixed-point map around the truth.
    ProbeContraction,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepParam {
    Alpha,
    Noise,
}

fn run(args: Args) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    if let Some(seed) = args.seed {
        cfg.noise.seed = seed;
    }
    let dir = cfg.output.dir.clone();

    match args.command {
        Command::Forward => exp::write_forward(&exp::forward(&cfg)?, &dir)?,
        Command::Steady => exp::write_steady(&exp::steady(&cfg)?, &dir)?,
        Command::Invert => {
            let res = exp::invert(&cfg)?;
            exp::write_invert(&res, &dir)?;
            if let Some(last) = res.reconstruction.last() {
                info!(
                    "{} iterates; rel_err_p = {:e}, rel_err_q = {:e}",
                    last.k,
                    last.rel_err_p.unwrap_or(f64::NAN),
                    last.rel_err_q.unwrap_or(f64::NAN)
                );
            }
            exp::check_stop(&res.reconstruction.stop)?;
        }
        Command::Sweep { param: SweepParam::Alpha } => {
            let rows = exp::sweep_alpha(&cfg)?;
            exp::write_sweep_alpha(&rows, &dir)?;
            for row in &rows {
                exp::check_stop(&row.stop)?;
            }
        }
        Command::Sweep { param: SweepParam::Noise } => {
            let sweep = exp::sweep_noise(&cfg)?;
            exp::write_sweep_noise(&sweep, &dir)?;
            info!("noise slope p = {:?}, q = {:?}", sweep.slope_p, sweep.slope_q);
        }
        Command::ProbeContraction => {
            let report = exp::probe(&cfg)?;
            exp::write_probe(&report, &dir)?;
            info!("worst ratio {:?}, median {:?}", report.worst(), report.median());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
