//! Batch experiment driver. Exit codes: 0 success (verify: all PASS),
//! 1 verdict FAIL, 2 invalid configuration, 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use monodiss_cli::commands;
use monodiss_cli::config::ExperimentConfig;
use monodiss_core::Error;

#[derive(Parser)]
#[command(
    name = "monodiss",
    about = "Numerical laboratory for monotone dissipative reaction-diffusion systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for ensembles and sweeps (default: available cores)
    #[arg(long, global = true, env = "MONODISS_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the experiment config (JSON)
    #[arg(long, env = "MONODISS_CONFIG")]
    config: PathBuf,

    /// Base seed for all randomness (mandatory for stochastic runs unless
    /// the config carries one)
    #[arg(long, env = "MONODISS_SEED")]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, env = "MONODISS_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and emit its energy time series
    Simulate {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Monotone elliptic regularity study over a random ensemble
    Elliptic {
        #[command(flatten)]
        common: ConfigArgs,
        /// number of random right-hand sides
        #[arg(long, default_value_t = 50)]
        n_rhs: usize,
        /// Lebesgue exponent of the forcing bound (q > 2)
        #[arg(long, default_value_t = 2.2)]
        q: f64,
        /// admissibility parameter kappa
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Print the closed-form exponent table
    Exponents {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// auxiliary growth exponent for the smoothing formulas
        #[arg(long, default_value_t = 3.5)]
        p1: f64,
        /// growth exponent for the bootstrap (with --q)
        #[arg(long)]
        p: Option<f64>,
        /// integrability target for the bootstrap (> d/2)
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        kappa: f64,
        #[arg(long, default_value_t = 0.2)]
        r: f64,
        /// optional output directory for exponents.json
        #[arg(long, env = "MONODISS_OUT")]
        out: Option<PathBuf>,
    },
    /// Run verification presets (the acceptance criteria)
    Verify {
        /// preset name (repeatable); "all" or empty runs every preset
        #[arg(long, env = "MONODISS_PRESET")]
        preset: Vec<String>,
        #[arg(long, env = "MONODISS_SEED")]
        seed: Option<u64>,
        /// optional output directory for verdicts.json
        #[arg(long, env = "MONODISS_OUT")]
        out: Option<PathBuf>,
    },
    /// Absorbing set, snapshot cloud, box-counting dimension, attraction rate
    Attractor {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Cartesian parameter sweep, one output directory per point
    Sweep {
        #[command(flatten)]
        common: ConfigArgs,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn resolve_seed(flag: Option<u64>, config: Option<&ExperimentConfig>) -> Result<u64, Error> {
    flag.or(config.and_then(|c| c.seed)).ok_or_else(|| {
        Error::config("seed", "a seed is required: pass --seed, set MONODISS_SEED, or put \"seed\" in the config")
    })
}

fn run(cli: Cli) -> Result<i32, Error> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("workers", format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { common } => {
            let config = load_config(&common.config)?;
            let seed = resolve_seed(common.seed, Some(&config))?;
            commands::simulate(&config, seed, &common.out)?;
            Ok(0)
        }
        Command::Elliptic {
            common,
            n_rhs,
            q,
            kappa,
        } => {
            let config = load_config(&common.config)?;
            let seed = resolve_seed(common.seed, Some(&config))?;
            commands::elliptic(&config, seed, &common.out, n_rhs, q, kappa)?;
            Ok(0)
        }
        Command::Exponents {
            d,
            alpha,
            p1,
            p,
            q,
            kappa,
            r,
            out,
        } => {
            let text = commands::exponents(d, alpha, p1, p, q, kappa, r, out.as_deref())?;
            println!("{text}");
            Ok(0)
        }
        Command::Verify { preset, seed, out } => {
            let seed = seed.ok_or_else(|| {
                Error::config("seed", "--seed is mandatory for the stochastic verification suites")
            })?;
            let (all_passed, text) = commands::verify(&preset, seed, out.as_deref())?;
            println!("{text}");
            Ok(if all_passed { 0 } else { 1 })
        }
        Command::Attractor { common } => {
            let config = load_config(&common.config)?;
            let seed = resolve_seed(common.seed, Some(&config))?;
            commands::attractor(&config, seed, &common.out)?;
            Ok(0)
        }
        Command::Sweep { common } => {
            let config = load_config(&common.config)?;
            let seed = resolve_seed(common.seed, Some(&config))?;
            commands::sweep(&config, seed, &common.out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config { .. } | Error::Argument(_) | Error::Dimension(_) => 2,
                Error::SolverFailure { .. }
                | Error::Construction(_)
                | Error::Refusal(_)
                | Error::Internal(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}
