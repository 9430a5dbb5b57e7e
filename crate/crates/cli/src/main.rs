use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tradenet::experiment::output::OutputLock;
use tradenet::experiment::{
    cmd_bootstrap, cmd_compare, cmd_generate, cmd_reproduce, cmd_solve, cmd_train, ExperimentConfig, Preset,
};
use tradenet::{Error, Execution};

#[derive(Parser, Debug)]
#[command(name = "tradenet", version, about = "Bargaining-network estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Embedded preset: dense, sparse or core-periphery.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides `outputs` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a market and write graph, truth, observed prices and summary stats.
    Generate,
    /// Solve the equilibrium of a generated market to tolerance.
    Solve,
    /// Fit the structural model to observed prices.
    Train,
    /// Percentile-bootstrap intervals for the fitted coefficients.
    Bootstrap,
    /// Compare the structural fit with the OLS baselines.
    Compare,
    /// Run every stage and write a manifest.
    Reproduce {
        /// Preset to run (same as --preset).
        preset: Option<String>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) => EXIT_CONFIG,
        Error::Numeric(_) | Error::Diverged { .. } => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let positional = match &cli.command {
        Command::Reproduce { preset } => preset.as_deref(),
        _ => None,
    };
    let preset = match (positional, cli.preset.as_deref()) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("conflicting presets `{a}` and `{b}`")));
        }
        (Some(p), _) | (None, Some(p)) => Some(p.parse::<Preset>()?),
        (None, None) => None,
    };
    let mut cfg = match (&cli.config, preset) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --config or a preset, not both".into())),
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(p)) => ExperimentConfig::preset(p, 0),
        (None, None) => return Err(Error::Config("no experiment given: pass --config PATH or --preset NAME".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.outputs = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execution(jobs: Option<usize>) -> Result<Execution, Error> {
    match jobs {
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            log::warn!("built without the `parallel` feature; running sequentially");
            Ok(Execution::Sequential)
        }
        None if Execution::parallel_available() => Ok(Execution::Parallel),
        None => Ok(Execution::Sequential),
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = resolve_config(cli)?;
    let exec = execution(cli.jobs)?;
    let dir = cfg.outputs.as_path();
    let files = match &cli.command {
        Command::Reproduce { .. } => cmd_reproduce(&cfg, dir, exec)?.files,
        single => {
            let _lock = OutputLock::acquire(dir)?;
            match single {
                Command::Generate => cmd_generate(&cfg, dir, exec)?,
                Command::Solve => cmd_solve(&cfg, dir, exec)?,
                Command::Train => cmd_train(&cfg, dir, exec)?.files,
                Command::Bootstrap => cmd_bootstrap(&cfg, dir, exec)?.files,
                Command::Compare => cmd_compare(&cfg, dir, exec)?.files,
                Command::Reproduce { .. } => unreachable!("handled above"),
            }
        }
    };
    for f in files {
        println!("{}", f.display());
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
            ExitCode::from(exit_code(&e))
        }
    }
}
