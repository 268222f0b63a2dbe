use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rfpk_cli::experiments::{
    run_decay, run_kernel_check, run_mc_compare, run_newtonian_limit, run_rates, run_solve, write_decay,
    write_kernel_check, write_mc_compare, write_newtonian_limit, write_rate_report, write_solve,
};
use rfpk_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "rfpk", version, about = "Relativistic Fokker-Planck experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV output.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override a configuration value, e.g. `--set params.theta=4`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Trend to equilibrium with per-step diagnostics.
    Solve,
    /// Relativistic against classical solutions over a sweep of c.
    NewtonianLimit,
    /// Fitted decay rates against the log-Sobolev constant and spectral gap.
    Decay,
    /// Log-Sobolev, curvature and Wang-criterion report.
    Rates,
    /// Calibration and properties of the classical Green function.
    KernelCheck,
    /// Finite-volume solver against the particle ensemble.
    McCompare,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RFPK_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("RFPK_THREADS must be a nonnegative integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    configure_threads()?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path, &cli.overrides)?;
    let dir = &cli.out;
    match cli.command {
        Command::Solve => write_solve(&run_solve(&cfg)?, dir),
        Command::NewtonianLimit => {
            let out = run_newtonian_limit(&cfg)?;
            eprintln!("log-log slope of sup L1 distance against c: {:.4}", out.slope);
            write_newtonian_limit(&out, dir)
        }
        Command::Decay => {
            let out = run_decay(&cfg)?;
            let files = write_decay(&out, dir)?;
            for c in &out.checks {
                eprintln!(
                    "{}: measured {:.6} reference {:.6} {}",
                    c.name,
                    c.measured,
                    c.reference,
                    if c.pass { "pass" } else { "FAIL" }
                );
            }
            if !out.all_pass() {
                return Err(CliError::Fit("measured decay rates fall below their bounds".into()));
            }
            Ok(files)
        }
        Command::Rates => Ok(vec![write_rate_report(&run_rates(&cfg)?, dir, "rates.csv")?]),
        Command::KernelCheck => {
            let out = run_kernel_check(&cfg)?;
            let files = write_kernel_check(&out, dir)?;
            for c in &out.checks {
                eprintln!("{}: {:.3e} {}", c.property, c.value, if c.pass { "pass" } else { "FAIL" });
            }
            Ok(files)
        }
        Command::McCompare => write_mc_compare(&run_mc_compare(&cfg)?, dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
