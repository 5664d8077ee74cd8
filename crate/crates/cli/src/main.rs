use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use petvia_cli::commands::{self, Report};
use petvia_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "petvia",
    version,
    about = "Petviashvili iteration for -u + Δu + |u|^(p-1) u = 0"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate to a solution; writes the solution, trace and summary.
    Solve,
    /// Refinement study against the exact 1D solution.
    Study {
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        resolutions: Vec<usize>,
    },
    /// Leading eigenvalues of the linearization at the converged state.
    Spectrum {
        #[arg(short, long, default_value_t = 3)]
        k: usize,
    },
    /// Radial excited state by slope matching.
    Excited {
        /// Root bracket `lo,hi`; the first sign change of the scan if omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bracket: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(short, long, default_value_t = 4)]
        k: usize,
    },
    /// Check the sequence inequalities and energy bounds along a run.
    Verify,
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&common.overrides)?;
    Ok(cfg)
}

fn print_report(report: &Report) {
    print!("{}", report.summary.render());
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Solve => print_report(&commands::solve(&cfg)?),
        Command::Study { resolutions } => print_report(&commands::study(&cfg, &resolutions)?.0),
        Command::Spectrum { k } => print_report(&commands::spectrum(&cfg, k)?.0),
        Command::Excited { bracket, tol, k } => {
            let bracket = match bracket.as_deref() {
                None => None,
                Some(&[lo, hi]) => Some((lo, hi)),
                Some(_) => return Err(CliError::Config("--bracket takes lo,hi".into())),
            };
            print_report(&commands::excited(&cfg, bracket, tol, k)?)
        }
        Command::Verify => {
            let report = commands::verify(&cfg)?;
            for c in &report.checks {
                println!("{} {}: {}", c.status.label(), c.name, c.detail);
            }
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
