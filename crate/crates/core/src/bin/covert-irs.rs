//! `covert-irs`: run sweeps, emit plot-ready curves, or self-validate.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covert_irs::cli::config::{ConfigDocument, Format, Overrides};
use covert_irs::cli::validate::{run_suites, Faults, Level};
use covert_irs::cli::{execute, summary_lines, write_curves, write_run, CliError};

const THREADS_ENV: &str = "COVERT_IRS_THREADS";

#[derive(Parser)]
#[command(name = "covert-irs", version, about = "IRS-assisted covert communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the configured scenario with and without the IRS; one file per series.
    Run(RunArgs),
    /// Emit a long-format table covering every configured series.
    Curves(RunArgs),
    /// Run the oracle and invariant suites.
    Validate {
        #[arg(value_enum, default_value = "fast")]
        level: Level,
        /// Perturb a routine under test (`ei`) to exercise failure reporting.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Disable the IRS in every series.
    #[arg(long)]
    no_irs: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            realizations: self.realizations,
            out: self.out.clone(),
            format: self.format,
            no_irs: self.no_irs,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| CliError::Config {
            key: THREADS_ENV.into(),
            reason: format!("expected a non-negative integer, got {v:?}"),
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Output(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run(args) => {
            let plan = ConfigDocument::load(&args.config)?.run_plan(&args.overrides())?;
            let results = execute(&plan)?;
            for line in summary_lines(&results) {
                println!("{line}");
            }
            for path in write_run(&plan, &results)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Curves(args) => {
            let plan = ConfigDocument::load(&args.config)?.curves_plan(&args.overrides())?;
            let results = execute(&plan)?;
            for line in summary_lines(&results) {
                println!("{line}");
            }
            println!("wrote {}", write_curves(&plan, &results)?.display());
        }
        Command::Validate { level, inject_fault } => {
            let faults = match inject_fault.as_deref() {
                None => Faults::default(),
                Some("ei") => Faults { ei_relative: 1e-3 },
                Some(other) => {
                    return Err(CliError::Config {
                        key: "--inject-fault".into(),
                        reason: format!("unknown fault {other:?}"),
                    })
                }
            };
            let reports = run_suites(level, faults);
            for r in &reports {
                println!("{r}");
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if !failed.is_empty() {
                return Err(CliError::Validation(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
