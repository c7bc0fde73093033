use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::{parse_config, RunConfig, SolveMode};
use error::CliError;
use output::RunDir;

#[derive(Parser)]
#[command(name = "combustion-ns", version, about = "Numerical laboratory for 1D reacting compressible Navier-Stokes")]
struct Cli {
    /// JSON run configuration; defaults are used when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output root; the config's output_dir is resolved against it
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// write into exactly this directory instead of a timestamped one
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue sweep over the frequency grid
    Spectrum,
    /// Physical-space Green's functions at the configured times
    Greens,
    /// Fundamental solution of the variable-conductivity heat equation
    Kernel,
    /// Nonlinear solve by Picard iteration, the reference integrator, or both
    Solve {
        #[arg(long, value_enum)]
        mode: Option<SolveMode>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        snapshot_every: Option<f64>,
    },
    /// Norms, reactant ledger and decay fits of a trajectory
    Diag {
        /// run or trajectory directory written by `solve`; solves afresh when omitted
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// L1 stability probe over perturbation pairs
    Stability,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Greens => "greens",
            Command::Kernel => "kernel",
            Command::Solve { .. } => "solve",
            Command::Diag { .. } => "diag",
            Command::Stability => "stability",
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("COMBUSTION_NS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("COMBUSTION_NS_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    configure_threads()?;
    // diag on an earlier run reuses that run's configuration unless one is given
    let inherited = match (&cli.command, &cli.config) {
        (Command::Diag { run: Some(run) }, None) => {
            [run.join("config.json"), run.join("../config.json")].into_iter().find(|p| p.exists())
        }
        _ => None,
    };
    let mut cfg = match cli.config.as_ref().or(inherited.as_ref()) {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Command::Solve { mode, t_end, snapshot_every } = &cli.command {
        if let Some(m) = mode {
            cfg.solver.mode = *m;
        }
        if let Some(t) = t_end {
            if !(*t >= 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!("--t-end must be finite and >= 0, got {t}")));
            }
            cfg.solver.t_end = *t;
        }
        if let Some(e) = snapshot_every {
            if !(*e >= 0.0) {
                return Err(CliError::Usage(format!("--snapshot-every must be >= 0, got {e}")));
            }
            cfg.solver.snapshot_every = *e;
        }
    }
    let mut dir = RunDir::create(&cli.out, &cfg, cli.command.name(), cli.run_dir.as_deref())?;
    match &cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &mut dir)?,
        Command::Greens => commands::greens(&cfg, &mut dir)?,
        Command::Kernel => commands::kernel(&cfg, &mut dir)?,
        Command::Solve { .. } => commands::solve(&cfg, &mut dir)?,
        Command::Diag { run } => commands::diag(&cfg, run.as_deref(), &mut dir)?,
        Command::Stability => commands::stability(&cfg, &mut dir)?,
    }
    dir.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not failures
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
