//! `hdtomo`: maximum-likelihood homodyne tomography from the command line.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
//! On failure the last line on standard error is a JSON error record.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdtomo_core::io::fmt_f64;
use hdtomo_core::{ErrorClass, TomoError};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "hdtomo", version, about = "Maximum-likelihood homodyne tomography")]
struct Cli {
    /// Worker threads (default: all cores). `--threads 1` is bit-reproducible.
    #[arg(long, global = true, env = "HDTOMO_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximum-likelihood density matrix from quadrature data.
    Reconstruct {
        #[arg(long)]
        data: PathBuf,
        /// TOML run configuration; every key has a default.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Density-matrix output; diagnostics go to `<out>.diag.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic quadrature data from a known state.
    Simulate {
        /// vacuum | fock:N | coherent:RE,IM | superposition:C0RE,C0IM,C1RE,C1IM | density file
        #[arg(long)]
        state: String,
        /// TOML simulation plan.
        #[arg(long)]
        plan: PathBuf,
        /// Supplies n_max for named states.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wigner function of a stored density matrix.
    Wigner {
        #[arg(long)]
        rho: PathBuf,
        /// x_min,x_max,nx,p_min,p_max,np
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filtered back-projection of quadrature data.
    Radon {
        #[arg(long)]
        data: PathBuf,
        /// Filter cutoff (default from config, 6.3).
        #[arg(long)]
        cutoff: Option<f64>,
        /// x_min,x_max,nx,p_min,p_max,np (default from config).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parametric-bootstrap uncertainty of a reconstructed density matrix.
    Uncertainty {
        #[arg(long)]
        rho: PathBuf,
        /// TOML simulation plan for the replicas.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        replicas: Option<usize>,
        /// Reuse this dataset's phases (unless `redraw_phases` is set).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Log-likelihood of a density matrix given data.
    Likelihood {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(TomoError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn class(&self) -> (&'static str, u8) {
        match self {
            CliError::Usage(_) => ("usage", 1),
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => ("usage", 1),
                ErrorClass::Data => ("data", 2),
                ErrorClass::Numerical => ("numerical", 3),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    let (kind, code) = err.class();
    let message = err.message();
    eprintln!("error: {message}");
    eprintln!("{}", json!({ "error": { "kind": kind, "exit_code": code, "message": message } }));
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Reconstruct { data, config, out } => commands::reconstruct_cmd(&data, config.as_deref(), &out),
        Command::Simulate {
            state,
            plan,
            config,
            out,
        } => commands::simulate_cmd(&state, &plan, config.as_deref(), &out),
        Command::Wigner { rho, grid, out } => commands::wigner_cmd(&rho, &grid, &out),
        Command::Radon {
            data,
            cutoff,
            grid,
            config,
            out,
        } => commands::radon_cmd(&data, cutoff, grid.as_deref(), config.as_deref(), &out),
        Command::Uncertainty {
            rho,
            plan,
            replicas,
            data,
            config,
            out,
        } => commands::uncertainty_cmd(&rho, &plan, replicas, data.as_deref(), config.as_deref(), &out),
        Command::Likelihood { rho, data, config } => {
            let lnl = commands::likelihood_cmd(&rho, &data, config.as_deref())?;
            println!("{}", fmt_f64(lnl));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::usage(e.to_string().trim_end())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
