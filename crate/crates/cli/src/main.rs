//! Command-line front end for spherical-cluster centers: dataset ingestion,
//! single solves, eta sweeps, solver comparisons and median reports.

mod commands;
mod ingest;
mod report;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "sccenter",
    version,
    about = "Compute spherical-cluster centers of a point set"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Input file: one point per row, numeric columns
    #[arg(long)]
    input: PathBuf,
    /// Column delimiter
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Skip the first non-empty row
    #[arg(long, default_value_t = false)]
    has_header: bool,
    /// Coordinate normalization applied after parsing
    #[arg(long, value_enum, default_value_t = ingest::Normalize::None)]
    normalize: ingest::Normalize,
    /// Master seed; per-component seeds derive from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Stationarity factor (scaled by 1 + the start gradient norm)
    #[arg(long, default_value_t = 1e-8)]
    tol_grad: f64,
    /// On-sphere classification band, relative to max(1, R_i^2)
    #[arg(long, default_value_t = 1e-9)]
    tol_sign: f64,
    /// Step cap; defaults to 10 n + 1000
    #[arg(long)]
    max_steps: Option<usize>,
    /// Start point: "mean", "random", or comma-separated coordinates
    #[arg(long, default_value = "mean")]
    start: String,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one (dataset, eta) instance and write a report
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// The variance fraction of the model
        #[arg(long)]
        eta: f64,
        /// Solvers to run (comma list of exact,bfgs,lbfgs,subgradient,brute)
        #[arg(long, default_value = "exact")]
        solvers: String,
        /// Write the structured report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-step trace table here
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the principal-projection table here
        #[arg(long)]
        projection: Option<PathBuf>,
    },
    /// Solve across an eta grid and emit one report row per eta
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Eta grid as start:stop:step
        #[arg(long, default_value = "0.1:0.9:0.1")]
        etas: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the delimited sweep table here
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Compare the exact solver against baselines (time and value ratios)
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "0.1:0.9:0.1")]
        etas: String,
        /// Baselines to compare against (comma list of bfgs,lbfgs,subgradient)
        #[arg(long, default_value = "bfgs,lbfgs")]
        solvers: String,
        /// Timed repetitions per (eta, solver) pair
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Report the mean, projection median and spherical-cluster centers
    Median {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "0.1:0.9:0.1")]
        etas: String,
        /// Number of sampled projection directions (default max(1000, 50 d))
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            input,
            solver,
            eta,
            solvers,
            out,
            trace,
            projection,
        } => commands::cmd_solve(&input, &solver, eta, &solvers, out, trace, projection),
        Command::Sweep {
            input,
            solver,
            etas,
            out,
            table,
        } => commands::cmd_sweep(&input, &solver, &etas, out, table),
        Command::Compare {
            input,
            solver,
            etas,
            solvers,
            repeats,
            out,
            table,
        } => commands::cmd_compare(&input, &solver, &etas, &solvers, repeats, out, table),
        Command::Median {
            input,
            solver,
            etas,
            directions,
            out,
        } => commands::cmd_median(&input, &solver, &etas, directions, out),
    };
    if let Err(err) = result {
        eprintln!("error[{}]: {}", err.category(), err);
        std::process::exit(err.exit_code());
    }
}
