//! `cigraph`: estimate conditional independence graphs from multivariate
//! time series, simulate benchmark data, and run benchmark sweeps.
//!
//! Exit codes: 0 success, 2 usage, 3 input format, 4 numeric failure,
//! 5 non-convergence (with `--strict`), 6 I/O, 7 window incompatible with
//! the series length. Set `CIGRAPH_THREADS` to cap the worker pool.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use cigraph::bench::{Method, Tuning};
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{BenchmarkArgs, EstimateArgs, Penalty, SimulateArgs, SolverFlags, Window};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "cigraph",
    version,
    about = "Sparse-group graphical modeling of time series in the frequency domain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a graph from an n × p CSV of observations.
    Estimate(EstimateCli),
    /// Simulate clustered VAR(3) data with its true graph.
    Simulate(SimulateCli),
    /// Monte-Carlo F1 comparison of the proposed method and the i.i.d. baseline.
    Benchmark(BenchmarkCli),
}

#[derive(Args)]
struct SolverCli {
    #[arg(long, default_value_t = 2.0)]
    rho0: f64,
    #[arg(long, default_value_t = 10.0)]
    mu: f64,
    #[arg(long, default_value_t = 1e-4)]
    tau_abs: f64,
    #[arg(long, default_value_t = 1e-4)]
    tau_rel: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

impl From<&SolverCli> for SolverFlags {
    fn from(s: &SolverCli) -> Self {
        SolverFlags {
            rho0: s.rho0,
            mu: s.mu,
            tau_abs: s.tau_abs,
            tau_rel: s.tau_rel,
            max_iter: s.max_iter,
        }
    }
}

#[derive(Args)]
struct EstimateCli {
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Smoothing window (odd).
    #[arg(long = "K", conflicts_with = "m", required_unless_present = "m")]
    k: Option<usize>,
    /// Number of frequencies; K becomes the largest odd window giving it.
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long, conflicts_with = "bic", required_unless_present = "bic")]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.1, conflicts_with = "bic")]
    alpha: f64,
    /// Choose λ and α by BIC.
    #[arg(long)]
    bic: bool,
    /// The first row is data, not column names.
    #[arg(long)]
    no_header: bool,
    /// Exit with code 5 if the solver does not converge.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    solver: SolverCli,
}

#[derive(Args)]
struct SimulateCli {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    communities: usize,
    #[arg(long, default_value_t = 8)]
    community_size: usize,
    /// Total generated length; the first 100 samples are discarded.
    #[arg(long)]
    n: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Proposed,
    Iid,
}

#[derive(Clone, Copy, ValueEnum)]
enum TuningArg {
    Oracle,
    Bic,
}

#[derive(Args)]
struct BenchmarkCli {
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [512usize, 1024])]
    n_list: Vec<usize>,
    #[arg(long = "M", default_value_t = 4)]
    m: usize,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [MethodArg::Proposed, MethodArg::Iid])]
    methods: Vec<MethodArg>,
    /// `oracle` maximizes F1 over the grid; `bic` needs no ground truth.
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [TuningArg::Oracle])]
    tuning: Vec<TuningArg>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    communities: usize,
    #[arg(long, default_value_t = 8)]
    community_size: usize,
    /// Summary CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run CSV path.
    #[arg(long)]
    runs_out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverCli,
}

impl std::fmt::Display for MethodArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

impl std::fmt::Display for TuningArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("CIGRAPH_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::usage(format!(
                "CIGRAPH_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Estimate(a) => {
            let args = EstimateArgs {
                input: a.input,
                out: a.out,
                window: match (a.k, a.m) {
                    (Some(k), _) => Window::K(k),
                    (None, Some(m)) => Window::M(m),
                    (None, None) => unreachable!("clap requires one of --K / --M"),
                },
                penalty: match a.lambda {
                    Some(lambda) if !a.bic => Penalty::Fixed {
                        lambda,
                        alpha: a.alpha,
                    },
                    _ => Penalty::Bic,
                },
                has_header: !a.no_header,
                strict: a.strict,
                solver: (&a.solver).into(),
            };
            let hash = commands::estimate(&args)?;
            commands::print_done("estimate", &args.out, &hash);
        }
        Command::Simulate(a) => {
            let args = SimulateArgs {
                seed: a.seed,
                communities: a.communities,
                community_size: a.community_size,
                n: a.n,
                out: a.out,
            };
            let hash = commands::simulate_cmd(&args)?;
            commands::print_done("simulate", &args.out, &hash);
        }
        Command::Benchmark(a) => {
            let args = BenchmarkArgs {
                runs: a.runs,
                n_list: a.n_list,
                m: a.m,
                methods: a
                    .methods
                    .iter()
                    .map(|m| match m {
                        MethodArg::Proposed => Method::Proposed,
                        MethodArg::Iid => Method::Iid,
                    })
                    .collect(),
                tunings: a
                    .tuning
                    .iter()
                    .map(|t| match t {
                        TuningArg::Oracle => Tuning::Oracle,
                        TuningArg::Bic => Tuning::Bic,
                    })
                    .collect(),
                seed: a.seed,
                communities: a.communities,
                community_size: a.community_size,
                out: a.out,
                runs_out: a.runs_out,
                solver: (&a.solver).into(),
            };
            if args.runs == 0 || args.n_list.is_empty() {
                return Err(CliError::usage("--runs and --n-list must be non-empty"));
            }
            commands::benchmark(&args)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
