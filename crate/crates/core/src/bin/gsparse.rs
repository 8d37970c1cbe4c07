use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gsparse::distributions::{verify_cl_in_cg, verify_laplace_identity, ScalarDistribution};
use gsparse::experiments::{env_seed, read_matrix, read_vector, rows_to_csv, run_sweep, write_json, SweepConfig};
use gsparse::nsp::{check_nsp, default_radii, NspQuery, Sampling};
use gsparse::regularizers::{Penalty, RegularizerSpec};
use gsparse::solvers::{g_irls, GirlsConfig, SensingProblem};
use gsparse::sparsity::sparsity_report;
use gsparse::{Error, Result};

#[derive(Parser)]
#[command(name = "gsparse", version, about = "Generalized sparse recovery toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run G-IRLS on A c = y.
    Solve(SolveArgs),
    /// Tail mass and membership of a vector.
    Sparsity(SparsityArgs),
    /// Null space property checks.
    Nsp {
        #[command(subcommand)]
        command: NspCommand,
    },
    /// Regularizer evaluation.
    Reg {
        #[command(subcommand)]
        command: RegCommand,
    },
    /// Monte Carlo checks of distribution identities.
    Dist {
        #[command(subcommand)]
        command: DistCommand,
    },
    /// Recovery-rate sweep written as CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    #[arg(long = "K")]
    k: usize,
    #[arg(long, default_value_t = 1e-9)]
    eps_bar: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    spd_jitter: f64,
    /// Use the updated smoothing parameter in the weight step.
    #[arg(long)]
    updated_eps_weights: bool,
    /// Write the per-iteration trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Result file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SparsityArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    x: PathBuf,
    #[arg(long = "K")]
    k: usize,
    #[arg(long)]
    eps: f64,
}

#[derive(Subcommand)]
enum NspCommand {
    Check(NspCheckArgs),
}

#[derive(Args)]
struct NspCheckArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    #[arg(long = "K")]
    k: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated radii; a log grid from 1e-2 to 1e2 by default.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Also scan a dense grid with this many points per kernel coordinate.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Subcommand)]
enum RegCommand {
    Eval(RegEvalArgs),
}

#[derive(Args)]
struct RegEvalArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    x: PathBuf,
}

#[derive(Subcommand)]
enum DistCommand {
    Verify(DistVerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Identity {
    /// Rayleigh times Gaussian is Laplace.
    Laplace,
    /// A compound Laplacian is compound Gaussian.
    ClCg,
}

#[derive(Args)]
struct DistVerifyArgs {
    #[arg(long, value_enum)]
    identity: Identity,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Mixing atoms for `cl-cg`.
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    atoms: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    weights: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn seed_or_env(flag: Option<u64>, fallback: u64) -> Result<u64> {
    match flag {
        Some(s) => Ok(s),
        None => Ok(env_seed()?.unwrap_or(fallback)),
    }
}

fn load_regularizer(path: &Path, dim: usize) -> Result<gsparse::regularizers::Regularizer> {
    RegularizerSpec::from_path(path)?.build_with_dim(Some(dim))
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    c_bar: &'a [f64],
    iterations: usize,
    eps_final: f64,
    termination: gsparse::solvers::Termination,
    feasibility_residual: f64,
}

fn solve(args: SolveArgs) -> Result<()> {
    let a = read_matrix(&args.matrix)?;
    let y = read_vector(&args.y)?;
    let problem = SensingProblem::new(a, y)?;
    let reg = load_regularizer(&args.spec, problem.n())?;
    let config = GirlsConfig {
        eps0: args.eps0,
        spd_jitter: args.spd_jitter,
        record_trace: args.trace.is_some(),
        weight_epsilon: if args.updated_eps_weights {
            gsparse::solvers::WeightEpsilon::Updated
        } else {
            gsparse::solvers::WeightEpsilon::Current
        },
        ..GirlsConfig::new(args.k, args.eps_bar, args.max_iter)
    };
    let result = g_irls(&problem, &reg, &config)?;
    if let (Some(path), Some(trace)) = (&args.trace, &result.trace) {
        write_json(path, trace)?;
    }
    let out = SolveOutput {
        c_bar: &result.c_bar,
        iterations: result.iterations,
        eps_final: result.eps_final,
        termination: result.termination,
        feasibility_residual: result.feasibility_residual,
    };
    match &args.out {
        Some(path) => write_json(path, &out),
        None => print_json(&out),
    }
}

fn sparsity(args: SparsityArgs) -> Result<()> {
    let x = read_vector(&args.x)?;
    let reg = load_regularizer(&args.spec, x.len())?;
    print_json(&sparsity_report(&reg, x.as_slice(), args.k, args.eps)?)
}

fn nsp_check(args: NspCheckArgs) -> Result<()> {
    let a = read_matrix(&args.matrix)?;
    let reg = load_regularizer(&args.spec, a.ncols())?;
    let sampling = Sampling {
        count: args.samples,
        radii: args.radii.unwrap_or_else(default_radii),
        seed: seed_or_env(args.seed, 0)?,
        grid_points: args.grid_points,
    };
    let query = NspQuery {
        k: args.k,
        gamma: args.gamma,
        delta: args.delta,
    };
    print_json(&check_nsp(&a, &reg, &query, &sampling)?)
}

#[derive(Serialize)]
struct RegOutput {
    value: f64,
    components: Vec<f64>,
}

fn reg_eval(args: RegEvalArgs) -> Result<()> {
    let x = read_vector(&args.x)?;
    let reg = load_regularizer(&args.spec, x.len())?;
    let components = reg.components(x.as_slice())?;
    print_json(&RegOutput {
        value: components.iter().sum(),
        components,
    })
}

fn dist_verify(args: DistVerifyArgs) -> Result<()> {
    let seed = seed_or_env(args.seed, 0)?;
    let report = match args.identity {
        Identity::Laplace => verify_laplace_identity(args.sigma, args.lambda, args.n, seed)?,
        Identity::ClCg => {
            let mixing = ScalarDistribution::discrete_mixing(args.atoms, args.weights)?;
            verify_cl_in_cg(&mixing, args.sigma, args.lambda, args.n, seed)?
        }
    };
    print_json(&report)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = SweepConfig::load(&args.config)?;
    if let Some(seed) = env_seed()? {
        config.base_seed = seed;
    }
    let csv = rows_to_csv(&run_sweep(&config)?);
    match &args.out {
        Some(path) => Ok(std::fs::write(path, csv)?),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Sparsity(a) => sparsity(a),
        Command::Nsp {
            command: NspCommand::Check(a),
        } => nsp_check(a),
        Command::Reg {
            command: RegCommand::Eval(a),
        } => reg_eval(a),
        Command::Dist {
            command: DistCommand::Verify(a),
        } => dist_verify(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
