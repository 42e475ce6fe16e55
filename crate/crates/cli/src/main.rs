//! Experiment runner: reproducible generation, training, evaluation, and
//! verification commands over the weak-supervision library.
//!
//! Exit codes are a stable contract: 0 success, 1 runtime failure (with a
//! JSON error object on stderr), 2 usage errors.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "tuplerisk",
    version,
    about = "Train and audit binary classifiers from N-tuple weak supervision plus unlabeled data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Master seed; every random stream derives from it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output artifacts
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario kind: comp | sim | mix | not-all-neg | custom
    #[arg(long)]
    pub scenario: Option<String>,
    /// Tuple size N
    #[arg(long)]
    pub n: Option<usize>,
    /// Positive class prior tau_+
    #[arg(long)]
    pub tau: Option<f64>,
    /// Custom subset file (header N=<int>, one vector per line)
    #[arg(long)]
    pub subset_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DataModelArgs {
    /// Feature dimension of the synthetic Gaussians
    #[arg(long)]
    pub dim: Option<usize>,
    /// Positive class mean (scalar or comma-separated per-dimension list)
    #[arg(long, allow_hyphen_values = true)]
    pub mean_pos: Option<String>,
    /// Negative class mean
    #[arg(long, allow_hyphen_values = true)]
    pub mean_neg: Option<String>,
    /// Shared diagonal standard deviation
    #[arg(long)]
    pub stdev: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct TrainFlagArgs {
    /// Loss: sigmoid | logistic | double_hinge
    #[arg(long)]
    pub loss: Option<String>,
    /// Risk correction: none | relu | abs | generalized
    #[arg(long)]
    pub correction: Option<String>,
    /// Slope k of the generalized correction's negative branch
    #[arg(long)]
    pub correction_k: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_tuples: Option<usize>,
    #[arg(long)]
    pub batch_unlabeled: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Model architecture: linear | mlp
    #[arg(long)]
    pub arch: Option<String>,
    /// Hidden width for the mlp architecture
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Estimator form: general | symmetric
    #[arg(long)]
    pub estimator: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check closed-form coefficients against enumeration on a grid
    VerifyCoeffs(commands::verify_coeffs::VerifyCoeffsArgs),
    /// Generate synthetic tuple and unlabeled datasets
    Gen(commands::gen::GenArgs),
    /// Train a scorer on weak data by corrected risk minimization
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint on labeled points
    Eval(commands::eval::EvalArgs),
    /// Statistical check that the weak risk is centered on supervised risk
    Unbiasedness(commands::unbiasedness::UnbiasednessArgs),
    /// Finite-sample excess-risk bound values
    Bounds(commands::bounds::BoundsArgs),
    /// Excess zero-one risk trend over training sample sizes
    Curve(commands::curve::CurveArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::VerifyCoeffs(args) => commands::verify_coeffs::run(args),
        Command::Gen(args) => commands::gen::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Unbiasedness(args) => commands::unbiasedness::run(args),
        Command::Bounds(args) => commands::bounds::run(args),
        Command::Curve(args) => commands::curve::run(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            let msg = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
