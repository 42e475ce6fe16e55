//! Checkpoint evaluation on a labeled point CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use tuplerisk_core::data::load_points_csv;
use tuplerisk_core::eval::{accuracy, zero_one_risk};
use tuplerisk_core::train::Checkpoint;

use crate::config::{pick, FileConfig};
use crate::manifest::{write_manifest, Manifest};
use crate::CommonArgs;

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Checkpoint JSON produced by train
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Labeled point CSV to evaluate on
    #[arg(long)]
    pub data: PathBuf,
    /// Optional supervised-oracle checkpoint for comparison
    #[arg(long)]
    pub oracle: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalReport {
    accuracy: f64,
    zero_one_risk: f64,
    oracle_accuracy: Option<f64>,
    accuracy_gap: Option<f64>,
    test_points: usize,
}

pub fn run(args: EvalArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, 0);

    let model = Checkpoint::load(&args.checkpoint)
        .context("loading checkpoint")?
        .to_model()?;
    let points = load_points_csv(&args.data).context("loading evaluation CSV")?;
    let pool = points.to_labeled()?;

    let acc = accuracy(&model, &pool)?;
    let zo = zero_one_risk(&model, &pool)?;
    let oracle_accuracy = match &args.oracle {
        Some(path) => Some(accuracy(
            &Checkpoint::load(path).context("loading oracle")?.to_model()?,
            &pool,
        )?),
        None => None,
    };
    let report = EvalReport {
        accuracy: acc,
        zero_one_risk: zo,
        oracle_accuracy,
        accuracy_gap: oracle_accuracy.map(|o| o - acc),
        test_points: pool.len(),
    };

    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = &args.common.out {
        std::fs::create_dir_all(out)?;
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(out.join("eval.json"), text)?;
        write_manifest(
            out,
            &Manifest::new(
                "eval",
                seed,
                serde_json::json!({
                    "checkpoint": args.checkpoint.display().to_string(),
                    "data": args.data.display().to_string(),
                    "oracle": args.oracle.as_ref().map(|p| p.display().to_string()),
                }),
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
