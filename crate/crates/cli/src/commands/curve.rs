//! Excess-risk trend over training sample sizes.

use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use tuplerisk_core::data::child_seed;
use tuplerisk_core::eval::excess_risk_curve;

use crate::commands::train::{build_arch, resolve_train_config};
use crate::config::{
    build_data_model, build_scenario, parse_f64_list, parse_usize_list, pick,
    DataModelArgs as ModelParams, FileConfig,
};
use crate::manifest::{write_manifest, Manifest};
use crate::{CommonArgs, DataModelArgs, ScenarioArgs, TrainFlagArgs};

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub model: DataModelArgs,
    #[command(flatten)]
    pub train: TrainFlagArgs,
    /// Comma-separated training sizes (tuples = unlabeled = size)
    #[arg(long)]
    pub sizes: Option<String>,
    /// Independent seeds per size
    #[arg(long)]
    pub num_seeds: Option<usize>,
    /// Shared labeled test set size
    #[arg(long)]
    pub test: Option<usize>,
}

pub fn run(args: CurveArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, 0);
    let scenario_name = pick(
        args.scenario.scenario.clone(),
        file.scenario.clone(),
        "sim".into(),
    );
    let n = pick(args.scenario.n, file.n, 3);
    let tau = pick(args.scenario.tau, file.tau, 0.6);
    let subset = args.scenario.subset_file.clone().or(file.subset_file.clone());
    let spec = build_scenario(&scenario_name, n, subset.as_deref())?;

    let dim = pick(args.model.dim, file.dim, 1);
    let flag_vec = |flag: &Option<String>| flag.as_deref().map(parse_f64_list).transpose();
    let data_model = build_data_model(
        ModelParams {
            dim,
            mean_pos: pick(flag_vec(&args.model.mean_pos)?, file.mean_pos.clone(), vec![1.0]),
            mean_neg: pick(flag_vec(&args.model.mean_neg)?, file.mean_neg.clone(), vec![-1.0]),
            stdev: pick(flag_vec(&args.model.stdev)?, file.stdev.clone(), vec![1.0]),
        },
        tau,
    )?;

    let sizes = pick(
        args.sizes.as_deref().map(parse_usize_list).transpose()?,
        file.sizes.clone(),
        vec![100, 1000, 10_000],
    );
    let num_seeds = pick(args.num_seeds, file.num_seeds, 5);
    let seeds: Vec<u64> = (0..num_seeds)
        .map(|k| child_seed(seed, &format!("curve-seed-{k}")))
        .collect();

    let mut rt = resolve_train_config(&args.train, &file, seed)?;
    rt.cfg.seed = seed; // per-run seeds are derived inside the curve
    let arch = build_arch(&rt.arch_name, dim, rt.hidden)?;
    let test_points = pick(args.test, file.test, 10_000);

    let rows = excess_risk_curve(&spec, &data_model, &sizes, &seeds, arch, &rt.cfg, test_points)?;

    let mut csv = String::from("n,median_excess_risk,bayes_risk\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.n, row.median_excess_risk, row.bayes_risk
        ));
    }
    print!("{csv}");

    if let Some(out) = &args.common.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("curve.csv"), &csv)?;
        write_manifest(
            out,
            &Manifest::new(
                "curve",
                seed,
                serde_json::json!({
                    "scenario": scenario_name,
                    "n": n,
                    "tau": tau,
                    "sizes": sizes,
                    "num_seeds": num_seeds,
                    "test": test_points,
                    "train": rt.cfg,
                }),
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
