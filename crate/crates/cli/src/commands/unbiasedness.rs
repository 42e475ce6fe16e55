//! Monte-Carlo check that the weak risk is centered on the supervised risk.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use tuplerisk_core::eval::unbiasedness_report;
use tuplerisk_core::train::{Checkpoint, Model, ModelArch};

use crate::config::{
    build_data_model, build_scenario, parse_f64_list, parse_loss, pick,
    DataModelArgs as ModelParams, FileConfig,
};
use crate::manifest::{write_manifest, Manifest};
use crate::{CommonArgs, DataModelArgs, ScenarioArgs};

#[derive(Args, Debug)]
pub struct UnbiasednessArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub model: DataModelArgs,
    /// Tuples per repeat
    #[arg(long)]
    pub tuples: Option<usize>,
    /// Unlabeled points per repeat
    #[arg(long)]
    pub unlabeled: Option<usize>,
    /// Number of independent resamples
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Labeled Monte-Carlo sample for the supervised reference
    #[arg(long)]
    pub mc_points: Option<usize>,
    /// Loss to evaluate under
    #[arg(long)]
    pub loss: Option<String>,
    /// Fixed scorer checkpoint (default: unit-weight linear model)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

pub fn run(args: UnbiasednessArgs) -> Result<ExitCode> {
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

    // the reference setting is 1-D Gaussians at +/-1
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

    let model = match &args.checkpoint {
        Some(path) => Checkpoint::load(path)?.to_model()?,
        None => {
            let mut params = vec![1.0; dim];
            params.push(0.0);
            Model::from_params(ModelArch::Linear { dim }, params)?
        }
    };

    let loss = parse_loss(&pick(args.loss.clone(), file.loss.clone(), "sigmoid".into()))?;
    let report = unbiasedness_report(
        &model,
        &spec,
        &data_model,
        pick(args.tuples, file.tuples, 10_000),
        pick(args.unlabeled, file.unlabeled, 10_000),
        pick(args.repeats, file.repeats, 50),
        pick(args.mc_points, file.mc_points, 1_000_000),
        loss,
        seed,
    )?;

    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = &args.common.out {
        std::fs::create_dir_all(out)?;
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(out.join("unbiasedness.json"), text)?;
        std::fs::write(
            out.join("unbiasedness.csv"),
            format!(
                "scenario,n,tau,mean_weak_risk,supervised_mc_risk,weak_std_error,mc_std_error,z_score\n{},{},{},{},{},{},{},{}\n",
                scenario_name, n, tau,
                report.mean_weak_risk,
                report.supervised_mc_risk,
                report.weak_std_error,
                report.mc_std_error,
                report.z_score,
            ),
        )?;
        write_manifest(
            out,
            &Manifest::new(
                "unbiasedness",
                seed,
                serde_json::json!({
                    "scenario": scenario_name,
                    "n": n,
                    "tau": tau,
                    "loss": loss.name(),
                }),
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
