//! Dataset generation: tuples, unlabeled points, and an optional labeled
//! test split, all from one master seed.

use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use tuplerisk_core::data::{
    child_seed, rng_from_seed, sample_labeled_pool, sample_tuples, sample_unlabeled,
    save_points_csv, save_tuples, PointSet,
};

use crate::config::{
    build_data_model, build_scenario, parse_f64_list, pick, DataModelArgs as ModelParams,
    FileConfig,
};
use crate::manifest::{write_manifest, Manifest};
use crate::{CommonArgs, DataModelArgs, ScenarioArgs};

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub model: DataModelArgs,
    /// Number of tuples to sample
    #[arg(long)]
    pub tuples: Option<usize>,
    /// Number of unlabeled points to sample
    #[arg(long)]
    pub unlabeled: Option<usize>,
    /// Labeled test points (0 skips the test split)
    #[arg(long)]
    pub test: Option<usize>,
}

/// Resolved generation parameters shared with `train`'s synthetic path.
pub struct Resolved {
    pub scenario: tuplerisk_core::ScenarioSpec,
    pub data_model: tuplerisk_core::data::DataModel,
    pub scenario_name: String,
    pub tau: f64,
    pub n_tuples: usize,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub seed: u64,
}

pub fn resolve(
    common: &CommonArgs,
    scenario: &ScenarioArgs,
    model: &DataModelArgs,
    tuples: Option<usize>,
    unlabeled: Option<usize>,
    test: Option<usize>,
    file: &FileConfig,
) -> Result<Resolved> {
    let seed = pick(common.seed, file.seed, 0);
    let scenario_name = pick(
        scenario.scenario.clone(),
        file.scenario.clone(),
        "sim".to_string(),
    );
    let n = pick(scenario.n, file.n, 3);
    let tau = pick(scenario.tau, file.tau, 0.7);
    let subset_file = scenario.subset_file.clone().or(file.subset_file.clone());
    let spec = build_scenario(&scenario_name, n, subset_file.as_deref())?;

    let dim = pick(model.dim, file.dim, 2);
    let flag_vec = |flag: &Option<String>| flag.as_deref().map(parse_f64_list).transpose();
    let params = ModelParams {
        dim,
        mean_pos: pick(flag_vec(&model.mean_pos)?, file.mean_pos.clone(), vec![1.5]),
        mean_neg: pick(flag_vec(&model.mean_neg)?, file.mean_neg.clone(), vec![-1.5]),
        stdev: pick(flag_vec(&model.stdev)?, file.stdev.clone(), vec![1.0]),
    };
    let data_model = build_data_model(params, tau)?;

    Ok(Resolved {
        scenario: spec,
        data_model,
        scenario_name,
        tau,
        n_tuples: pick(tuples, file.tuples, 2000),
        n_unlabeled: pick(unlabeled, file.unlabeled, 2000),
        n_test: pick(test, file.test, 2000),
        seed,
    })
}

pub fn params_json(r: &Resolved) -> serde_json::Value {
    serde_json::json!({
        "scenario": r.scenario_name,
        "n": r.scenario.n(),
        "tau": r.tau,
        "dim": r.data_model.dim,
        "mean_pos": r.data_model.mean_pos,
        "mean_neg": r.data_model.mean_neg,
        "stdev": r.data_model.stdev,
        "tuples": r.n_tuples,
        "unlabeled": r.n_unlabeled,
        "test": r.n_test,
    })
}

pub fn run(args: GenArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let r = resolve(
        &args.common,
        &args.scenario,
        &args.model,
        args.tuples,
        args.unlabeled,
        args.test,
        &file,
    )?;
    let out = args
        .common
        .out
        .clone()
        .ok_or_else(|| anyhow::anyhow!("--out is required for gen"))?;
    std::fs::create_dir_all(&out)?;

    let mut rng = rng_from_seed(child_seed(r.seed, "tuples"));
    let tuples = sample_tuples(&r.data_model, &r.scenario, r.n_tuples, &mut rng)?;
    save_tuples(out.join("tuples.csv"), &tuples)?;

    let mut rng = rng_from_seed(child_seed(r.seed, "unlabeled"));
    let unl = sample_unlabeled(&r.data_model, r.n_unlabeled, &mut rng)?;
    save_points_csv(out.join("unlabeled.csv"), &PointSet::from_unlabeled(&unl, false))?;
    save_points_csv(
        out.join("unlabeled.labels.csv"),
        &PointSet::from_unlabeled(&unl, true),
    )?;

    if r.n_test > 0 {
        let mut rng = rng_from_seed(child_seed(r.seed, "test"));
        let test = sample_labeled_pool(&r.data_model, r.n_test, &mut rng)?;
        save_points_csv(out.join("test.csv"), &PointSet::from_labeled(&test))?;
    }

    write_manifest(&out, &Manifest::new("gen", r.seed, params_json(&r)))?;
    println!(
        "gen: wrote {} tuples and {} unlabeled points to {}",
        r.n_tuples,
        r.n_unlabeled,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
