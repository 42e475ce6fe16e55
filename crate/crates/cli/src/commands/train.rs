//! Training runs: synthetic data on the fly or CSV-ingested datasets,
//! per-step risk metrics as JSON lines, a checkpoint, and (when hidden
//! labels exist) a supervised logistic-regression oracle for comparison.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use tuplerisk_core::coefficients::Priors;
use tuplerisk_core::data::{
    child_seed, load_points_csv, load_tuples, rng_from_seed, sample_labeled_pool, sample_tuples,
    sample_unlabeled, save_points_csv, LabeledPool, PointSet, TupleDataset, UnlabeledDataset,
};
use tuplerisk_core::train::{fit_logistic, train, Checkpoint, Model, ModelArch, TrainConfig};
use tuplerisk_core::{RiskWeights, ScenarioSpec};

use crate::config::{build_scenario, parse_correction, parse_loss, pick, pick_opt, FileConfig};
use crate::manifest::{write_manifest, Manifest};
use crate::{CommonArgs, DataModelArgs, ScenarioArgs, TrainFlagArgs};

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub model: DataModelArgs,
    #[command(flatten)]
    pub train: TrainFlagArgs,
    /// Tuple CSV to train on (otherwise data is generated synthetically)
    #[arg(long, requires = "unlabeled_csv")]
    pub tuples_csv: Option<PathBuf>,
    /// Unlabeled point CSV to train on
    #[arg(long, requires = "tuples_csv")]
    pub unlabeled_csv: Option<PathBuf>,
    /// Synthetic tuple count
    #[arg(long)]
    pub tuples: Option<usize>,
    /// Synthetic unlabeled count
    #[arg(long)]
    pub unlabeled: Option<usize>,
    /// Synthetic labeled test points written next to the checkpoint
    #[arg(long)]
    pub test: Option<usize>,
}

/// One metrics line per optimisation step.
#[derive(Serialize)]
struct MetricsLine {
    step: usize,
    tuple_term: f64,
    unlabeled_term: f64,
    raw: f64,
    corrected: f64,
}

pub struct ResolvedTrain {
    pub cfg: TrainConfig,
    pub arch_name: String,
    pub hidden: usize,
    pub estimator: String,
}

pub fn resolve_train_config(
    flags: &TrainFlagArgs,
    file: &FileConfig,
    seed: u64,
) -> Result<ResolvedTrain> {
    let loss = parse_loss(&pick(
        flags.loss.clone(),
        file.loss.clone(),
        "sigmoid".into(),
    ))?;
    let correction = parse_correction(
        &pick(flags.correction.clone(), file.correction.clone(), "abs".into()),
        pick_opt(flags.correction_k, file.correction_k),
    )?;
    let cfg = TrainConfig {
        loss,
        correction,
        learning_rate: pick(flags.learning_rate, file.learning_rate, 0.1),
        epochs: pick(flags.epochs, file.epochs, 50),
        batch_tuples: pick(flags.batch_tuples, file.batch_tuples, 256),
        batch_unlabeled: pick(flags.batch_unlabeled, file.batch_unlabeled, 256),
        weight_decay: pick(flags.weight_decay, file.weight_decay, 1e-4),
        momentum: pick(flags.momentum, file.momentum, 0.9),
        seed: child_seed(seed, "train"),
    };
    Ok(ResolvedTrain {
        cfg,
        arch_name: pick(flags.arch.clone(), file.arch.clone(), "linear".into()),
        hidden: pick(flags.hidden, file.hidden, 16),
        estimator: pick(flags.estimator.clone(), file.estimator.clone(), "general".into()),
    })
}

pub fn build_arch(name: &str, dim: usize, hidden: usize) -> Result<ModelArch> {
    Ok(match name {
        "linear" => ModelArch::Linear { dim },
        "mlp" => ModelArch::Mlp { dim, hidden },
        other => bail!("unknown architecture {other:?} (linear|mlp)"),
    })
}

pub fn build_weights(
    estimator: &str,
    spec: &ScenarioSpec,
    priors: &Priors,
) -> Result<RiskWeights> {
    Ok(match estimator {
        "general" => RiskWeights::general_for(spec, priors)?,
        "symmetric" => RiskWeights::symmetric_for(spec, priors)?,
        other => bail!("unknown estimator {other:?} (general|symmetric)"),
    })
}

/// Flattens every point that carries a hidden label into a supervised pool.
fn oracle_pool(tuples: &TupleDataset, unl: &UnlabeledDataset) -> Option<LabeledPool> {
    let tuple_labels = tuples.hidden_labels.as_ref()?;
    let unl_labels = unl.hidden_labels.as_ref()?;
    let dim = tuples.dim();
    let mut features = Vec::with_capacity((tuples.len() * tuples.n() + unl.len()) * dim);
    let mut labels = Vec::with_capacity(tuples.len() * tuples.n() + unl.len());
    for (i, v) in tuple_labels.iter().enumerate() {
        for (slot, &e) in v.entries().iter().enumerate() {
            features.extend_from_slice(tuples.feature(i, slot));
            labels.push(e);
        }
    }
    for (i, &l) in unl_labels.iter().enumerate() {
        features.extend_from_slice(unl.point(i));
        labels.push(l);
    }
    LabeledPool::from_parts(dim, features, labels).ok()
}

pub fn run(args: TrainArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let out = args
        .common
        .out
        .clone()
        .ok_or_else(|| anyhow::anyhow!("--out is required for train"))?;
    std::fs::create_dir_all(&out)?;

    let seed = pick(args.common.seed, file.seed, 0);
    let rt = resolve_train_config(&args.train, &file, seed)?;

    // datasets: CSV ingestion or synthetic generation
    let (tuples, unl, priors, spec, data_params) = match (&args.tuples_csv, &args.unlabeled_csv) {
        (Some(tp), Some(up)) => {
            let tuples = load_tuples(tp).context("loading tuple CSV")?;
            let points = load_points_csv(up).context("loading unlabeled CSV")?;
            let unl = points.to_unlabeled()?;
            let tau = pick_opt(args.scenario.tau, file.tau)
                .ok_or_else(|| anyhow::anyhow!("--tau is required with CSV inputs"))?;
            let name = pick_opt(args.scenario.scenario.clone(), file.scenario.clone())
                .ok_or_else(|| anyhow::anyhow!("--scenario is required with CSV inputs"))?;
            let subset = args.scenario.subset_file.clone().or(file.subset_file.clone());
            let spec = build_scenario(&name, tuples.n(), subset.as_deref())?;
            let priors = Priors::new(tau)?;
            let params = serde_json::json!({
                "tuples_csv": tp.display().to_string(),
                "unlabeled_csv": up.display().to_string(),
                "scenario": name,
                "n": tuples.n(),
                "tau": tau,
            });
            (tuples, unl, priors, spec, params)
        }
        _ => {
            let r = super::gen::resolve(
                &args.common,
                &args.scenario,
                &args.model,
                args.tuples,
                args.unlabeled,
                args.test,
                &file,
            )?;
            let mut rng = rng_from_seed(child_seed(r.seed, "tuples"));
            let tuples = sample_tuples(&r.data_model, &r.scenario, r.n_tuples, &mut rng)?;
            let mut rng = rng_from_seed(child_seed(r.seed, "unlabeled"));
            let unl = sample_unlabeled(&r.data_model, r.n_unlabeled, &mut rng)?;
            if r.n_test > 0 {
                let mut rng = rng_from_seed(child_seed(r.seed, "test"));
                let test = sample_labeled_pool(&r.data_model, r.n_test, &mut rng)?;
                save_points_csv(out.join("test.csv"), &PointSet::from_labeled(&test))?;
            }
            let priors = r.data_model.priors;
            let params = super::gen::params_json(&r);
            (tuples, unl, priors, r.scenario, params)
        }
    };

    let weights = build_weights(&rt.estimator, &spec, &priors)?;
    let arch = build_arch(&rt.arch_name, tuples.dim(), rt.hidden)?;
    let cfg = TrainConfig {
        batch_tuples: rt.cfg.batch_tuples.min(tuples.len()),
        batch_unlabeled: rt.cfg.batch_unlabeled.min(unl.len()),
        ..rt.cfg.clone()
    };
    let model = Model::init_uniform(arch, child_seed(seed, "init"))?;
    let outcome = train(model, &tuples, &unl, &weights, &priors, &cfg)?;

    let params = serde_json::json!({
        "data": data_params,
        "arch": rt.arch_name,
        "hidden": rt.hidden,
        "estimator": rt.estimator,
        "train": cfg,
    });

    let mut metrics = std::io::BufWriter::new(std::fs::File::create(out.join("metrics.jsonl"))?);
    for rec in &outcome.steps {
        let line = MetricsLine {
            step: rec.step,
            tuple_term: rec.report.tuple_term,
            unlabeled_term: rec.report.unlabeled_term,
            raw: rec.report.raw_total,
            corrected: rec.report.corrected_total,
        };
        writeln!(metrics, "{}", serde_json::to_string(&line)?)?;
    }
    metrics.flush()?;

    Checkpoint::new(&outcome.model, seed, params.clone()).save(out.join("checkpoint.json"))?;

    if let Some(pool) = oracle_pool(&tuples, &unl) {
        let oracle = fit_logistic(&pool, 0.5, 300, 1e-4, child_seed(seed, "oracle"))?;
        Checkpoint::new(&oracle, seed, serde_json::json!({"role": "supervised_oracle"}))
            .save(out.join("oracle.json"))?;
    }

    write_manifest(&out, &Manifest::new("train", seed, params))?;

    let last = outcome.steps.last().expect("at least one step");
    println!(
        "train: {} steps, final raw risk {:.6}, corrected {:.6}; artifacts in {}",
        outcome.steps.len(),
        last.report.raw_total,
        last.report.corrected_total,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
