//! Config-file layering: defaults < JSON config < explicit flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tuplerisk_core::{
    coefficients::Priors, data::DataModel, CorrectionSpec, LossKind, ScenarioKind, ScenarioSpec,
};

/// Every knob a config file may set; commands read the subset they use.
/// Flags always win over file values.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub tau: Option<f64>,
    pub subset_file: Option<PathBuf>,

    pub dim: Option<usize>,
    pub mean_pos: Option<Vec<f64>>,
    pub mean_neg: Option<Vec<f64>>,
    pub stdev: Option<Vec<f64>>,

    pub tuples: Option<usize>,
    pub unlabeled: Option<usize>,
    pub test: Option<usize>,

    pub loss: Option<String>,
    pub correction: Option<String>,
    pub correction_k: Option<f64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_tuples: Option<usize>,
    pub batch_unlabeled: Option<usize>,
    pub weight_decay: Option<f64>,
    pub momentum: Option<f64>,

    pub arch: Option<String>,
    pub hidden: Option<usize>,
    pub estimator: Option<String>,

    pub repeats: Option<usize>,
    pub mc_points: Option<usize>,
    pub c_g: Option<f64>,
    pub delta: Option<f64>,
    pub sizes: Option<Vec<usize>>,
    pub num_seeds: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

/// Flag value wins; config file fills gaps; default last.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn parse_loss(name: &str) -> Result<LossKind> {
    Ok(match name {
        "sigmoid" => LossKind::Sigmoid,
        "logistic" => LossKind::Logistic,
        "double_hinge" | "double-hinge" => LossKind::DoubleHinge,
        "zero_one" | "zero-one" => LossKind::ZeroOne,
        other => bail!("unknown loss {other:?} (sigmoid|logistic|double_hinge)"),
    })
}

pub fn parse_correction(name: &str, k: Option<f64>) -> Result<CorrectionSpec> {
    Ok(match name {
        "none" => CorrectionSpec::None,
        "relu" => CorrectionSpec::Relu,
        "abs" => CorrectionSpec::Abs,
        "generalized" => CorrectionSpec::generalized(k.unwrap_or(1.0))?,
        other => bail!("unknown correction {other:?} (none|relu|abs|generalized)"),
    })
}

pub fn parse_scenario_kind(name: &str) -> Result<ScenarioKind> {
    Ok(match name {
        "comp" => ScenarioKind::Comp,
        "sim" => ScenarioKind::Sim,
        "mix" => ScenarioKind::Mix,
        "not-all-neg" | "not_all_neg" | "nan" => ScenarioKind::NotAllNeg,
        other => bail!("unknown scenario {other:?} (comp|sim|mix|not-all-neg|custom)"),
    })
}

pub fn build_scenario(name: &str, n: usize, subset_file: Option<&Path>) -> Result<ScenarioSpec> {
    if name == "custom" {
        let path = subset_file
            .ok_or_else(|| anyhow::anyhow!("--subset-file is required for custom scenarios"))?;
        return Ok(ScenarioSpec::custom_from_file(path)?);
    }
    Ok(ScenarioSpec::named(parse_scenario_kind(name)?, n)?)
}

/// Expands a scalar mean/stdev to `dim` entries; validates explicit vectors.
fn expand(values: Vec<f64>, dim: usize, what: &str) -> Result<Vec<f64>> {
    if values.len() == 1 {
        return Ok(vec![values[0]; dim]);
    }
    if values.len() != dim {
        bail!("{what} has {} entries, expected {dim}", values.len());
    }
    Ok(values)
}

pub struct DataModelArgs {
    pub dim: usize,
    pub mean_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub stdev: Vec<f64>,
}

pub fn build_data_model(args: DataModelArgs, tau: f64) -> Result<DataModel> {
    let priors = Priors::new(tau)?;
    Ok(DataModel::new(
        expand(args.mean_pos, args.dim, "mean_pos")?,
        expand(args.mean_neg, args.dim, "mean_neg")?,
        expand(args.stdev, args.dim, "stdev")?,
        priors,
    )?)
}

/// Comma-separated float list flag.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid float {t:?}"))
        })
        .collect()
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid integer {t:?}"))
        })
        .collect()
}
