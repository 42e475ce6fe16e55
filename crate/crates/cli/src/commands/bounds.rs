//! Finite-sample excess-risk bound values for a scenario.

use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use tuplerisk_core::coefficients::Priors;
use tuplerisk_core::eval::{error_bound, BoundInputs, BoundReport};
use tuplerisk_core::{Error, RiskWeights};

use crate::config::{build_scenario, parse_loss, pick, FileConfig};
use crate::manifest::{write_manifest, Manifest};
use crate::{CommonArgs, ScenarioArgs};

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Loss whose Lipschitz constant enters the bound
    #[arg(long)]
    pub loss: Option<String>,
    /// Uniform score bound C_g
    #[arg(long)]
    pub c_g: Option<f64>,
    /// Confidence parameter delta
    #[arg(long)]
    pub delta: Option<f64>,
    /// Tuple sample count
    #[arg(long)]
    pub tuples: Option<usize>,
    /// Unlabeled sample count
    #[arg(long)]
    pub unlabeled: Option<usize>,
}

#[derive(Serialize)]
struct BoundsRow {
    form: &'static str,
    coef_tuple: f64,
    coef_unlabeled: f64,
    value: f64,
}

fn to_row(form: &'static str, report: BoundReport) -> BoundsRow {
    BoundsRow {
        form,
        coef_tuple: report.coef_tuple,
        coef_unlabeled: report.coef_unlabeled,
        value: report.value,
    }
}

pub fn run(args: BoundsArgs) -> Result<ExitCode> {
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
    let priors = Priors::new(tau)?;

    let loss = parse_loss(&pick(args.loss.clone(), file.loss.clone(), "sigmoid".into()))?;
    let inputs = BoundInputs::for_loss(
        loss,
        pick(args.c_g, file.c_g, 1.0),
        pick(args.delta, file.delta, 0.05),
        pick(args.tuples, file.tuples, 10_000),
        pick(args.unlabeled, file.unlabeled, 10_000),
        spec.n(),
    )?;

    let mut rows = Vec::new();
    let general = RiskWeights::general_for(&spec, &priors)?;
    rows.push(to_row("general", error_bound(&inputs, &general, &priors)?));
    match RiskWeights::symmetric_for(&spec, &priors) {
        Ok(symmetric) => {
            rows.push(to_row("symmetric", error_bound(&inputs, &symmetric, &priors)?));
        }
        // comp is asymmetric, and symmetric scenarios can be singular;
        // the general row still stands in both cases
        Err(Error::AsymmetricInput { .. }) | Err(Error::SingularMixture { .. }) => {}
        Err(e) => return Err(e.into()),
    }

    let mut csv = String::from("form,coef_tuple,coef_unlabeled,value\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.form, row.coef_tuple, row.coef_unlabeled, row.value
        ));
    }
    print!("{csv}");

    if let Some(out) = &args.common.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("bounds.csv"), &csv)?;
        let mut text = serde_json::to_string_pretty(&rows)?;
        text.push('\n');
        std::fs::write(out.join("bounds.json"), text)?;
        write_manifest(
            out,
            &Manifest::new(
                "bounds",
                seed,
                serde_json::json!({
                    "scenario": scenario_name,
                    "n": n,
                    "tau": tau,
                    "loss": loss.name(),
                    "c_g": inputs.c_g,
                    "delta": inputs.delta,
                    "tuples": inputs.n_tuples,
                    "unlabeled": inputs.n_unlabeled,
                }),
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
