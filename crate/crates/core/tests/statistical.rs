//! Monte-Carlo cross-checks between the weak estimators, the samplers,
//! and labeled ground truth.

use tuplerisk_core::coefficients::Priors;
use tuplerisk_core::data::{
    rejection_sample_tuples, rng_from_seed, sample_labeled_pool, sample_tuples, DataModel,
};
use tuplerisk_core::losses::{loss, LossKind};
use tuplerisk_core::risk::{RiskWeights, TupleScores};
use tuplerisk_core::scenario::{ScenarioKind, ScenarioSpec};
use tuplerisk_core::train::{Model, ModelArch};

fn priors(tau: f64) -> Priors {
    Priors::new(tau).unwrap()
}

/// Weak risk on a large resample approximates the labeled Monte-Carlo
/// supervised risk for a fixed linear scorer.
#[test]
fn weak_risk_tracks_supervised_monte_carlo() {
    let tau = 0.6;
    let data = DataModel::symmetric(1, 1.0, 1.0, priors(tau)).unwrap();
    let spec = ScenarioSpec::named(ScenarioKind::Comp, 3).unwrap();
    let weights = RiskWeights::general_for(&spec, &data.priors).unwrap();
    let model = Model::from_params(ModelArch::Linear { dim: 1 }, vec![1.0, 0.0]).unwrap();

    let n = 100_000usize;
    let mut rng = rng_from_seed(2024);
    let tuples = sample_tuples(&data, &spec, n, &mut rng).unwrap();
    let unl = tuplerisk_core::data::sample_unlabeled(&data, n, &mut rng).unwrap();
    let mut scores = Vec::with_capacity(n * 3);
    for i in 0..n {
        for slot in 0..3 {
            scores.push(model.forward(tuples.feature(i, slot)).unwrap());
        }
    }
    let unl_scores: Vec<f64> = (0..n).map(|i| model.forward(unl.point(i)).unwrap()).collect();
    let weak = weights
        .evaluate(
            &data.priors,
            &TupleScores::new(scores, 3).unwrap(),
            &unl_scores,
            LossKind::Sigmoid,
        )
        .unwrap()
        .raw_total;

    let mc_n = 1_000_000usize;
    let pool = sample_labeled_pool(&data, mc_n, &mut rng).unwrap();
    let supervised: f64 = (0..mc_n)
        .map(|i| {
            let z = model.forward(pool.point(i)).unwrap();
            loss(LossKind::Sigmoid, z, pool.label(i)).unwrap()
        })
        .sum::<f64>()
        / mc_n as f64;

    assert!(
        (weak - supervised).abs() <= 0.01,
        "weak {weak} vs supervised {supervised}"
    );
}

/// The direct and rejection samplers agree on per-position positive rates.
#[test]
fn direct_and_rejection_samplers_agree() {
    let tau = 0.3;
    let data = DataModel::symmetric(1, 1.0, 1.0, priors(tau)).unwrap();
    let spec = ScenarioSpec::named(ScenarioKind::NotAllNeg, 3).unwrap();
    let count = 50_000usize;

    let direct = sample_tuples(&data, &spec, count, &mut rng_from_seed(71)).unwrap();
    let (rejected, _) =
        rejection_sample_tuples(&data, &spec, count, &mut rng_from_seed(72)).unwrap();

    for slot in 0..3 {
        let rate = |ds: &tuplerisk_core::data::TupleDataset| {
            ds.hidden_labels
                .as_ref()
                .unwrap()
                .iter()
                .filter(|v| v.entries()[slot] == 1)
                .count() as f64
                / count as f64
        };
        let (p, q) = (rate(&direct), rate(&rejected));
        // two-sample binomial comparison at 4 sigma
        let pooled = 0.5 * (p + q);
        let sigma = (2.0 * pooled * (1.0 - pooled) / count as f64).sqrt();
        assert!(
            (p - q).abs() <= 4.0 * sigma,
            "slot {slot}: direct {p} vs rejection {q}"
        );
    }
}
