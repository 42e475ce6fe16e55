//! Evaluation: accuracy, the Monte-Carlo unbiasedness harness, finite-sample
//! bound values, and convergence-trend curves.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::coefficients::Priors;
use crate::data::{
    child_seed, rng_from_seed, sample_labeled_pool, sample_tuples, sample_unlabeled, DataModel,
    LabeledPool,
};
use crate::error::{Error, Result};
use crate::losses::{loss, LossKind};
use crate::risk::{RiskWeights, TupleScores};
use crate::scenario::ScenarioSpec;
use crate::train::{train, Model, ModelArch, TrainConfig};

/// Classification accuracy; a zero score counts as a positive prediction.
pub fn accuracy(model: &Model, pool: &LabeledPool) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::EmptyInput {
            what: "labeled evaluation set",
        });
    }
    let mut correct = 0usize;
    for i in 0..pool.len() {
        let z = model.forward(pool.point(i))?;
        let pred: i8 = if z >= 0.0 { 1 } else { -1 };
        if pred == pool.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / pool.len() as f64)
}

/// Mean zero-one loss on a labeled set.
pub fn zero_one_risk(model: &Model, pool: &LabeledPool) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::EmptyInput {
            what: "labeled evaluation set",
        });
    }
    let mut total = 0.0;
    for i in 0..pool.len() {
        let z = model.forward(pool.point(i))?;
        total += loss(LossKind::ZeroOne, z, pool.label(i))?;
    }
    Ok(total / pool.len() as f64)
}

/// Minimum expected zero-one risk for diagonal-Gaussian class conditionals,
/// in closed form via the normal CDF of the log-odds score.
pub fn bayes_risk(model: &DataModel) -> f64 {
    let mut dist_sq = 0.0;
    for d in 0..model.dim {
        let gap = model.mean_pos[d] - model.mean_neg[d];
        dist_sq += (gap / model.stdev[d]).powi(2);
    }
    let delta = dist_sq.sqrt();
    let t = (model.priors.tau_plus() / model.priors.tau_minus()).ln();
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    model.priors.tau_plus() * std_normal.cdf(-0.5 * delta - t / delta)
        + model.priors.tau_minus() * std_normal.cdf(-0.5 * delta + t / delta)
}

/// Outcome of the statistical check that the weak-risk estimator is
/// centered on the supervised risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub mean_weak_risk: f64,
    pub supervised_mc_risk: f64,
    pub weak_std_error: f64,
    pub mc_std_error: f64,
    pub z_score: f64,
    pub repeats: usize,
}

/// Resamples weak datasets `repeats` times for a fixed model, averaging the
/// general-form raw risk, and compares against a labeled Monte-Carlo
/// estimate of the supervised risk on `mc_points` fresh draws.
#[allow(clippy::too_many_arguments)]
pub fn unbiasedness_report(
    model: &Model,
    spec: &ScenarioSpec,
    data: &DataModel,
    n_tuples: usize,
    n_unlabeled: usize,
    repeats: usize,
    mc_points: usize,
    kind: LossKind,
    seed: u64,
) -> Result<UnbiasednessReport> {
    if repeats < 10 {
        return Err(Error::invalid("at least 10 repeats are required"));
    }
    let weights = RiskWeights::general_for(spec, &data.priors)?;
    let n = spec.n();
    let mut raws = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut rng = rng_from_seed(child_seed(seed, &format!("trial-{r}")));
        let tuples = sample_tuples(data, spec, n_tuples, &mut rng)?;
        let unl = sample_unlabeled(data, n_unlabeled, &mut rng)?;
        let mut scores = Vec::with_capacity(n_tuples * n);
        for i in 0..tuples.len() {
            for slot in 0..n {
                scores.push(model.forward(tuples.feature(i, slot))?);
            }
        }
        let unl_scores = (0..unl.len())
            .map(|i| model.forward(unl.point(i)))
            .collect::<Result<Vec<f64>>>()?;
        let report = weights.evaluate(
            &data.priors,
            &TupleScores::new(scores, n)?,
            &unl_scores,
            kind,
        )?;
        raws.push(report.raw_total);
    }
    let mean_weak = raws.iter().sum::<f64>() / repeats as f64;
    let var_weak = raws.iter().map(|r| (r - mean_weak).powi(2)).sum::<f64>()
        / (repeats - 1) as f64;
    let weak_std_error = (var_weak / repeats as f64).sqrt();

    let mut rng = rng_from_seed(child_seed(seed, "mc"));
    let pool = sample_labeled_pool(data, mc_points, &mut rng)?;
    let mut losses = Vec::with_capacity(mc_points);
    for i in 0..pool.len() {
        let z = model.forward(pool.point(i))?;
        losses.push(loss(kind, z, pool.label(i))?);
    }
    let mc_mean = losses.iter().sum::<f64>() / mc_points as f64;
    let mc_var = losses.iter().map(|l| (l - mc_mean).powi(2)).sum::<f64>()
        / (mc_points - 1) as f64;
    let mc_std_error = (mc_var / mc_points as f64).sqrt();

    let combined = (weak_std_error.powi(2) + mc_std_error.powi(2)).sqrt();
    Ok(UnbiasednessReport {
        mean_weak_risk: mean_weak,
        supervised_mc_risk: mc_mean,
        weak_std_error,
        mc_std_error,
        z_score: (mean_weak - mc_mean).abs() / combined,
        repeats,
    })
}

/// Constants entering the finite-sample excess-risk bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Lipschitz constant of the loss.
    pub rho: f64,
    /// Uniform bound on the scorer's output.
    pub c_g: f64,
    /// Largest loss value at that score bound.
    pub c_ell: f64,
    /// Confidence parameter in (0, 1).
    pub delta: f64,
    pub n_tuples: usize,
    pub n_unlabeled: usize,
    /// Tuple size.
    pub n: usize,
}

impl BoundInputs {
    pub fn for_loss(
        kind: LossKind,
        c_g: f64,
        delta: f64,
        n_tuples: usize,
        n_unlabeled: usize,
        n: usize,
    ) -> Result<Self> {
        let rho = kind
            .lipschitz()
            .ok_or(Error::NonDifferentiableKind { kind: "zero_one" })?;
        let inputs = BoundInputs {
            rho,
            c_g,
            c_ell: kind.max_loss_at(c_g),
            delta,
            n_tuples,
            n_unlabeled,
            n,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.c_g > 0.0 && self.c_ell > 0.0) {
            return Err(Error::invalid("bound constants must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta must lie in (0, 1)"));
        }
        if self.n_tuples == 0 || self.n_unlabeled == 0 || self.n == 0 {
            return Err(Error::invalid("sample counts and tuple size must be positive"));
        }
        Ok(())
    }
}

/// A bound evaluation: the two sample-complexity coefficients and the
/// resulting value `coef_tuple/sqrt(effective tuple count) +
/// coef_unlabeled/sqrt(n_unlabeled)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub coef_tuple: f64,
    pub coef_unlabeled: f64,
    pub value: f64,
}

/// Excess-risk bound value for either estimator form.
///
/// Mixture-dependent prefactors enter in absolute value so the bound stays
/// positive for scenarios whose symmetric denominator is negative.
pub fn error_bound(
    inputs: &BoundInputs,
    weights: &RiskWeights,
    priors: &Priors,
) -> Result<BoundReport> {
    inputs.validate()?;
    let ln4 = (4.0 / inputs.delta).ln();
    match weights {
        RiskWeights::General(w) => {
            let sum_c1: f64 = w.c1.iter().sum();
            let sum_c2: f64 = w.c2.iter().sum();
            let tuple_prefactor =
                (priors.tau_plus() * sum_c1 + priors.tau_minus() * sum_c2).abs();
            let unl_prefactor = (priors.tau_plus() * w.d1 + priors.tau_minus() * w.d2).abs();
            let ln4n = (4.0 * inputs.n as f64 / inputs.delta).ln();
            let coef_tuple =
                tuple_prefactor * (4.0 * inputs.rho * inputs.c_g + inputs.c_ell * (2.0 * ln4n).sqrt());
            let coef_unlabeled =
                unl_prefactor * (4.0 * inputs.rho * inputs.c_g + inputs.c_ell * (2.0 * ln4).sqrt());
            let value = coef_tuple / (inputs.n_tuples as f64).sqrt()
                + coef_unlabeled / (inputs.n_unlabeled as f64).sqrt();
            Ok(BoundReport {
                coef_tuple,
                coef_unlabeled,
                value,
            })
        }
        RiskWeights::Symmetric(s) => {
            let prefactor =
                4.0 * priors.tau_plus() * priors.tau_minus() / s.denom.abs();
            let coef_tuple =
                prefactor * (2.0 * inputs.rho * inputs.c_g + inputs.c_ell * (0.5 * ln4).sqrt());
            let coef_unlabeled =
                4.0 * inputs.rho * inputs.c_g + 2.0 * inputs.c_ell * (0.5 * ln4).sqrt();
            let value = coef_tuple / (inputs.n as f64 * inputs.n_tuples as f64).sqrt()
                + coef_unlabeled / (inputs.n_unlabeled as f64).sqrt();
            Ok(BoundReport {
                coef_tuple,
                coef_unlabeled,
                value,
            })
        }
    }
}

/// One row of the convergence-trend table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub median_excess_risk: f64,
    pub bayes_risk: f64,
}

/// Trains at each sample size (tuples and unlabeled both set to `n`) over
/// the given seeds and reports the median excess zero-one risk against the
/// closed-form optimum. One shared test set keeps rows comparable.
pub fn excess_risk_curve(
    spec: &ScenarioSpec,
    data: &DataModel,
    sizes: &[usize],
    seeds: &[u64],
    arch: ModelArch,
    base: &TrainConfig,
    test_points: usize,
) -> Result<Vec<CurvePoint>> {
    if sizes.len() < 3 {
        return Err(Error::invalid("at least 3 sizes are required"));
    }
    if seeds.len() < 3 {
        return Err(Error::invalid("at least 3 seeds are required"));
    }
    let weights = RiskWeights::general_for(spec, &data.priors)?;
    let optimum = bayes_risk(data);
    let mut test_rng = rng_from_seed(child_seed(base.seed, "curve-test"));
    let test = sample_labeled_pool(data, test_points, &mut test_rng)?;

    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if n == 0 {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        let mut excesses = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut rng = rng_from_seed(child_seed(seed, &format!("curve-n{n}")));
            let tuples = sample_tuples(data, spec, n, &mut rng)?;
            let unl = sample_unlabeled(data, n, &mut rng)?;
            let cfg = TrainConfig {
                batch_tuples: base.batch_tuples.min(n),
                batch_unlabeled: base.batch_unlabeled.min(n),
                seed: child_seed(seed, &format!("curve-train-n{n}")),
                ..base.clone()
            };
            let model = Model::init_uniform(arch, child_seed(cfg.seed, "init"))?;
            let outcome = train(model, &tuples, &unl, &weights, &data.priors, &cfg)?;
            excesses.push(zero_one_risk(&outcome.model, &test)? - optimum);
        }
        excesses.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if excesses.len() % 2 == 1 {
            excesses[excesses.len() / 2]
        } else {
            0.5 * (excesses[excesses.len() / 2 - 1] + excesses[excesses.len() / 2])
        };
        rows.push(CurvePoint {
            n,
            median_excess_risk: median,
            bayes_risk: optimum,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::CorrectionSpec;
    use crate::scenario::ScenarioKind;
    use approx::assert_abs_diff_eq;

    fn priors(tau: f64) -> Priors {
        Priors::new(tau).unwrap()
    }

    #[test]
    fn bayes_risk_matches_normal_cdf_reference() {
        // means +/-1, stdev 1, equal priors: Phi(-1)
        let model = DataModel::symmetric(1, 1.0, 1.0, priors(0.5)).unwrap();
        assert_abs_diff_eq!(bayes_risk(&model), 0.15865525393145707, epsilon = 1e-9);
    }

    #[test]
    fn bayes_risk_shrinks_with_separation() {
        let near = DataModel::symmetric(2, 0.5, 1.0, priors(0.6)).unwrap();
        let far = DataModel::symmetric(2, 2.0, 1.0, priors(0.6)).unwrap();
        assert!(bayes_risk(&far) < bayes_risk(&near));
    }

    #[test]
    fn accuracy_counts_zero_scores_as_positive() {
        let pool = LabeledPool::from_parts(1, vec![0.4, -0.4], vec![1, -1]).unwrap();
        let zero = Model::zeros(ModelArch::Linear { dim: 1 }).unwrap();
        // all predictions +1: accuracy equals the positive fraction
        assert_abs_diff_eq!(accuracy(&zero, &pool).unwrap(), 0.5);
        let ident =
            Model::from_params(ModelArch::Linear { dim: 1 }, vec![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(accuracy(&ident, &pool).unwrap(), 1.0);
        let flipped =
            Model::from_params(ModelArch::Linear { dim: 1 }, vec![-1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(accuracy(&flipped, &pool).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_is_scale_invariant() {
        let dm = DataModel::symmetric(2, 1.0, 1.0, priors(0.6)).unwrap();
        let mut rng = rng_from_seed(8);
        let pool = sample_labeled_pool(&dm, 500, &mut rng).unwrap();
        let m1 =
            Model::from_params(ModelArch::Linear { dim: 2 }, vec![0.3, 0.7, -0.1]).unwrap();
        let m2 =
            Model::from_params(ModelArch::Linear { dim: 2 }, vec![3.0, 7.0, -1.0]).unwrap();
        assert_eq!(accuracy(&m1, &pool).unwrap(), accuracy(&m2, &pool).unwrap());
    }

    #[test]
    fn separated_gaussians_reach_bayes_level_accuracy() {
        // stdev 0.1 at separation 3 makes the Bayes classifier near-perfect
        let dm = DataModel::new(
            vec![1.5, 1.5],
            vec![-1.5, -1.5],
            vec![0.1, 0.1],
            priors(0.5),
        )
        .unwrap();
        let mut rng = rng_from_seed(momentless_seed());
        let pool = sample_labeled_pool(&dm, 2000, &mut rng).unwrap();
        let model =
            Model::from_params(ModelArch::Linear { dim: 2 }, vec![1.0, 1.0, 0.0]).unwrap();
        assert!(accuracy(&model, &pool).unwrap() >= 0.99);
    }

    fn momentless_seed() -> u64 {
        424242
    }

    #[test]
    fn zero_model_unbiasedness_is_exact() {
        // a zero scorer gives loss 0.5 on both sides, so the difference is
        // pure float noise
        let dm = DataModel::symmetric(1, 1.0, 1.0, priors(0.6)).unwrap();
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 3).unwrap();
        let model = Model::zeros(ModelArch::Linear { dim: 1 }).unwrap();
        let report = unbiasedness_report(
            &model,
            &spec,
            &dm,
            200,
            200,
            10,
            1000,
            LossKind::Sigmoid,
            5,
        )
        .unwrap();
        assert_abs_diff_eq!(report.mean_weak_risk, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(report.supervised_mc_risk, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn unbiasedness_z_score_is_small_for_fixed_linear_model() {
        let dm = DataModel::symmetric(1, 1.0, 1.0, priors(0.6)).unwrap();
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 3).unwrap();
        let model =
            Model::from_params(ModelArch::Linear { dim: 1 }, vec![1.0, 0.0]).unwrap();
        let report = unbiasedness_report(
            &model,
            &spec,
            &dm,
            2000,
            2000,
            30,
            200_000,
            LossKind::Sigmoid,
            17,
        )
        .unwrap();
        assert!(report.z_score <= 4.0, "z = {}", report.z_score);
    }

    #[test]
    fn bound_scales_exactly_with_sample_doubling() {
        let pr = priors(0.8);
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 2).unwrap();
        for weights in [
            RiskWeights::general_for(&spec, &pr).unwrap(),
            RiskWeights::symmetric_for(&spec, &pr).unwrap(),
        ] {
            let base = BoundInputs::for_loss(LossKind::Sigmoid, 1.0, 0.05, 10_000, 10_000, 2)
                .unwrap();
            let doubled = BoundInputs {
                n_tuples: 20_000,
                n_unlabeled: 20_000,
                ..base
            };
            let b1 = error_bound(&base, &weights, &pr).unwrap();
            let b2 = error_bound(&doubled, &weights, &pr).unwrap();
            assert!(b1.value > 0.0 && b1.value.is_finite());
            assert_abs_diff_eq!(b2.value, b1.value / 2f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_bound_value_matches_scalar_recomputation() {
        // rho 1/4, c_g 1, delta 0.05, tau 0.8, sim n=2
        let pr = priors(0.8);
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 2).unwrap();
        let weights = RiskWeights::symmetric_for(&spec, &pr).unwrap();
        let denom = match &weights {
            RiskWeights::Symmetric(s) => s.denom,
            _ => unreachable!(),
        };
        let inputs = BoundInputs {
            rho: 0.25,
            c_g: 1.0,
            c_ell: 1.0,
            delta: 0.05,
            n_tuples: 10_000,
            n_unlabeled: 10_000,
            n: 2,
        };
        let report = error_bound(&inputs, &weights, &pr).unwrap();
        let ln4 = (4.0f64 / 0.05).ln();
        let s_n = 4.0 * 0.8 * 0.2 / denom.abs() * (2.0 * 0.25 + (0.5 * ln4).sqrt());
        let s_u = 4.0 * 0.25 + 2.0 * (0.5 * ln4).sqrt();
        let expected = s_n / (2.0f64 * 10_000.0).sqrt() + s_u / 10_000.0f64.sqrt();
        assert_abs_diff_eq!(report.value, expected, epsilon = 1e-12);
        assert!(report.value > 0.0);
    }

    #[test]
    fn bound_is_monotone_in_sample_sizes() {
        let pr = priors(0.6);
        let spec = ScenarioSpec::named(ScenarioKind::Comp, 3).unwrap();
        let weights = RiskWeights::general_for(&spec, &pr).unwrap();
        let mut prev = f64::INFINITY;
        for n in [100usize, 1000, 10_000] {
            let inputs =
                BoundInputs::for_loss(LossKind::Sigmoid, 1.0, 0.05, n, n, 3).unwrap();
            let b = error_bound(&inputs, &weights, &pr).unwrap();
            assert!(b.value < prev);
            prev = b.value;
        }
    }

    #[test]
    fn curve_validates_inputs() {
        let dm = DataModel::symmetric(1, 1.0, 1.0, priors(0.6)).unwrap();
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 3).unwrap();
        let cfg = TrainConfig {
            loss: LossKind::Sigmoid,
            correction: CorrectionSpec::Abs,
            learning_rate: 0.1,
            epochs: 1,
            batch_tuples: 16,
            batch_unlabeled: 16,
            weight_decay: 0.0,
            momentum: 0.9,
            seed: 1,
        };
        let err = excess_risk_curve(
            &spec,
            &dm,
            &[],
            &[1, 2, 3],
            ModelArch::Linear { dim: 1 },
            &cfg,
            100,
        );
        assert!(err.is_err());
        let err = excess_risk_curve(
            &spec,
            &dm,
            &[10, 20, 30],
            &[1],
            ModelArch::Linear { dim: 1 },
            &cfg,
            100,
        );
        assert!(err.is_err());
    }
}
