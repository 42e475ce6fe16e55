//! Risk estimators.
//!
//! `supervised_risk` is the classical prior-weighted two-class risk. The
//! weak estimators rewrite it in terms of observable data only: per-position
//! tuple scores weighted by reconstruction coefficients plus an unlabeled
//! term (`empirical_risk_general`), or the collapsed two-term form for
//! permutation-symmetric scenarios (`empirical_risk_symmetric`).
//!
//! Reconstruction weights can be negative, so the estimate itself can go
//! negative on a finite sample; that is intrinsic to the method and is what
//! the correction function is for. Summation order is fixed (positions
//! outer, tuples inner, left to right) so risk values are bit-stable.

use serde::{Deserialize, Serialize};

use crate::coefficients::{CompensatedSum, Priors, ReconstructionWeights, SymmetricWeights};
use crate::error::{Error, Result};
use crate::losses::{loss, LossKind};

/// How to map a raw batch risk to the value actually minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectionSpec {
    /// Identity; negative risks pass through untouched.
    None,
    /// `max(0, x)`: clips negative risk, zero gradient on the flat branch.
    Relu,
    /// `|x|`: reflects negative risk back into the positive range.
    Abs,
    /// `x` for `x >= 0`, `k * |x|` otherwise.
    Generalized { k: f64 },
}

impl CorrectionSpec {
    pub fn generalized(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::invalid(format!(
                "correction slope k must be positive, got {k}"
            )));
        }
        Ok(CorrectionSpec::Generalized { k })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CorrectionSpec::None => "none",
            CorrectionSpec::Relu => "relu",
            CorrectionSpec::Abs => "abs",
            CorrectionSpec::Generalized { .. } => "generalized",
        }
    }

    /// d corrected / d raw on the negative branch (it is 1 on x >= 0).
    pub fn negative_branch_slope(&self) -> f64 {
        match self {
            CorrectionSpec::None => 1.0,
            CorrectionSpec::Relu => 0.0,
            CorrectionSpec::Abs => -1.0,
            CorrectionSpec::Generalized { k } => -k,
        }
    }
}

/// Applies the correction function to a raw risk value.
pub fn correct(raw: f64, spec: &CorrectionSpec) -> f64 {
    if raw >= 0.0 {
        return raw;
    }
    match spec {
        CorrectionSpec::None => raw,
        CorrectionSpec::Relu => 0.0,
        CorrectionSpec::Abs => -raw,
        CorrectionSpec::Generalized { k } => k * -raw,
    }
}

/// One risk evaluation: the two additive terms, their total, and the
/// corrected value that training minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub tuple_term: f64,
    pub unlabeled_term: f64,
    pub raw_total: f64,
    pub corrected_total: f64,
    pub n_tuples: usize,
    pub n_unlabeled: usize,
}

impl RiskReport {
    pub fn with_correction(mut self, spec: &CorrectionSpec) -> Self {
        self.corrected_total = correct(self.raw_total, spec);
        self
    }
}

/// Rectangular per-position score matrix: tuple i, position j at `i * n + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleScores {
    scores: Vec<f64>,
    n: usize,
}

impl TupleScores {
    pub fn new(scores: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("tuple size must be positive"));
        }
        if scores.len() % n != 0 {
            return Err(Error::ShapeMismatch {
                detail: format!("{} scores do not fill rows of width {n}", scores.len()),
            });
        }
        Ok(TupleScores { scores, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_tuples(&self) -> usize {
        self.scores.len() / self.n
    }

    pub fn at(&self, tuple: usize, position: usize) -> f64 {
        self.scores[tuple * self.n + position]
    }

    pub fn flat(&self) -> &[f64] {
        &self.scores
    }
}

/// Prior-weighted supervised risk over separately scored classes.
pub fn supervised_risk(
    scores_pos: &[f64],
    scores_neg: &[f64],
    priors: &Priors,
    kind: LossKind,
) -> Result<f64> {
    if scores_pos.is_empty() {
        return Err(Error::EmptyInput {
            what: "positive scores",
        });
    }
    if scores_neg.is_empty() {
        return Err(Error::EmptyInput {
            what: "negative scores",
        });
    }
    let mut pos = CompensatedSum::default();
    for &z in scores_pos {
        pos.add(loss(kind, z, 1)?);
    }
    let mut neg = CompensatedSum::default();
    for &z in scores_neg {
        neg.add(loss(kind, z, -1)?);
    }
    Ok(priors.tau_plus() * pos.value() / scores_pos.len() as f64
        + priors.tau_minus() * neg.value() / scores_neg.len() as f64)
}

/// General weak risk: per-position weighted tuple term plus unlabeled term.
///
/// The correction is not applied here; the report carries
/// `corrected_total = raw_total` until `with_correction` is called.
pub fn empirical_risk_general(
    weights: &ReconstructionWeights,
    priors: &Priors,
    tuple_scores: &TupleScores,
    unlabeled_scores: &[f64],
    kind: LossKind,
) -> Result<RiskReport> {
    let n = weights.n();
    if tuple_scores.n() != n {
        return Err(Error::ShapeMismatch {
            detail: format!(
                "tuple scores have width {}, weights expect {n}",
                tuple_scores.n()
            ),
        });
    }
    let n_tuples = tuple_scores.n_tuples();
    if n_tuples == 0 {
        return Err(Error::EmptyInput {
            what: "tuple scores",
        });
    }
    if unlabeled_scores.is_empty() && (weights.d1 != 0.0 || weights.d2 != 0.0) {
        return Err(Error::EmptyInput {
            what: "unlabeled scores",
        });
    }
    let tp = priors.tau_plus();
    let tm = priors.tau_minus();

    let mut tuple_sum = CompensatedSum::default();
    for j in 0..n {
        let w_pos = tp * weights.c1[j];
        let w_neg = tm * weights.c2[j];
        for i in 0..n_tuples {
            let z = tuple_scores.at(i, j);
            tuple_sum.add(w_pos * loss(kind, z, 1)? + w_neg * loss(kind, z, -1)?);
        }
    }
    let tuple_term = tuple_sum.value() / n_tuples as f64;

    let mut unlabeled_term = 0.0;
    if !unlabeled_scores.is_empty() {
        let w_pos = tp * weights.d1;
        let w_neg = tm * weights.d2;
        let mut acc = CompensatedSum::default();
        for &z in unlabeled_scores {
            acc.add(w_pos * loss(kind, z, 1)? + w_neg * loss(kind, z, -1)?);
        }
        unlabeled_term = acc.value() / unlabeled_scores.len() as f64;
    }

    let raw_total = tuple_term + unlabeled_term;
    Ok(RiskReport {
        tuple_term,
        unlabeled_term,
        raw_total,
        corrected_total: raw_total,
        n_tuples,
        n_unlabeled: unlabeled_scores.len(),
    })
}

/// Symmetric weak risk over flattened tuple member scores.
pub fn empirical_risk_symmetric(
    sym: &SymmetricWeights,
    tuple_scores_flat: &[f64],
    unlabeled_scores: &[f64],
    kind: LossKind,
) -> Result<RiskReport> {
    if tuple_scores_flat.is_empty() {
        return Err(Error::EmptyInput {
            what: "tuple scores",
        });
    }
    if unlabeled_scores.is_empty() {
        return Err(Error::EmptyInput {
            what: "unlabeled scores",
        });
    }
    let mut gap = CompensatedSum::default();
    for &z in tuple_scores_flat {
        gap.add(loss(kind, z, 1)? - loss(kind, z, -1)?);
    }
    let tuple_term = sym.tuple_multiplier * gap.value() / tuple_scores_flat.len() as f64;

    let mut acc = CompensatedSum::default();
    for &z in unlabeled_scores {
        acc.add(sym.u_pos * loss(kind, z, 1)? + sym.u_neg * loss(kind, z, -1)?);
    }
    let unlabeled_term = acc.value() / unlabeled_scores.len() as f64;

    let raw_total = tuple_term + unlabeled_term;
    Ok(RiskReport {
        tuple_term,
        unlabeled_term,
        raw_total,
        corrected_total: raw_total,
        n_tuples: tuple_scores_flat.len(),
        n_unlabeled: unlabeled_scores.len(),
    })
}

/// Either side of the estimator family: per-position weights for any
/// scenario, or the collapsed form for symmetric ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RiskWeights {
    General(ReconstructionWeights),
    Symmetric(SymmetricWeights),
}

impl RiskWeights {
    /// General-form weights for a scenario, through the exact mixture route.
    pub fn general_for(spec: &crate::scenario::ScenarioSpec, priors: &Priors) -> Result<Self> {
        let mix = crate::coefficients::mixture_for(spec, priors)?;
        Ok(RiskWeights::General(crate::coefficients::reconstruction_weights(&mix, priors)?))
    }

    /// Collapsed weights for a symmetric scenario.
    pub fn symmetric_for(spec: &crate::scenario::ScenarioSpec, priors: &Priors) -> Result<Self> {
        let mix = crate::coefficients::mixture_for(spec, priors)?;
        Ok(RiskWeights::Symmetric(crate::coefficients::symmetric_weights(&mix, priors)?))
    }

    /// Tuple width required of score matrices, when constrained.
    pub fn required_width(&self) -> Option<usize> {
        match self {
            RiskWeights::General(w) => Some(w.n()),
            RiskWeights::Symmetric(_) => None,
        }
    }

    pub fn evaluate(
        &self,
        priors: &Priors,
        tuple_scores: &TupleScores,
        unlabeled_scores: &[f64],
        kind: LossKind,
    ) -> Result<RiskReport> {
        match self {
            RiskWeights::General(w) => {
                empirical_risk_general(w, priors, tuple_scores, unlabeled_scores, kind)
            }
            RiskWeights::Symmetric(s) => {
                empirical_risk_symmetric(s, tuple_scores.flat(), unlabeled_scores, kind)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{
        mixture_closed_form, reconstruction_weights, symmetric_weights,
    };
    use crate::scenario::ScenarioKind;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn priors(tau: f64) -> Priors {
        Priors::new(tau).unwrap()
    }

    #[test]
    fn correction_examples() {
        assert_eq!(correct(0.3, &CorrectionSpec::Abs), 0.3);
        assert_eq!(
            correct(-0.2, &CorrectionSpec::generalized(1.0).unwrap()),
            0.2
        );
        assert_eq!(correct(-0.2, &CorrectionSpec::Relu), 0.0);
        assert_eq!(correct(-0.2, &CorrectionSpec::None), -0.2);
        assert_abs_diff_eq!(
            correct(-0.2, &CorrectionSpec::generalized(2.5).unwrap()),
            0.5
        );
    }

    #[test]
    fn correction_is_idempotent_and_identity_on_non_negative() {
        for spec in [
            CorrectionSpec::Relu,
            CorrectionSpec::Abs,
            CorrectionSpec::generalized(3.0).unwrap(),
        ] {
            for x in [-2.0, -0.1, 0.0, 0.4, 7.0] {
                let once = correct(x, &spec);
                assert!(once >= 0.0);
                assert_eq!(correct(once, &spec), once);
                if x >= 0.0 {
                    assert_eq!(once, x);
                }
            }
        }
    }

    #[test]
    fn generalized_requires_positive_slope() {
        assert!(CorrectionSpec::generalized(0.0).is_err());
        assert!(CorrectionSpec::generalized(-1.0).is_err());
    }

    #[test]
    fn supervised_risk_constant_scores() {
        let zeros = vec![0.0; 10];
        for tau in [0.2, 0.5, 0.9] {
            let r = supervised_risk(&zeros, &zeros, &priors(tau), LossKind::Sigmoid).unwrap();
            assert_abs_diff_eq!(r, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn supervised_risk_separated_scores_vanishes() {
        let r = supervised_risk(&[30.0], &[-30.0], &priors(0.7), LossKind::Sigmoid).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn supervised_risk_matches_hand_sum() {
        // tau_+ 0.6: 0.6 * mean(l(1,+1), l(-2,+1)) + 0.4 * l(0.5,-1)
        let expected = 0.6 * 0.5 * (1.0 / (1.0 + 1f64.exp()) + 1.0 / (1.0 + (-2f64).exp()))
            + 0.4 * (1.0 / (1.0 + (-0.5f64).exp()));
        let r = supervised_risk(&[1.0, -2.0], &[0.5], &priors(0.6), LossKind::Sigmoid).unwrap();
        assert_abs_diff_eq!(r, expected, epsilon = 1e-15);
    }

    #[test]
    fn supervised_risk_rejects_empty_sides() {
        assert!(matches!(
            supervised_risk(&[], &[0.0], &priors(0.5), LossKind::Sigmoid),
            Err(Error::EmptyInput { .. })
        ));
    }

    #[test]
    fn constant_loss_identity_general() {
        // all-zero scores collapse to l(0,+1) through the row-sum identities
        for kind in ScenarioKind::ALL {
            for tau in [0.2, 0.35, 0.6, 0.8] {
                let pr = priors(tau);
                let mix = mixture_closed_form(kind, 3, &pr).unwrap();
                let w = reconstruction_weights(&mix, &pr).unwrap();
                let scores = TupleScores::new(vec![0.0; 3 * 257], 3).unwrap();
                let unl = vec![0.0; 123];
                for (loss_kind, expected) in [
                    (LossKind::Sigmoid, 0.5),
                    (LossKind::DoubleHinge, 0.5),
                    (LossKind::Logistic, 2f64.ln()),
                ] {
                    let report =
                        empirical_risk_general(&w, &pr, &scores, &unl, loss_kind).unwrap();
                    assert_abs_diff_eq!(report.raw_total, expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_loss_identity_symmetric() {
        let pr = priors(0.8);
        let mix = mixture_closed_form(ScenarioKind::Sim, 2, &pr).unwrap();
        let sym = symmetric_weights(&mix, &pr).unwrap();
        let report =
            empirical_risk_symmetric(&sym, &[0.0; 64], &[0.0; 31], LossKind::Sigmoid).unwrap();
        assert_abs_diff_eq!(report.tuple_term, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(report.raw_total, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn single_tuple_scalar_oracle() {
        // independent scalar recomputation with the hand-derived weights
        // c1 = 17/24, c2 = -17/6, d1 = -5/12, d2 = 20/3
        let pr = priors(0.8);
        let mix = mixture_closed_form(ScenarioKind::Sim, 2, &pr).unwrap();
        let w = reconstruction_weights(&mix, &pr).unwrap();
        let (z0, z1, zu) = (0.7, -1.2, 0.3);
        let scores = TupleScores::new(vec![z0, z1], 2).unwrap();
        let report =
            empirical_risk_general(&w, &pr, &scores, &[zu], LossKind::Sigmoid).unwrap();

        let sig = |m: f64| 1.0 / (1.0 + m.exp());
        let c1 = 17.0 / 24.0;
        let c2 = -17.0 / 6.0;
        let expected_tuple = 0.8 * c1 * (sig(z0) + sig(z1)) + 0.2 * c2 * (sig(-z0) + sig(-z1));
        let expected_unl = 0.8 * (-5.0 / 12.0) * sig(zu) + 0.2 * (20.0 / 3.0) * sig(-zu);
        assert_abs_diff_eq!(report.tuple_term, expected_tuple, epsilon = 1e-12);
        assert_abs_diff_eq!(report.unlabeled_term, expected_unl, epsilon = 1e-12);
        assert_abs_diff_eq!(
            report.raw_total,
            expected_tuple + expected_unl,
            epsilon = 1e-12
        );
    }

    #[test]
    fn symmetric_equals_general_on_symmetric_scenarios() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for kind in [ScenarioKind::Sim, ScenarioKind::Mix, ScenarioKind::NotAllNeg] {
            for tau in [0.2, 0.6, 0.8] {
                let pr = priors(tau);
                let n = 3;
                let mix = mixture_closed_form(kind, n, &pr).unwrap();
                let w = reconstruction_weights(&mix, &pr).unwrap();
                let sym = symmetric_weights(&mix, &pr).unwrap();
                for _ in 0..20 {
                    let flat: Vec<f64> = (0..n * 13).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let unl: Vec<f64> = (0..7).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let scores = TupleScores::new(flat.clone(), n).unwrap();
                    for loss_kind in LossKind::TRAINABLE {
                        let general =
                            empirical_risk_general(&w, &pr, &scores, &unl, loss_kind).unwrap();
                        let collapsed =
                            empirical_risk_symmetric(&sym, &flat, &unl, loss_kind).unwrap();
                        assert_abs_diff_eq!(
                            general.raw_total,
                            collapsed.raw_total,
                            epsilon = 1e-10
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn negative_raw_risk_is_reachable() {
        // mix at tau 0.8 has tuple multiplier -0.8; making l(z,+1) large on
        // tuple members drives the estimate negative
        let pr = priors(0.8);
        let mix = mixture_closed_form(ScenarioKind::Mix, 3, &pr).unwrap();
        let sym = symmetric_weights(&mix, &pr).unwrap();
        let flat = vec![-8.0; 30];
        let unl = vec![8.0; 10];
        let report = empirical_risk_symmetric(&sym, &flat, &unl, LossKind::Sigmoid).unwrap();
        assert!(report.raw_total < 0.0, "raw = {}", report.raw_total);
        let corrected = report.with_correction(&CorrectionSpec::Abs);
        assert!(corrected.corrected_total >= 0.0);
        assert_eq!(corrected.corrected_total, -report.raw_total);
    }

    #[test]
    fn shape_and_empty_errors() {
        let pr = priors(0.6);
        let mix = mixture_closed_form(ScenarioKind::Sim, 3, &pr).unwrap();
        let w = reconstruction_weights(&mix, &pr).unwrap();
        assert!(TupleScores::new(vec![0.0; 7], 3).is_err());
        let scores = TupleScores::new(vec![0.0; 4], 2).unwrap();
        assert!(matches!(
            empirical_risk_general(&w, &pr, &scores, &[0.0], LossKind::Sigmoid),
            Err(Error::ShapeMismatch { .. })
        ));
        let scores = TupleScores::new(vec![], 3).unwrap();
        assert!(matches!(
            empirical_risk_general(&w, &pr, &scores, &[0.0], LossKind::Sigmoid),
            Err(Error::EmptyInput { .. })
        ));
        let scores = TupleScores::new(vec![0.0; 3], 3).unwrap();
        assert!(matches!(
            empirical_risk_general(&w, &pr, &scores, &[], LossKind::Sigmoid),
            Err(Error::EmptyInput { .. })
        ));
    }
}
