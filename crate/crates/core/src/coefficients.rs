//! Mixture coefficients and risk-reconstruction weights.
//!
//! Every constrained label space induces, per tuple position, a marginal
//! feature distribution that is a two-component mixture of the class
//! conditionals: position j sees the positive class with weight
//!
//! ```text
//! alpha_j = sum over subset vectors with y_j = +1 of prod_k tau_{y_k} / Z,
//! Z       = sum over all subset vectors of prod_k tau_{y_k},
//! ```
//!
//! and the negative class with weight `beta_j = 1 - alpha_j`. Stacking the
//! N mixture rows with the unlabeled marginal row `(tau_+, tau_-)` gives a
//! consistent (N+1) x 2 linear system whose left inverse recovers the class
//! conditionals, and with them an unbiased rewrite of the supervised risk.
//! The left inverse is computed in closed form through the 2x2 normal
//! equations (the `gamma` quantities below); because the system is
//! consistent, this least-squares solve is exact.
//!
//! Two routes exist for the mixture weights: brute-force enumeration of the
//! subset, and per-scenario closed forms. They must agree to 1e-12, which
//! is what `verify-coeffs` checks on a grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{binomial, ScenarioKind, ScenarioSpec, MAX_TUPLE_SIZE};

/// Absolute tolerance on the symmetric-case denominator `alpha tau_- - beta tau_+`.
pub const SYMMETRIC_DENOM_TOL: f64 = 1e-9;

/// Relative tolerance on the 2x2 normal-matrix determinant. Below this
/// the left-inverse weights exceed ~1e5 in magnitude and their f64
/// representation alone breaks the 1e-10 identity contract, so such
/// mixtures are reported singular.
pub const NORMAL_DET_REL_TOL: f64 = 1e-8;

/// Class priors; the negative prior is always `1 - tau_plus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    tau_plus: f64,
}

impl Priors {
    pub fn new(tau_plus: f64) -> Result<Self> {
        if !(tau_plus > 0.0 && tau_plus < 1.0) || !tau_plus.is_finite() {
            return Err(Error::InvalidPrior { value: tau_plus });
        }
        Ok(Priors { tau_plus })
    }

    pub fn tau_plus(&self) -> f64 {
        self.tau_plus
    }

    pub fn tau_minus(&self) -> f64 {
        1.0 - self.tau_plus
    }

    fn tau(&self, label: i8) -> f64 {
        if label == 1 {
            self.tau_plus()
        } else {
            self.tau_minus()
        }
    }
}

/// Neumaier compensated accumulator; keeps grid-level oracle agreement at
/// 1e-12 even for the 2^10-term enumeration sums.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn compensated_total(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Per-position mixture weights and the subset's prior mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCoefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Prior mass of the subset; also the rejection sampler's acceptance rate.
    pub z: f64,
}

impl MixtureCoefficients {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Largest deviation of any row from the first row.
    pub fn row_deviation(&self) -> f64 {
        let a0 = self.alpha[0];
        self.alpha
            .iter()
            .map(|a| (a - a0).abs())
            .fold(0.0, f64::max)
    }
}

/// Left-inverse coefficients of the stacked mixture system, partitioned
/// into the per-position tuple weights and the unlabeled weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionWeights {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub d1: f64,
    pub d2: f64,
    /// Smallest singular value of the stacked matrix (diagnostic only).
    pub conditioning: f64,
}

impl ReconstructionWeights {
    pub fn n(&self) -> usize {
        self.c1.len()
    }

    /// Row sums of the left inverse applied to the all-ones column; both
    /// must be 1 because mixture rows and the prior row each sum to one.
    pub fn row_sums(&self) -> (f64, f64) {
        let s1 = compensated_total(self.c1.iter().copied()) + self.d1;
        let s2 = compensated_total(self.c2.iter().copied()) + self.d2;
        (s1, s2)
    }

    /// Largest residual over the four left-inverse identities and the two
    /// row-sum identities.
    ///
    /// Dot products are accumulated with exact two-products so the result
    /// reflects the weights' own defect, not measurement rounding (the
    /// weights reach ~1e5 near the singularity cutoff).
    pub fn max_identity_residual(&self, mix: &MixtureCoefficients, priors: &Priors) -> f64 {
        let dot = |w: &[f64], col: &[f64], tail: f64, d: f64| -> f64 {
            let mut acc = Dd::default();
            for (&wi, &ci) in w.iter().zip(col) {
                acc = acc.add(two_prod(wi, ci));
            }
            acc.add(two_prod(d, tail)).value()
        };
        let r11 = dot(&self.c1, &mix.alpha, priors.tau_plus(), self.d1) - 1.0;
        let r12 = dot(&self.c1, &mix.beta, priors.tau_minus(), self.d1);
        let r21 = dot(&self.c2, &mix.alpha, priors.tau_plus(), self.d2);
        let r22 = dot(&self.c2, &mix.beta, priors.tau_minus(), self.d2) - 1.0;
        let (s1, s2) = self.row_sums();
        [r11, r12, r21, r22, s1 - 1.0, s2 - 1.0]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

/// Collapsed weights for permutation-symmetric scenarios, where the risk
/// reduces to one tuple term and one unlabeled term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricWeights {
    /// Multiplies the tuple-wise mean of `loss(z,+1) - loss(z,-1)`.
    pub tuple_multiplier: f64,
    /// Coefficient of `loss(z,+1)` inside the unlabeled term.
    pub u_pos: f64,
    /// Coefficient of `loss(z,-1)` inside the unlabeled term.
    pub u_neg: f64,
    /// `alpha tau_- - beta tau_+`; sign may be negative, zero is singular.
    pub denom: f64,
}

/// Mixture weights by the cheapest exact route: closed forms for named
/// scenarios (no enumeration cap), enumeration for custom subsets.
pub fn mixture_for(spec: &ScenarioSpec, priors: &Priors) -> Result<MixtureCoefficients> {
    match spec.kind() {
        Some(kind) => mixture_closed_form(kind, spec.n(), priors),
        None => mixture_from_enumeration(spec, priors),
    }
}

/// Mixture weights by brute-force enumeration of the label subset.
///
/// Summation runs in canonical vector order with compensated accumulation,
/// so results are reproducible bit-for-bit and accurate to ~1e-15.
pub fn mixture_from_enumeration(spec: &ScenarioSpec, priors: &Priors) -> Result<MixtureCoefficients> {
    let n = spec.n();
    let labels = spec.enumerate_labels()?;
    let mut z = CompensatedSum::default();
    let mut alpha_mass = vec![CompensatedSum::default(); n];
    let mut beta_mass = vec![CompensatedSum::default(); n];
    for v in &labels {
        let mut product = 1.0;
        for &e in v.entries() {
            product *= priors.tau(e);
        }
        z.add(product);
        for (j, &e) in v.entries().iter().enumerate() {
            if e == 1 {
                alpha_mass[j].add(product);
            } else {
                beta_mass[j].add(product);
            }
        }
    }
    let z = z.value();
    let alpha: Vec<f64> = alpha_mass.iter().map(|a| a.value() / z).collect();
    let beta: Vec<f64> = beta_mass.iter().map(|b| b.value() / z).collect();
    Ok(MixtureCoefficients { alpha, beta, z })
}

/// Closed-form mixture weights for the named scenarios; defined for any
/// tuple size, with no enumeration involved.
pub fn mixture_closed_form(
    kind: ScenarioKind,
    n: usize,
    priors: &Priors,
) -> Result<MixtureCoefficients> {
    if !(2..=MAX_TUPLE_SIZE).contains(&n) {
        return Err(Error::InvalidTupleSize {
            n,
            reason: "closed forms require 2 <= n <= 63",
        });
    }
    let tp = priors.tau_plus();
    let tm = priors.tau_minus();
    // prior mass of a vector with k positives
    let mass = |k: usize| tp.powi(k as i32) * tm.powi((n - k) as i32);

    match kind {
        ScenarioKind::Comp => {
            let z = compensated_total((0..=n).map(mass));
            let mut alpha = Vec::with_capacity(n);
            let mut beta = Vec::with_capacity(n);
            for p in 0..n {
                // position p (0-based) is positive in the k-positive
                // threshold vector exactly when k >= p + 1
                alpha.push(compensated_total((p + 1..=n).map(mass)) / z);
                beta.push(compensated_total((0..=p).map(mass)) / z);
            }
            Ok(MixtureCoefficients { alpha, beta, z })
        }
        ScenarioKind::Sim => {
            let z = mass(n) + mass(0);
            Ok(MixtureCoefficients {
                alpha: vec![mass(n) / z; n],
                beta: vec![mass(0) / z; n],
                z,
            })
        }
        ScenarioKind::Mix => {
            let z = compensated_total((1..n).map(|m| binomial(n, m) as f64 * mass(m)));
            let pos = compensated_total((1..n).map(|m| binomial(n - 1, m - 1) as f64 * mass(m)));
            let neg = compensated_total((1..n).map(|m| binomial(n - 1, m) as f64 * mass(m)));
            Ok(MixtureCoefficients {
                alpha: vec![pos / z; n],
                beta: vec![neg / z; n],
                z,
            })
        }
        ScenarioKind::NotAllNeg => {
            let z = 1.0 - mass(0);
            let pos =
                mass(n) + compensated_total((1..n).map(|m| binomial(n - 1, m - 1) as f64 * mass(m)));
            let neg = compensated_total((1..n).map(|m| binomial(n - 1, m) as f64 * mass(m)));
            Ok(MixtureCoefficients {
                alpha: vec![pos / z; n],
                beta: vec![neg / z; n],
                z,
            })
        }
    }
}

/// Unevaluated double-length float: value = hi + lo, |lo| <= ulp(hi)/2.
///
/// The normal-matrix determinant cancels almost completely for mixtures
/// close to the prior row, so the gamma quantities and the determinant are
/// carried in double-double precision; weights then lose only the final
/// rounding to f64, which keeps the left-inverse identities at ~1e-13 even
/// on cells just above the singularity cutoff.
#[derive(Debug, Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let hi = a + b;
    let v = hi - a;
    let lo = (a - (hi - v)) + (b - v);
    Dd { hi, lo }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    Dd { hi, lo }
}

impl Dd {
    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let r = two_sum(s.hi, lo);
        Dd {
            hi: r.hi,
            lo: r.lo,
        }
    }

    fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        let r = two_sum(p.hi, lo);
        Dd {
            hi: r.hi,
            lo: r.lo,
        }
    }

    fn mul_f64(self, v: f64) -> Dd {
        self.mul(Dd::from(v))
    }

    /// One Newton refinement after the double division; accurate to ~1 ulp.
    fn div(self, den: Dd) -> f64 {
        let q0 = self.hi / den.hi;
        let r = self.sub(den.mul_f64(q0));
        q0 + r.hi / den.hi
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

struct Gammas {
    g1: Dd,
    g2: Dd,
    g3: Dd,
    det: Dd,
}

fn gammas(mix: &MixtureCoefficients, priors: &Priors) -> Result<Gammas> {
    let tp = priors.tau_plus();
    let tm = priors.tau_minus();
    let mut g1 = Dd::default();
    let mut g2 = Dd::default();
    let mut g3 = Dd::default();
    for (&a, &b) in mix.alpha.iter().zip(&mix.beta) {
        g1 = g1.add(two_prod(a, a));
        g2 = g2.add(two_prod(a, b));
        g3 = g3.add(two_prod(b, b));
    }
    g1 = g1.add(two_prod(tp, tp));
    g2 = g2.add(two_prod(tp, tm));
    g3 = g3.add(two_prod(tm, tm));
    let det = g1.mul(g3).sub(g2.mul(g2));
    if !(det.value() > NORMAL_DET_REL_TOL * g1.value() * g3.value()) {
        return Err(Error::SingularMixture {
            detail: format!(
                "normal-matrix determinant {:e} below relative tolerance",
                det.value()
            ),
        });
    }
    Ok(Gammas { g1, g2, g3, det })
}

/// Left-inverse weights of the stacked system, solved exactly through the
/// 2x2 normal equations. The smallest singular value of the stacked matrix
/// is reported as a conditioning diagnostic.
pub fn reconstruction_weights(
    mix: &MixtureCoefficients,
    priors: &Priors,
) -> Result<ReconstructionWeights> {
    if mix.alpha.len() != mix.beta.len() || mix.alpha.is_empty() {
        return Err(Error::ShapeMismatch {
            detail: format!(
                "mixture rows: {} alphas vs {} betas",
                mix.alpha.len(),
                mix.beta.len()
            ),
        });
    }
    let g = gammas(mix, priors)?;
    let tp = priors.tau_plus();
    let tm = priors.tau_minus();
    let row_pos = |a: f64, b: f64| g.g3.mul_f64(a).sub(g.g2.mul_f64(b)).div(g.det);
    let row_neg = |a: f64, b: f64| g.g1.mul_f64(b).sub(g.g2.mul_f64(a)).div(g.det);
    let c1 = mix
        .alpha
        .iter()
        .zip(&mix.beta)
        .map(|(&a, &b)| row_pos(a, b))
        .collect();
    let c2 = mix
        .alpha
        .iter()
        .zip(&mix.beta)
        .map(|(&a, &b)| row_neg(a, b))
        .collect();
    let d1 = row_pos(tp, tm);
    let d2 = row_neg(tp, tm);

    // sigma_min^2 is the smaller eigenvalue of the normal matrix; computed
    // as det / lambda_max to avoid cancellation
    let (g1, g2, g3) = (g.g1.value(), g.g2.value(), g.g3.value());
    let trace = g1 + g3;
    let gap = ((g1 - g3).powi(2) + 4.0 * g2 * g2).sqrt();
    let lambda_max = 0.5 * (trace + gap);
    let conditioning = (g.det.value() / lambda_max).sqrt();

    Ok(ReconstructionWeights {
        c1,
        c2,
        d1,
        d2,
        conditioning,
    })
}

/// Reconstruction weights for the comparison scenario straight from the
/// closed-form mixture, with no enumeration.
pub fn comp_closed_weights(priors: &Priors, n: usize) -> Result<ReconstructionWeights> {
    let mix = mixture_closed_form(ScenarioKind::Comp, n, priors)?;
    reconstruction_weights(&mix, priors)
}

/// Collapsed weights for a permutation-symmetric mixture.
pub fn symmetric_weights(mix: &MixtureCoefficients, priors: &Priors) -> Result<SymmetricWeights> {
    let max_dev = mix.row_deviation();
    if max_dev > SYMMETRIC_DENOM_TOL {
        return Err(Error::AsymmetricInput { max_dev });
    }
    let alpha = mix.alpha[0];
    let beta = mix.beta[0];
    let tp = priors.tau_plus();
    let tm = priors.tau_minus();
    let denom = alpha * tm - beta * tp;
    if denom.abs() < SYMMETRIC_DENOM_TOL {
        return Err(Error::SingularMixture {
            detail: format!("symmetric denominator {denom:e} below tolerance"),
        });
    }
    Ok(SymmetricWeights {
        tuple_multiplier: tp * tm / denom,
        u_pos: -beta * tp / denom,
        u_neg: alpha * tm / denom,
        denom,
    })
}
