//! Checks the closed-form left-inverse weights against an independent
//! SVD pseudo-inverse of the stacked mixture matrix.

use nalgebra::DMatrix;
use tuplerisk_core::coefficients::{
    comp_closed_weights, mixture_from_enumeration, reconstruction_weights, Priors,
};
use tuplerisk_core::scenario::{ScenarioKind, ScenarioSpec};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// The normal-equation solve loses up to kappa^2 * eps relative accuracy,
/// so the oracle tolerance scales with the squared condition number.
fn tolerance(n: usize, sigma_min: f64) -> f64 {
    let sigma_max_bound = ((n + 1) as f64).sqrt();
    let kappa = sigma_max_bound / sigma_min;
    1e-10 + 100.0 * f64::EPSILON * kappa * kappa
}

fn pinv_rows(alpha: &[f64], beta: &[f64], priors: &Priors) -> (Vec<f64>, Vec<f64>) {
    let n = alpha.len();
    let mut stacked = DMatrix::zeros(n + 1, 2);
    for j in 0..n {
        stacked[(j, 0)] = alpha[j];
        stacked[(j, 1)] = beta[j];
    }
    stacked[(n, 0)] = priors.tau_plus();
    stacked[(n, 1)] = priors.tau_minus();
    let pinv = stacked
        .svd(true, true)
        .pseudo_inverse(1e-13)
        .expect("pseudo-inverse");
    let row = |r: usize| (0..n + 1).map(|c| pinv[(r, c)]).collect::<Vec<f64>>();
    (row(0), row(1))
}

#[test]
fn gamma_form_weights_match_svd_pseudo_inverse() {
    for kind in ScenarioKind::ALL {
        for n in [2usize, 3, 5, 8] {
            for i in 1..=9 {
                let tau = i as f64 / 10.0;
                // sim and mix are uninformative at equal priors
                if tau == 0.5 && matches!(kind, ScenarioKind::Sim | ScenarioKind::Mix) {
                    continue;
                }
                let priors = Priors::new(tau).unwrap();
                let spec = ScenarioSpec::named(kind, n).unwrap();
                let mix = mixture_from_enumeration(&spec, &priors).unwrap();
                let weights = match reconstruction_weights(&mix, &priors) {
                    Ok(w) => w,
                    // extreme priors push some subsets against the prior
                    // row; those are flagged singular and carry no weights
                    Err(tuplerisk_core::Error::SingularMixture { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                let (row_pos, row_neg) = pinv_rows(&mix.alpha, &mix.beta, &priors);
                let tol = tolerance(n, weights.conditioning);
                for j in 0..n {
                    assert!(
                        rel_err(weights.c1[j], row_pos[j]) < tol,
                        "{kind} n={n} tau={tau} c1[{j}]: {} vs {}",
                        weights.c1[j],
                        row_pos[j]
                    );
                    assert!(rel_err(weights.c2[j], row_neg[j]) < tol);
                }
                assert!(rel_err(weights.d1, row_pos[n]) < tol);
                assert!(rel_err(weights.d2, row_neg[n]) < tol);
            }
        }
    }
}

#[test]
fn comp_closed_weights_match_svd_pseudo_inverse() {
    for n in [2usize, 3, 6] {
        for tau in [0.2, 0.5, 0.8] {
            let priors = Priors::new(tau).unwrap();
            let weights = comp_closed_weights(&priors, n).unwrap();
            let spec = ScenarioSpec::named(ScenarioKind::Comp, n).unwrap();
            let mix = mixture_from_enumeration(&spec, &priors).unwrap();
            let (row_pos, row_neg) = pinv_rows(&mix.alpha, &mix.beta, &priors);
            let tol = tolerance(n, weights.conditioning);
            for j in 0..n {
                assert!(rel_err(weights.c1[j], row_pos[j]) < tol);
                assert!(rel_err(weights.c2[j], row_neg[j]) < tol);
            }
            assert!(rel_err(weights.d1, row_pos[n]) < tol);
            assert!(rel_err(weights.d2, row_neg[n]) < tol);
        }
    }
}
