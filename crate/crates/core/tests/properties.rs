//! Property tests for the structural invariants.

use proptest::prelude::*;
use tuplerisk_core::coefficients::{mixture_closed_form, Priors};
use tuplerisk_core::data::{load_points_csv, save_points_csv, PointSet};
use tuplerisk_core::losses::{loss, LossKind};
use tuplerisk_core::risk::{correct, CorrectionSpec};
use tuplerisk_core::scenario::{LabelVector, ScenarioKind, ScenarioSpec};

fn scenario_kind() -> impl Strategy<Value = ScenarioKind> {
    prop_oneof![
        Just(ScenarioKind::Comp),
        Just(ScenarioKind::Sim),
        Just(ScenarioKind::Mix),
        Just(ScenarioKind::NotAllNeg),
    ]
}

proptest! {
    #[test]
    fn mixture_rows_are_proper(
        kind in scenario_kind(),
        n in 2usize..=10,
        tau in 0.01f64..0.99,
    ) {
        let priors = Priors::new(tau).unwrap();
        let mix = mixture_closed_form(kind, n, &priors).unwrap();
        prop_assert!(mix.z > 0.0 && mix.z <= 1.0);
        for j in 0..n {
            prop_assert!((mix.alpha[j] + mix.beta[j] - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&mix.alpha[j]));
            prop_assert!((0.0..=1.0).contains(&mix.beta[j]));
        }
        if kind != ScenarioKind::Comp {
            prop_assert!(mix.row_deviation() == 0.0);
        }
    }

    #[test]
    fn loss_is_non_negative_and_margin_symmetric(
        z in -50.0f64..50.0,
        kind_idx in 0usize..4,
    ) {
        let kind = [
            LossKind::Sigmoid,
            LossKind::Logistic,
            LossKind::DoubleHinge,
            LossKind::ZeroOne,
        ][kind_idx];
        let lp = loss(kind, z, 1).unwrap();
        let ln = loss(kind, -z, -1).unwrap();
        prop_assert!(lp >= 0.0);
        prop_assert_eq!(lp, ln);
    }

    #[test]
    fn correction_is_non_negative_idempotent_identity_on_positive(
        x in -10.0f64..10.0,
        k in 0.01f64..10.0,
    ) {
        for spec in [
            CorrectionSpec::Relu,
            CorrectionSpec::Abs,
            CorrectionSpec::generalized(k).unwrap(),
        ] {
            let once = correct(x, &spec);
            prop_assert!(once >= 0.0);
            prop_assert_eq!(correct(once, &spec), once);
            if x >= 0.0 {
                prop_assert_eq!(once, x);
            }
        }
    }

    #[test]
    fn custom_membership_matches_enumeration(
        n in 2usize..=6,
        picks in prop::collection::vec(0u64..64, 1..10),
        probe in 0u64..64,
    ) {
        let full = 1u64 << n;
        let vectors: Vec<LabelVector> = picks
            .iter()
            .map(|&k| {
                let entries = (0..n)
                    .map(|p| if (k % full) >> (n - 1 - p) & 1 == 1 { -1 } else { 1 })
                    .collect();
                LabelVector::new(entries).unwrap()
            })
            .collect();
        let deduped: std::collections::HashSet<_> = vectors.iter().cloned().collect();
        prop_assume!((deduped.len() as u64) < full);
        let spec = ScenarioSpec::custom(n, vectors).unwrap();
        let listed = spec.enumerate_labels().unwrap();
        let probe_vec = {
            let entries = (0..n)
                .map(|p| if (probe % full) >> (n - 1 - p) & 1 == 1 { -1 } else { 1 })
                .collect();
            LabelVector::new(entries).unwrap()
        };
        prop_assert_eq!(
            spec.contains(&probe_vec).unwrap(),
            listed.contains(&probe_vec)
        );
    }

    #[test]
    fn point_csv_round_trips_losslessly(
        dim in 1usize..=4,
        rows in prop::collection::vec(
            (prop::option::of(prop::bool::ANY), prop::collection::vec(-1e6f64..1e6, 4)),
            1..20,
        ),
    ) {
        let labels: Vec<Option<i8>> = rows
            .iter()
            .map(|(l, _)| l.map(|b| if b { 1 } else { -1 }))
            .collect();
        let features: Vec<f64> = rows
            .iter()
            .flat_map(|(_, f)| f[..dim].iter().copied())
            .collect();
        let points = PointSet { dim, features, labels };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        save_points_csv(&path, &points).unwrap();
        let loaded = load_points_csv(&path).unwrap();
        prop_assert_eq!(points, loaded);
    }
}
