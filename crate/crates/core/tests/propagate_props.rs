use proptest::prelude::*;

use spectral_lab::propagate::{barrier_map, propagate_naive, trace_distance};
use spectral_lab::{propagate, EnergyPoint, SparseSpec};

fn amplitude() -> impl Strategy<Value = f64> {
    (0.05f64..0.9, any::<bool>()).prop_map(|(a, neg)| if neg { -a } else { a })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_skipping_matches_site_by_site(
        k in 0.3f64..2.8,
        v in amplitude(),
        gamma in 2u64..=3,
        phi in -1.5f64..=std::f64::consts::FRAC_PI_2,
        random in any::<bool>(),
        seed in 0u64..1000,
    ) {
        let depth = if gamma == 2 { 10 } else { 6 };
        let spec = if random {
            SparseSpec::random(v, gamma, seed, 0, depth).unwrap()
        } else {
            SparseSpec::deterministic(v, gamma, depth).unwrap()
        };
        let e = EnergyPoint::for_spec(&spec, k).unwrap();
        let fast = propagate(&spec, &e, phi).unwrap();
        let last: u64 = spec.positions().last().unwrap().x.clone().try_into().unwrap();
        let slow = propagate_naive(&spec, &e, phi, last + 2).unwrap();
        let (dt, dr) = trace_distance(&fast, &slow.trace);
        prop_assert!(dt < 1e-9 && dr < 1e-9, "dθ {dt:e} dlnR {dr:e}");
        prop_assert!(fast.radius_identity_residual() < 1e-12);
    }

    #[test]
    fn barrier_map_preserves_the_vector(thetabar in -10.0f64..10.0, v in -0.95f64..0.95) {
        let (theta, dln) = barrier_map(thetabar, v).unwrap();
        let (s, c) = thetabar.sin_cos();
        let (x, y) = (c + v * s, s);
        let scale = dln.exp();
        prop_assert!((scale * theta.cos() - x).abs() < 1e-12);
        prop_assert!((scale * theta.sin() - y).abs() < 1e-12);
    }
}
