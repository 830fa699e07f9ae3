use std::f64::consts::TAU;
use std::time::Instant;

use spectral_lab::bounds::{interval_constants, PeriodicProfile};
use spectral_lab::hausdorff::{
    binomial_tail_check, binomial_tail_ratio, covering_count, covering_factor, discretize, dyadic_enumerate,
    dyadic_model, measured_deltas, partition_level, regularize, CoveringParams, PhaseFamily, ProbeGrid,
    DEFAULT_ZERO_TOLERANCE,
};

fn linear() -> PhaseFamily {
    // f_3(k) = 1000 k
    PhaseFamily::Linear { beta: 1.0, gamma: 10.0 }
}

#[test]
fn linear_partition_matches_enumeration() {
    let level = partition_level(&linear(), (1.0, 2.0), 3, DEFAULT_ZERO_TOLERANCE).unwrap();
    assert_eq!(level.zeros.len(), 159);
    for (j, z) in (160..=318).zip(&level.zeros) {
        assert!((z - TAU * j as f64 / 1000.0).abs() <= level.tolerance, "j = {j}: {z}");
    }
    for l in level.lengths() {
        assert!((l - TAU / 1000.0).abs() <= 2.0 * level.tolerance);
        assert!((l - 0.006_283_2).abs() < 1e-5);
    }
    let b = level.check_bracket(0.0, 0.0);
    assert!(b.ok, "{b:?}");
    assert!((b.predicted.0 - b.predicted.1).abs() < 1e-18);
}

#[test]
fn linear_regularization_is_exact() {
    let phase = linear().level(3).unwrap();
    let level = partition_level(&linear(), (1.0, 2.0), 3, 1e-8).unwrap();
    let r = regularize(&level, &phase, (0.0, 0.0), ProbeGrid::default()).unwrap();
    assert!(r.sup_gap < 1e-6, "{}", r.sup_gap);
    assert!(r.max_mean <= 1e-9);
    assert_eq!(r.phase_bound, 0.0);
}

#[test]
fn discretization_fractions_in_linear_case() {
    let phase = linear().level(3).unwrap();
    let level = partition_level(&linear(), (1.0, 2.0), 3, 1e-10).unwrap();
    let probes = ProbeGrid { per_interval: 16, stride: 7 };
    let d = discretize(&level, &phase, 1, probes).unwrap();
    assert!((d.thresholds[0] - 1.0 / 12.0).abs() < 1e-15);
    // zero set 4/12, each sign set 1/2 − 2/12
    assert!(d.fraction_errors[0] < 1e-9, "{:?}", d.fraction_errors);
    assert!(d.identity_holds);
    for p in [1, 2, 3, 5, 8] {
        let d = discretize(&level, &phase, p, probes).unwrap();
        assert!(d.identity_holds);
        assert!(d.max_error <= 0.5 / p as f64 + 1e-15);
        assert!(d.fraction_errors.iter().all(|&e| e < 1e-9), "p = {p}: {:?}", d.fraction_errors);
    }
}

#[test]
fn trace_partition_respects_bracket() {
    let t = Instant::now();
    let family = PhaseFamily::Trace { v: 0.2, gamma: 10 };
    let r = interval_constants(1.0, 1.5, 0.2, 10.0).unwrap();
    let (d1, d2) = (1.0 - r.d1_ratio, r.d2_ratio - 1.0);
    let level = partition_level(&family, (1.0, 1.5), 6, DEFAULT_ZERO_TOLERANCE).unwrap();
    let phase = family.level(6).unwrap();
    assert!(level.zeros.len() > 100_000);
    let b = level.check_bracket(d1, d2);
    assert!(b.ok, "{b:?} against D = ({}, {})", r.d1_ratio, r.d2_ratio);
    let measured = measured_deltas(&level, &phase, 200).unwrap();
    let r = regularize(&level, &phase, measured, ProbeGrid { per_interval: 4, stride: 50 }).unwrap();
    assert!(r.within, "{r:?}");
    assert!(r.max_mean <= 1e-9);
    eprintln!("trace partition: {} zeros, {:?}", level.zeros.len(), t.elapsed());
}

#[test]
fn binomial_tail_values() {
    let (lhs, ratio) = binomial_tail_ratio(10, 0.0).unwrap();
    assert_eq!(lhs.to_string(), "638");
    assert!((ratio - 0.0623).abs() < 1e-4);
    let (lhs, ratio) = binomial_tail_ratio(1, 0.5).unwrap();
    assert_eq!(lhs.to_string(), "1");
    assert!((ratio - 1.0 / (2.0 * (-0.5f64).exp())).abs() < 1e-15);
    let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
    let t = Instant::now();
    let tail = binomial_tail_check(1..=60, &grid).unwrap();
    assert!(tail.max_ratio <= 2.0, "{tail:?}");
    assert_eq!(tail.cells, 660);
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert!(binomial_tail_ratio(201, 0.1).is_err());
}

#[test]
fn dyadic_counts() {
    assert_eq!(dyadic_model(0.5, 10).unwrap().strict, 56);
    let d = dyadic_model(0.5, 20).unwrap();
    assert_eq!(d.strict, 6196);
    assert_eq!(d.non_strict, 6196 + 15504);
    assert!((d.dim_strict - 0.6299).abs() < 1e-4);
    assert!(d.dim_strict <= d.alpha_bound + 0.05);
    assert!((d.alpha_bound + 0.05 - 0.8697).abs() < 1e-4);
    let one = dyadic_model(1.0, 20).unwrap();
    assert_eq!((one.strict, one.non_strict), (0, 1));
}

#[test]
fn dyadic_closed_form_matches_enumeration() {
    for n in 1..=16u32 {
        for i in 1..=9 {
            let eps = 0.1 * i as f64;
            let d = dyadic_model(eps, n).unwrap();
            assert_eq!(dyadic_enumerate(eps, n).unwrap(), (d.strict, d.non_strict), "N = {n}, eps = {eps}");
        }
    }
    let d = dyadic_model(0.5, 20).unwrap();
    assert_eq!(dyadic_enumerate(0.5, 20).unwrap(), (d.strict, d.non_strict));
    assert!(dyadic_model(0.5, 31).is_err());
}

#[test]
fn covering_factor_example() {
    assert!((covering_factor(1.0 / 12.0, 100.0, 1.0, 0, 1) - 0.353_333_333_333_333_3).abs() < 1e-15);
}

#[test]
fn covering_count_against_explicit_sets() {
    let params = CoveringParams {
        family: PhaseFamily::Linear { beta: TAU, gamma: 2.0 },
        interval: (0.0, 1.0),
        eps: 0.6,
        depth: 10,
        p: 1,
        i: 1,
        delta1: 0.0,
        delta2: 0.0,
        c0: 2.0,
    };
    let r = covering_count(&params).unwrap();
    let e = r.explicit.unwrap();
    assert!(e.sequences > 0);
    assert!(e.ok, "{e:?}");
    assert!(r.closed_form_dominates);
    // at γ = 2 the growth factor exceeds 1 and nothing is certified
    assert!(!r.certifies);
    let mut big = params.clone();
    big.family = PhaseFamily::Linear { beta: 1.0, gamma: 1e6 };
    big.eps = 1.0;
    let r = covering_count(&big).unwrap();
    assert!(r.explicit.is_none());
    assert!(r.certifies && r.alpha_eps < 1.0);
}

#[test]
fn covering_threshold_is_enforced() {
    let params = CoveringParams {
        family: PhaseFamily::Linear { beta: TAU, gamma: 2.0 },
        interval: (0.0, 1.0),
        eps: 0.1,
        depth: 4,
        p: 1,
        i: 1,
        delta1: 0.05,
        delta2: 0.05,
        c0: 2.0,
    };
    assert_eq!(covering_count(&params).unwrap_err().kind(), "HypothesisError");
}

#[test]
fn extremum_counting_rule() {
    assert_eq!(PeriodicProfile::sine().m(), 10);
    assert_eq!(PeriodicProfile::sine2().m(), 18);
}
