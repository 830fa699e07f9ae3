use num_traits::ToPrimitive;
use spectral_lab::propagate::{angle_diff, propagate_naive, trace_distance, transfer_chain};
use spectral_lab::{propagate, EnergyPoint, SparseSpec};

fn last_site(spec: &SparseSpec) -> u64 {
    spec.positions().last().unwrap().x.to_u64().unwrap() + 2
}

#[test]
fn gap_skipping_matches_site_by_site() {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for gamma in [2u64, 3] {
        for v in [0.5, -0.5] {
            let spec = SparseSpec::deterministic(v, gamma, 12).unwrap();
            let l = last_site(&spec);
            for phi in [0.0, std::f64::consts::FRAC_PI_4] {
                for i in 0..50 {
                    let k = 0.5 + 2.1 * i as f64 / 49.0;
                    let e = EnergyPoint::for_spec(&spec, k).unwrap();
                    let fast = propagate(&spec, &e, phi).unwrap();
                    let slow = propagate_naive(&spec, &e, phi, l).unwrap();
                    assert_eq!(fast.records.len(), slow.trace.records.len());
                    let (dt, dr) = trace_distance(&fast, &slow.trace);
                    worst = (worst.0.max(dt), worst.1.max(dr));
                    assert!(dt < 1e-10 && dr < 1e-10, "γ={gamma} v={v} φ={phi} k={k}: {dt:e} {dr:e}");
                    assert!(fast.radius_identity_residual() < 1e-12);
                    assert!(angle_diff(fast.start.theta, slow.trace.start.theta).abs() < 1e-15);
                }
            }
        }
    }
    eprintln!("worst θ / lnR divergence: {:e} / {:e}", worst.0, worst.1);
}

#[test]
fn random_positions_match_oracle() {
    for sample in 0..5 {
        let spec = SparseSpec::random(0.5, 3, 11, sample, 11).unwrap();
        let l = last_site(&spec);
        let e = EnergyPoint::for_spec(&spec, 1.9).unwrap();
        let fast = propagate(&spec, &e, 0.2).unwrap();
        let slow = propagate_naive(&spec, &e, 0.2, l).unwrap();
        let (dt, dr) = trace_distance(&fast, &slow.trace);
        assert!(dt < 1e-10 && dr < 1e-10);
    }
}

#[test]
fn norm_sandwich_on_naive_run() {
    let spec = SparseSpec::deterministic(0.5, 2, 11).unwrap();
    let k: f64 = 1.0;
    let e = EnergyPoint::for_spec(&spec, k).unwrap();
    let run = propagate_naive(&spec, &e, 0.0, 4096).unwrap();
    let d1 = 1.0 - k.cos();
    let d2 = 1.0 + k.cos();
    let u2: f64 = run.u[1..=4096].iter().map(|u| u * u).sum();
    let r2: f64 = run.ln_r().iter().map(|l| (2.0 * l).exp()).sum();
    assert!(d1 * u2 <= r2);
    assert!(r2 <= 2.0 * d2 * (u2 + run.u[0] * run.u[0]));
}

#[test]
fn chain_sandwiches_two_solutions() {
    let spec = SparseSpec::deterministic(0.5, 2, 12).unwrap();
    let e = EnergyPoint::for_spec(&spec, 1.3).unwrap();
    let chain = transfer_chain(&spec, &e);
    let dir = propagate(&spec, &e, 0.0).unwrap();
    let neu = propagate(&spec, &e, std::f64::consts::FRAC_PI_2).unwrap();
    let mut ratios = Vec::new();
    for ((c, a), b) in chain.records.iter().zip(&dir.records).zip(&neu.records) {
        let m = a.ln_r_after.max(b.ln_r_after);
        ratios.push(c.log_norm - m);
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo < 3.0, "{ratios:?}");
    assert!(chain.max_det_defect() < 1e-10);
}
