//! The acceptance suite: twelve end-to-end checks with pinned tolerances and
//! wall-time limits.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::time::Instant;

use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{example_table, increment_bracket, interval_constants, ratio_scan, scan_n0};
use crate::error::{Error, Result};
use crate::growth::{decompose, f_closed, f_quadrature, subordinate_estimate, power_norm_ratio};
use crate::hausdorff::{binomial_tail_check, dyadic_enumerate, dyadic_model};
use crate::model::{EnergyPoint, SparseSpec};
use crate::propagate::{angle_diff, propagate, propagate_naive, theta_derivative_trace, trace_distance, transfer_chain};
use crate::random::ensemble_growth;
use crate::wholeline::{check_decomposition, finite_matrices, WholeLineSpec};

/// `(id, name, wall-time limit in seconds)`.
pub const CRITERIA: [(u8, &str, f64); 12] = [
    (1, "oracle equivalence", 10.0),
    (2, "F identity", 1.0),
    (3, "random growth rate", 60.0),
    (4, "increment bracket", 60.0),
    (5, "derivative ratio", 30.0),
    (6, "binomial tail", 1.0),
    (7, "dyadic model", 10.0),
    (8, "example table", 1.0),
    (9, "whole-line split", 10.0),
    (10, "subordinate symmetry", 30.0),
    (11, "norm ratio growth", 5.0),
    (12, "growth bracket", 120.0),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    /// The check itself, ignoring time.
    pub check_passed: bool,
    pub within_time: bool,
    pub passed: bool,
    pub detail: String,
    pub elapsed_s: f64,
    pub limit_s: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<22} {:>8.3}s / {:>5.0}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.limit_s,
            self.detail
        )
    }
}

type Check = Result<(bool, String)>;

/// Run one criterion by id. Errors inside a check count as failures.
pub fn run_criterion(id: u8) -> Result<CriterionOutcome> {
    let &(id, name, limit_s) =
        CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| Error::Domain(format!("no criterion {id}")))?;
    let t = Instant::now();
    let result = match id {
        1 => oracle_equivalence(),
        2 => f_identity(),
        3 => random_growth_rate(),
        4 => increment_bracket_check(),
        5 => derivative_ratio(),
        6 => binomial_tail(),
        7 => dyadic(),
        8 => example(),
        9 => whole_line(),
        10 => subordinate_symmetry(),
        11 => norm_ratio(),
        _ => growth_bracket(),
    };
    let elapsed_s = t.elapsed().as_secs_f64();
    let (check_passed, detail) = result.unwrap_or_else(|e| (false, format!("{}: {e}", e.kind())));
    let within_time = elapsed_s < limit_s;
    Ok(CriterionOutcome {
        id,
        name,
        check_passed,
        within_time,
        passed: check_passed && within_time,
        detail,
        elapsed_s,
        limit_s,
    })
}

/// All twelve criteria in order, one at a time so timings do not interfere.
pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0).expect("known id")).collect()
}

fn oracle_equivalence() -> Check {
    let mut jobs = Vec::new();
    for gamma in [2u64, 3] {
        for v in [0.5, -0.5] {
            for phi in [0.0, FRAC_PI_4] {
                for i in 0..50 {
                    jobs.push((gamma, v, phi, 0.5 + 2.1 * i as f64 / 49.0));
                }
            }
        }
    }
    let worst = jobs
        .par_iter()
        .map(|&(gamma, v, phi, k)| {
            let spec = SparseSpec::deterministic(v, gamma, 12)?;
            let e = EnergyPoint::for_spec(&spec, k)?;
            let l = gamma.pow(12) + 2;
            let fast = propagate(&spec, &e, phi)?;
            let slow = propagate_naive(&spec, &e, phi, l)?;
            if fast.records.len() != slow.trace.records.len() {
                return Err(Error::Numerical("oracle recorded a different barrier count".into()));
            }
            Ok(trace_distance(&fast, &slow.trace))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok((worst.0 < 1e-10 && worst.1 < 1e-10, format!("400 runs, max |Δθ| {:.2e}, max |ΔlnR| {:.2e} (tol 1e-10)", worst.0, worst.1)))
}

fn f_identity() -> Check {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let v = 0.1 * i as f64;
        worst = worst.max((f_quadrature(v)? - f_closed(v)).abs());
    }
    Ok((worst < 1e-9, format!("max |quadrature − closed form| {worst:.2e} (tol 1e-9)")))
}

const ENSEMBLE: (f64, u64, usize, usize, u64) = (0.5, 2, 500, 200, 7);

fn random_growth_rate() -> Check {
    let (v, gamma, depth, samples, seed) = ENSEMBLE;
    let bits = EnergyPoint::new(SQRT_2, v, depth, gamma)?.bits();
    let r = ensemble_growth(v, gamma, SQRT_2, depth, samples, seed)?;
    let a = &r.aggregate;
    let tol = f64::max(3.0 * a.stderr, 1e-4);
    let dev = (a.mean - 0.030_312_3).abs();
    Ok((
        dev < tol && bits >= 564,
        format!(
            "mean {:.7} ± {:.1e}, |mean − 0.0303123| {dev:.2e} < {tol:.2e}; F(v_k) = {:.7}; {bits} bits",
            a.mean, a.stderr, a.predicted
        ),
    ))
}

fn increment_bracket_check() -> Check {
    let (v, gamma, depth, samples, seed) = ENSEMBLE;
    let (d1, d2) = increment_bracket(SQRT_2, SQRT_2, v)?;
    let extremes = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let spec = SparseSpec::random(v, gamma, seed, i, depth)?;
            let e = EnergyPoint::for_spec(&spec, SQRT_2)?;
            let d = decompose(&propagate(&spec, &e, 0.0)?, e.v_k())?;
            let (_, lo, hi) = d.bracket(d1, d2);
            Ok((lo, hi))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    Ok((
        d1 <= extremes.0 && extremes.1 <= d2,
        format!("v_k²/8 + g_n ∈ [{:.6e}, {:.6e}] ⊂ [d1, d2] = [{d1:.6e}, {d2:.6e}]", extremes.0, extremes.1),
    ))
}

fn derivative_ratio() -> Check {
    let (v, gamma) = (0.2, 10u64);
    let r = interval_constants(1.0, 1.5, v, gamma as f64)?;
    let corridor = (r.d1_ratio - 0.01, r.d2_ratio + 0.01);
    let scan = ratio_scan(1.0, 1.5, v, gamma, 30, 200, corridor)?;
    let n0 = scan_n0(&scan);
    let ks: Vec<f64> = scan.iter().map(|p| p.k).collect();
    let fd_err = ks
        .par_iter()
        .map(|&k| {
            let mut worst = 0.0f64;
            let spec = SparseSpec::deterministic(v, gamma, 8)?;
            let psi = theta_derivative_trace(&spec, &EnergyPoint::for_spec(&spec, k)?, 1)?;
            for n in 1..=8usize {
                let x = (gamma as f64).powi(n as i32);
                let h = 0.1 / x;
                let level = spec.with_depth(n)?;
                let at = |k: f64| -> Result<f64> {
                    Ok(propagate(&level, &EnergyPoint::for_spec(&level, k)?, 0.0)?.records[n - 1].thetabar_at)
                };
                let (kp, km) = (k + h, k - h);
                let fd = angle_diff(at(kp)?, at(km)?) / (kp - km) / x;
                worst = worst.max((fd / psi[n - 1].psi - 1.0).abs());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((
        n0 <= 10 && fd_err < 1e-4,
        format!(
            "n0 = {n0} (≤ 10) for ψ ∈ ({:.5}, {:.5}); finite-difference rel err {fd_err:.2e} (tol 1e-4)",
            corridor.0, corridor.1
        ),
    ))
}

fn binomial_tail() -> Check {
    let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
    let t = binomial_tail_check(1..=60, &grid)?;
    Ok((t.max_ratio <= 2.0, format!("max ratio {:.5} at n = {}, ε = {:.2} (c0 = 2)", t.max_ratio, t.argmax.0, t.argmax.1)))
}

fn dyadic() -> Check {
    let d = dyadic_model(0.5, 20)?;
    let (strict, _) = dyadic_enumerate(0.5, 20)?;
    let ok = d.strict == 6196 && strict == 6196 && (d.dim_strict - 0.6299).abs() < 5e-5 && d.dim_strict <= d.alpha_bound + 0.05;
    Ok((ok, format!("count {} (enumerated {strict}), dim {:.4} ≤ {:.4}", d.strict, d.dim_strict, d.alpha_bound + 0.05)))
}

fn example() -> Check {
    let rows = example_table(0.1, 1e6, -1.9, 1.9, 100)?;
    let mut worst = 0.0f64;
    let mut ok = rows.len() == 100;
    for row in &rows {
        let literal = 1.0 - (1.0 + 1.0 / (100.0 * (4.0 - row.e * row.e))).ln() / (6.0 * 10f64.ln());
        worst = worst.max((row.alpha1 - literal).abs()).max((row.alpha2 - literal).abs());
        ok &= row.ae_inside && row.alpha1prime >= 0.9 && row.alpha2prime <= 1.0 - 1e-6;
    }
    ok &= worst <= 1e-12;
    Ok((ok, format!("100 energies, max |α − literal| {worst:.2e}, all α' ⊂ [0.9, 1 − 1e-6]: {ok}")))
}

fn whole_line() -> Check {
    let half = SparseSpec::deterministic(0.5, 2, 7)?;
    let mut worst = 0.0f64;
    let mut ok = true;
    for phi in [0.0, FRAC_PI_4] {
        let c = check_decomposition(&finite_matrices(&WholeLineSpec::new(half.clone(), phi), 200)?);
        ok &= c.agrees(1e-10);
        worst = worst.max(c.max_diff);
    }
    Ok((ok, format!("L = 200, max eigenvalue gap {worst:.2e} (tol 1e-10)")))
}

fn subordinate_symmetry() -> Check {
    let spec = SparseSpec::deterministic(1.0, 8, 25)?;
    let mut defects = Vec::new();
    for k in [1.0, 1.3, 1.8] {
        let e = EnergyPoint::for_spec(&spec, k)?;
        let est = subordinate_estimate(&transfer_chain(&spec, &e), &propagate(&spec, &e, 0.0)?, 8.0, None)?;
        defects.push(est.symmetry_defect());
    }
    let worst = defects.iter().copied().fold(0.0, f64::max);
    Ok((worst <= 0.15, format!("relative defects {:.3?} (tol 0.15)", defects)))
}

fn norm_ratio() -> Check {
    let sites = (1..=8u32).map(|n| (BigUint::from(1u32) << (n * n) as usize, 1.0)).collect();
    let spec = SparseSpec::explicit(sites)?;
    let e = EnergyPoint::for_spec(&spec, 1.2)?;
    let r = power_norm_ratio(&spec, &e, 0.9)?;
    let gain = r.log_gain().exp();
    Ok((gain >= 10.0, format!("ratio grows by {gain:.3e} from level 1 to 8 (need ≥ 10)")))
}

fn growth_bracket() -> Check {
    let (v, gamma, depth) = (1.0, 8u64, 300usize);
    let spec = SparseSpec::deterministic(v, gamma, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ks: Vec<f64> = (0..500).map(|_| 0.6 + 1.9 * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64).collect();
    let rows = ks
        .par_iter()
        .map(|&k| {
            let r = interval_constants(k, k, v, gamma as f64)?;
            let rate = propagate(&spec, &EnergyPoint::for_spec(&spec, k)?, 0.0)?.final_ln_r() / depth as f64;
            Ok((r.growth_lo <= rate && rate <= r.growth_hi, r.growth_hi - r.growth_lo))
        })
        .collect::<Result<Vec<(bool, f64)>>>()?;
    let frac = rows.iter().filter(|r| r.0).count() as f64 / rows.len() as f64;
    let mut widths: Vec<f64> = rows.iter().map(|r| r.1).collect();
    widths.sort_by(f64::total_cmp);
    Ok((
        frac >= 0.9,
        format!("{:.1}% of 500 k inside [c1, c2] (need ≥ 90%), median width {:.3}", 100.0 * frac, widths[widths.len() / 2]),
    ))
}
