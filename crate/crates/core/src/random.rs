//! Random-offset ensembles and the number-theoretic diagnostics behind them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::{f_closed, fit_exponents};
use crate::model::{EnergyPoint, SparseSpec};
use crate::propagate::propagate;
use crate::quadrature::integrate;

/// One member of a random ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleResult {
    pub sample_index: u64,
    pub seed: u64,
    /// Fitted per-level slope of `ln R(x_n + 1)`.
    pub slope: f64,
    /// `(1/N) Σ ln-increments`.
    pub mean_increment: f64,
    /// `S_n / n` with `S_n = Σ_{m ≤ n} X_m` the centred increments.
    pub running_average: Vec<f64>,
}

impl SampleResult {
    /// `|S_{N/2}|/(N/2)` and `|S_N|/N`.
    pub fn half_and_full(&self) -> (f64, f64) {
        let n = self.running_average.len();
        let half = self.running_average.get((n / 2).wrapping_sub(1)).copied().unwrap_or(0.0);
        let full = self.running_average.last().copied().unwrap_or(0.0);
        (half.abs(), full.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleAggregate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub depth: usize,
    /// The predicted mean `½ ln(1 + v_k²/4)`.
    pub predicted: f64,
    /// `(mean − predicted) / stderr`, 0 when both vanish.
    pub z: f64,
    /// Fraction of samples whose running average shrinks from `N/2` to `N`.
    pub decreasing_fraction: f64,
    pub mean_abs_half: f64,
    pub mean_abs_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub v: f64,
    pub gamma: u64,
    pub k: f64,
    pub base_seed: u64,
    pub samples: Vec<SampleResult>,
    pub aggregate: EnsembleAggregate,
}

impl EnsembleResult {
    /// `|mean − predicted| < max(3 stderr, floor)`.
    pub fn agrees(&self, floor: f64) -> bool {
        (self.aggregate.mean - self.aggregate.predicted).abs() < f64::max(3.0 * self.aggregate.stderr, floor)
    }
}

/// Sum in a fixed binary tree, independent of thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn run_sample(v: f64, gamma: u64, k: f64, depth: usize, base_seed: u64, index: u64) -> Result<SampleResult> {
    let spec = if v == 0.0 {
        SparseSpec::free(gamma, depth)?
    } else {
        SparseSpec::random(v, gamma, base_seed, index, depth)?
    };
    let e = EnergyPoint::for_spec(&spec, k)?;
    let trace = propagate(&spec, &e, 0.0)?;
    let inc = trace.increments();
    let f = f_closed(e.v_k());
    let mut s = 0.0;
    let running_average = inc
        .iter()
        .enumerate()
        .map(|(i, x)| {
            s += x - f;
            s / (i + 1) as f64
        })
        .collect();
    let n = inc.len();
    let slope = if v == 0.0 {
        0.0
    } else {
        fit_exponents(&trace.ln_r(), Some((1, n)), gamma as f64).map(|fit| fit.slope).unwrap_or(f64::NAN)
    };
    Ok(SampleResult { sample_index: index, seed: base_seed, slope, mean_increment: pairwise_sum(&inc) / n as f64, running_average })
}

/// `M` independent random-offset propagations at depth `N`.
///
/// Member `i` uses stream `i` of `base_seed`, so the result is a pure function
/// of the arguments regardless of how the samples are scheduled.
pub fn ensemble_growth(v: f64, gamma: u64, k: f64, depth: usize, samples: usize, base_seed: u64) -> Result<EnsembleResult> {
    if samples < 2 {
        return Err(Error::Domain(format!("an ensemble needs at least 2 samples, got {samples}")));
    }
    let members: Vec<SampleResult> = (0..samples as u64)
        .into_par_iter()
        .map(|i| run_sample(v, gamma, k, depth, base_seed, i))
        .collect::<Result<_>>()?;
    let m = samples as f64;
    let means: Vec<f64> = members.iter().map(|s| s.mean_increment).collect();
    let mean = pairwise_sum(&means) / m;
    let dev: Vec<f64> = means.iter().map(|x| (x - mean).powi(2)).collect();
    let stderr = (pairwise_sum(&dev) / (m - 1.0)).sqrt() / m.sqrt();
    let predicted = f_closed(EnergyPoint::new(k, v, depth, gamma)?.v_k());
    let z = if stderr > 0.0 { (mean - predicted) / stderr } else { 0.0 };
    let pairs: Vec<(f64, f64)> = members.iter().map(SampleResult::half_and_full).collect();
    let decreasing = pairs.iter().filter(|(h, f)| f < h).count();
    let halves: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fulls: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let aggregate = EnsembleAggregate {
        mean,
        stderr,
        samples,
        depth,
        predicted,
        z,
        decreasing_fraction: decreasing as f64 / m,
        mean_abs_half: pairwise_sum(&halves) / m,
        mean_abs_full: pairwise_sum(&fulls) / m,
    };
    Ok(EnsembleResult { v, gamma, k, base_seed, samples: members, aggregate })
}

/// `½ ln(1 + v sin 2θ + v² sin² θ) − ½ ln(1 + v²/4)`, a zero-mean periodic function.
pub fn centered_log_amplitude(v_k: f64) -> impl Fn(f64) -> f64 + Sync {
    let f = f_closed(v_k);
    move |t: f64| {
        let (s, c) = t.sin_cos();
        0.5 * (v_k * 2.0 * s * c + v_k * v_k * s * s).ln_1p() - f
    }
}

/// Partial sums `Σ_{ℓ=1}^n f(θ + ℓk)` over a grid of starting angles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylReport {
    pub sup: f64,
    /// Running maximum of `|Σ|` up to `n = 2^j`, for `j = 0, 1, …`.
    pub dyadic_sup: Vec<f64>,
    /// Largest relative growth of the running maximum per doubling over the
    /// upper half of the dyadic windows.
    pub tail_growth: f64,
    pub bounded: bool,
}

/// Growth allowed per doubling for a sum to count as bounded.
pub const WEYL_GROWTH_TOLERANCE: f64 = 0.05;

/// Sup of the Weyl partial sums of `f` along the rotation by `k`.
///
/// `f` must have zero mean over a period; a nonzero mean would make the
/// sums grow linearly and is rejected up front.
pub fn weyl_sum_check<F: Fn(f64) -> f64 + Sync>(k: f64, f: F, n_max: usize, thetas: &[f64]) -> Result<WeylReport> {
    if n_max == 0 || thetas.is_empty() {
        return Err(Error::Domain("need n_max >= 1 and at least one starting angle".into()));
    }
    let mean = integrate(&f, 0.0, 2.0 * PI, 1e-12)? / (2.0 * PI);
    let scale = integrate(|t| f(t).abs(), 0.0, 2.0 * PI, 1e-10)? / (2.0 * PI);
    if mean.abs() > 1e-9 * scale.max(1e-300) {
        return Err(Error::Domain(format!("f must have zero mean, got {mean:e}")));
    }
    let windows = usize::BITS as usize - n_max.leading_zeros() as usize;
    let per_theta: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&theta| {
            let mut dyadic = vec![0.0f64; windows];
            let mut sum = 0.0;
            let mut best = 0.0f64;
            let step = k.rem_euclid(2.0 * PI);
            for l in 1..=n_max {
                let angle = theta + ((l as f64) * step).rem_euclid(2.0 * PI);
                sum += f(angle);
                best = best.max(sum.abs());
                if l.is_power_of_two() || l == n_max {
                    let j = usize::BITS as usize - 1 - l.leading_zeros() as usize;
                    let slot = if l.is_power_of_two() { j } else { windows - 1 };
                    dyadic[slot] = dyadic[slot].max(best);
                }
            }
            dyadic
        })
        .collect();
    let mut dyadic_sup = vec![0.0f64; windows];
    for d in &per_theta {
        for (a, b) in dyadic_sup.iter_mut().zip(d) {
            *a = a.max(*b);
        }
    }
    for j in 1..windows {
        dyadic_sup[j] = dyadic_sup[j].max(dyadic_sup[j - 1]);
    }
    let sup = *dyadic_sup.last().expect("nonempty");
    let start = (windows / 2).max(1);
    let tail_growth = (start..windows)
        .filter(|&j| dyadic_sup[j - 1] > 0.0)
        .map(|j| dyadic_sup[j] / dyadic_sup[j - 1] - 1.0)
        .fold(0.0, f64::max);
    Ok(WeylReport { sup, dyadic_sup, tail_growth, bounded: tail_growth < WEYL_GROWTH_TOLERANCE })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiophantineReport {
    /// `min q² dist(qx, ℤ)` over the range.
    pub min: f64,
    pub argmin: u64,
    /// Largest `q` in range with `q² dist(qx, ℤ) ≤ 1`, or `q_min − 1` if none.
    pub q0: u64,
}

/// Distance from `q x` to the nearest integer, exact for the binary value of `x`.
pub fn dist_to_integer(q: u64, x: f64) -> f64 {
    let bits = x.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    if e >= 0 {
        return 0.0;
    }
    let shift = (-e) as u32;
    let prod = u128::from(q) * u128::from(mant);
    let f = if shift >= 128 {
        prod as f64 * 2f64.powi(-(shift as i32))
    } else {
        let mask = (1u128 << shift) - 1;
        (prod & mask) as f64 * 2f64.powi(-(shift as i32))
    };
    f.min(1.0 - f)
}

/// `min_{q_min ≤ q ≤ q_max} q² dist(qx, ℤ)`.
pub fn diophantine_check(x: f64, q_max: u64, q_min: u64) -> Result<DiophantineReport> {
    if q_min < 1 || q_max < q_min {
        return Err(Error::Domain(format!("need 1 <= q_min <= q_max, got [{q_min}, {q_max}]")));
    }
    let mut report = DiophantineReport { min: f64::INFINITY, argmin: q_min, q0: q_min - 1 };
    for q in q_min..=q_max {
        let val = (q as f64).powi(2) * dist_to_integer(q, x);
        if val < report.min {
            report.min = val;
            report.argmin = q;
        }
        if val <= 1.0 {
            report.q0 = q;
        }
    }
    Ok(report)
}

/// Golden ratio `(1 + √5)/2`.
pub fn golden_ratio() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_exact_values() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn dist_exact() {
        assert_eq!(dist_to_integer(2, 0.5), 0.0);
        assert_eq!(dist_to_integer(1, 0.25), 0.25);
        assert_eq!(dist_to_integer(3, 0.75), 0.25);
        assert_eq!(dist_to_integer(5, 3.0), 0.0);
    }

    #[test]
    fn weyl_quarter_turn() {
        let r = weyl_sum_check(PI / 2.0, f64::sin, 1000, &[0.0]).unwrap();
        assert!((r.sup - 1.0).abs() < 1e-12);
        assert!(r.bounded);
    }

    #[test]
    fn weyl_rejects_nonzero_mean() {
        let e = weyl_sum_check(1.0, |t: f64| t.sin() + 0.1, 10, &[0.0]).unwrap_err();
        assert_eq!(e.kind(), "DomainError");
    }

    #[test]
    fn rational_fails_diophantine() {
        let r = diophantine_check(0.5, 10, 1).unwrap();
        assert_eq!(r.min, 0.0);
        assert_eq!(r.argmin, 2);
    }
}
