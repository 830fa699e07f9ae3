//! Interval partitions, regularised phases and discretisations used by the
//! covering argument for exceptional sets of slowly averaging sums.
//!
//! For a steep increasing phase `f_n` on `I`, the points where `f_n ≡ 0 mod 2π`
//! cut `I` into intervals `I_{n,j}`. On each one `f_n` is replaced by the
//! linear interpolant `φ_n` through its endpoints, so `X_n = sin φ_n` is an
//! exact sine period there, and `X_n` is then rounded to a `p`-level step
//! function.

mod counting;

pub use counting::{
    binomial_tail_check, binomial_tail_ratio, covering_count, covering_factor, dyadic_enumerate, dyadic_model,
    BinomialTail, CoveringParams, CoveringReport, DepthBound, DyadicCount, ExplicitCover,
};

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EnergyPoint, SparseSpec};
use crate::propagate::{propagate, theta_derivative_trace};
use crate::quadrature::integrate;

/// Default zero-finding tolerance, relative to the shortest predicted interval.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-3;

/// A family of phases `f_n` indexed by level.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseFamily {
    /// `f_n(k) = β γⁿ k`.
    Linear { beta: f64, gamma: f64 },
    /// `f_n(k) = 2 θ̄(x_n, k)` for the Dirichlet solution of `V = v` at `x_n = γⁿ`.
    Trace { v: f64, gamma: u64 },
}

impl PhaseFamily {
    pub fn beta(&self) -> f64 {
        match self {
            PhaseFamily::Linear { beta, .. } => *beta,
            PhaseFamily::Trace { .. } => 2.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            PhaseFamily::Linear { gamma, .. } => *gamma,
            PhaseFamily::Trace { gamma, .. } => *gamma as f64,
        }
    }

    /// `β γⁿ`, the nominal slope of `f_n`.
    pub fn scale(&self, n: usize) -> f64 {
        self.beta() * self.gamma().powi(n as i32)
    }

    pub fn level(&self, n: usize) -> Result<LevelPhase> {
        if n == 0 {
            return Err(Error::Domain("levels start at 1".into()));
        }
        let spec = match self {
            PhaseFamily::Linear { beta, gamma } => {
                if !(*beta > 0.0 && *gamma > 1.0) {
                    return Err(Error::Domain(format!("need beta > 0 and gamma > 1, got {beta}, {gamma}")));
                }
                None
            }
            PhaseFamily::Trace { v, gamma } => Some(SparseSpec::deterministic(*v, *gamma, n)?),
        };
        Ok(LevelPhase { n, scale: self.scale(n), spec })
    }
}

/// `f_n` at a fixed level, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct LevelPhase {
    pub n: usize,
    pub scale: f64,
    spec: Option<SparseSpec>,
}

impl LevelPhase {
    /// `f_n(k) mod 2π`, in `[0, 2π)`.
    ///
    /// Trace phases are evaluated by a fresh propagation at `k`.
    pub fn wrapped(&self, k: f64) -> Result<f64> {
        let raw = match &self.spec {
            None => self.scale * k,
            Some(spec) => {
                let e = EnergyPoint::for_spec(spec, k)?;
                let trace = propagate(spec, &e, 0.0)?;
                2.0 * trace.records.last().expect("depth >= 1").thetabar_at
            }
        };
        Ok(raw.rem_euclid(TAU))
    }

    /// `f_n'(k)/(β γⁿ)`; for trace phases this is `θ̄'(x_n)/x_n`.
    pub fn normalized_slope(&self, k: f64) -> Result<f64> {
        match &self.spec {
            None => Ok(1.0),
            Some(spec) => {
                let e = EnergyPoint::for_spec(spec, k)?;
                Ok(theta_derivative_trace(spec, &e, 1)?.last().expect("depth >= 1").psi)
            }
        }
    }
}

/// Interval decomposition of `I` at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionLevel {
    pub n: usize,
    pub interval: (f64, f64),
    /// `β γⁿ`.
    pub scale: f64,
    /// Sorted `k_{n,j}` with `f_n(k_{n,j}) ≡ 0 mod 2π`.
    pub zeros: Vec<f64>,
    /// Absolute tolerance on every zero.
    pub tolerance: f64,
}

/// Measured interval lengths against the predicted bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketCheck {
    pub predicted: (f64, f64),
    pub min_len: f64,
    pub max_len: f64,
    /// Lengths inside the bracket widened by twice the zero tolerance.
    pub ok: bool,
}

impl PartitionLevel {
    pub fn lengths(&self) -> Vec<f64> {
        self.zeros.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.zeros.windows(2).map(|w| (w[0], w[1]))
    }

    /// `I ∖ [K₁, K₂]` as the pieces left and right of the first and last zero.
    pub fn edges(&self) -> ((f64, f64), (f64, f64)) {
        let (lo, hi) = self.interval;
        match (self.zeros.first(), self.zeros.last()) {
            (Some(&a), Some(&b)) => ((lo, a), (b, hi)),
            _ => ((lo, hi), (hi, hi)),
        }
    }

    /// Lengths against `[2π/(β D₂ γⁿ), 2π/(β D₁ γⁿ)]` with `D₁ = 1 − δ₁`, `D₂ = 1 + δ₂`.
    pub fn check_bracket(&self, delta1: f64, delta2: f64) -> BracketCheck {
        let predicted = (TAU / (self.scale * (1.0 + delta2)), TAU / (self.scale * (1.0 - delta1)));
        let lengths = self.lengths();
        let min_len = lengths.iter().copied().fold(f64::INFINITY, f64::min);
        let max_len = lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = 2.0 * self.tolerance;
        let ok = !lengths.is_empty() && min_len >= predicted.0 - slack && max_len <= predicted.1 + slack;
        BracketCheck { predicted, min_len, max_len, ok }
    }

    /// Index `j` with `k ∈ I_{n,j}`, if `k` lies between the first and last zero.
    pub fn locate(&self, k: f64) -> Option<usize> {
        let z = &self.zeros;
        if z.len() < 2 || k < z[0] || k > z[z.len() - 1] {
            return None;
        }
        let j = z.partition_point(|&x| x <= k);
        Some(j.saturating_sub(1).min(z.len() - 2))
    }

    /// `φ_n(k) mod 2π`: linear on each `I_{n,j}`, equal to `f_n` on the edges.
    pub fn regularized_phase(&self, phase: &LevelPhase, k: f64) -> Result<f64> {
        match self.locate(k) {
            Some(j) => {
                let (a, b) = (self.zeros[j], self.zeros[j + 1]);
                Ok(TAU * (k - a) / (b - a))
            }
            None => phase.wrapped(k),
        }
    }
}

/// Zeros of `f_n mod 2π` on `[lo, hi]`, by monotone bracketing and bisection.
///
/// The probe grid advances the nominal phase by `π/3` per cell; a measured
/// advance of `π` or more (or a retreat) means `f_n` is not increasing at the
/// predicted rate and raises [`Error::Monotonicity`].
pub fn partition_level(family: &PhaseFamily, interval: (f64, f64), n: usize, rel_tol: f64) -> Result<PartitionLevel> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain(format!("relative tolerance must lie in (0, 1), got {rel_tol}")));
    }
    let phase = family.level(n)?;
    let scale = phase.scale;
    let h_target = (PI / 3.0) / (1.5 * scale);
    let cells = ((hi - lo) / h_target).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&k| phase.wrapped(k)).collect::<Result<_>>()?;
    let tolerance = rel_tol * TAU / (scale * 1.5);

    let mut crossings = Vec::new();
    if values[0] == 0.0 {
        crossings.push(None);
    }
    for i in 0..cells {
        let step = (values[i + 1] - values[i]).rem_euclid(TAU);
        if step >= PI {
            return Err(Error::Monotonicity(grid[i]));
        }
        if values[i] + step >= TAU {
            crossings.push(Some(i));
        }
    }
    let zeros: Vec<f64> = crossings
        .par_iter()
        .map(|c| match *c {
            None => Ok(lo),
            Some(i) => {
                let (mut a, mut b) = (grid[i], grid[i + 1]);
                let base = values[i];
                let need = TAU - base;
                while b - a > tolerance {
                    let m = 0.5 * (a + b);
                    let g = (phase.wrapped(m)? - base).rem_euclid(TAU);
                    // the advance within a cell is below π; a value near 2π is a tiny retreat
                    if g >= need && g < PI {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                Ok(0.5 * (a + b))
            }
        })
        .collect::<Result<_>>()?;
    Ok(PartitionLevel { n, interval, scale, zeros, tolerance })
}

/// Partitions for every level in `levels`.
pub fn partition_levels(
    family: &PhaseFamily,
    interval: (f64, f64),
    levels: std::ops::RangeInclusive<usize>,
    rel_tol: f64,
) -> Result<Vec<PartitionLevel>> {
    levels.map(|n| partition_level(family, interval, n, rel_tol)).collect()
}

/// Range of `f_n'/(β γⁿ)` over `I`, as `(δ₁, δ₂)` with `D₁ = 1 − δ₁`, `D₂ = 1 + δ₂`.
///
/// Combines pointwise slopes at `samples` values of `k` with the mean slope
/// `2π/|I_{n,j}|` of every interval, so both local and averaged extremes count.
pub fn measured_deltas(level: &PartitionLevel, phase: &LevelPhase, samples: usize) -> Result<(f64, f64)> {
    let (lo, hi) = level.interval;
    let n = samples.max(2);
    let ks: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let slopes: Vec<f64> = ks.par_iter().map(|&k| phase.normalized_slope(k)).collect::<Result<_>>()?;
    let means = level.lengths().into_iter().map(|l| TAU / (l * level.scale));
    let (mn, mx) = slopes.into_iter().chain(means).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s), b.max(s)));
    Ok(((1.0 - mn).max(0.0), (mx - 1.0).max(0.0)))
}

/// Probe settings for [`regularize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    /// Probes per examined interval.
    pub per_interval: usize,
    /// Examine every `stride`-th interval.
    pub stride: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self { per_interval: 8, stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regularization {
    pub n: usize,
    /// Measured `sup |sin f_n − X_n|` on the probe grid.
    pub sup_gap: f64,
    /// `(π/2)(δ₁ + δ₂)/(1 − δ₁)`.
    pub gap_bound: f64,
    /// `2π(√D₂ − √D₁)/(√D₂ + √D₁)`, the sharper phase bound.
    pub phase_bound: f64,
    /// Largest `|∫_{I_{n,j}} X_n| / |I_{n,j}|` over the examined intervals.
    pub max_mean: f64,
    pub within: bool,
}

/// Compare `sin f_n` with `X_n = sin φ_n` and check the per-interval means.
pub fn regularize(level: &PartitionLevel, phase: &LevelPhase, deltas: (f64, f64), probes: ProbeGrid) -> Result<Regularization> {
    let (d1, d2) = deltas;
    let gap_bound = PI / 2.0 * (d1 + d2) / (1.0 - d1);
    let (s1, s2) = ((1.0 - d1).sqrt(), (1.0 + d2).sqrt());
    let phase_bound = TAU * (s2 - s1) / (s2 + s1);
    let stride = probes.stride.max(1);
    let per = probes.per_interval.max(1);
    let picked: Vec<(f64, f64)> = level.intervals().step_by(stride).collect();
    let stats: Vec<(f64, f64)> = picked
        .par_iter()
        .map(|&(a, b)| {
            let mut gap = 0.0f64;
            for q in 0..per {
                let k = a + (b - a) * (q as f64 + 0.5) / per as f64;
                let x = (TAU * (k - a) / (b - a)).sin();
                gap = gap.max((phase.wrapped(k)?.sin() - x).abs());
            }
            let mean = integrate(|k| (TAU * (k - a) / (b - a)).sin(), a, b, 1e-13 * (b - a))? / (b - a);
            Ok((gap, mean.abs()))
        })
        .collect::<Result<_>>()?;
    let sup_gap = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let max_mean = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(Regularization { n: level.n, sup_gap, gap_bound, phase_bound, max_mean, within: sup_gap <= gap_bound.max(1e-9) })
}

/// `a_i = arcsin((i − ½)/p)/(2π)` for `i = 1, …, p`.
pub fn thresholds(p: usize) -> Vec<f64> {
    (1..=p).map(|i| ((i as f64 - 0.5) / p as f64).asin() / TAU).collect()
}

/// `Y = ⌊p X + ½⌋ / p` as the integer `p Y`.
pub fn level_index(x: f64, p: usize) -> i64 {
    (p as f64 * x + 0.5).floor() as i64
}

/// `Y_{n,i}`: the sign of `Y` where `|Y| ≥ i/p`, else 0.
pub fn component(y_index: i64, i: usize) -> i64 {
    if y_index.unsigned_abs() >= i as u64 {
        y_index.signum()
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discretization {
    pub p: usize,
    pub thresholds: Vec<f64>,
    /// `max |X_n − Y_n|` over the probes; at most `1/(2p)`.
    pub max_error: f64,
    /// `p Y_n = Σ_i Y_{n,i}` at every probe.
    pub identity_holds: bool,
    /// Per `i`, the largest deviation of the zero, `+1` and `−1` set fractions
    /// from `4a_i`, `½ − 2a_i`, `½ − 2a_i` over the examined intervals.
    pub fraction_errors: Vec<f64>,
}

/// First point in `[a, b]` where a monotone predicate flips, by bisection.
fn flip_point<F: Fn(f64) -> bool>(pred: F, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Round `X_n` to `p` levels and check the component identities.
///
/// Set fractions are measured by locating where `X_n` crosses `±(i − ½)/p`
/// on each monotone quarter of every examined interval.
pub fn discretize(level: &PartitionLevel, phase: &LevelPhase, p: usize, probes: ProbeGrid) -> Result<Discretization> {
    if p == 0 {
        return Err(Error::Domain("p must be at least 1".into()));
    }
    let a = thresholds(p);
    let stride = probes.stride.max(1);
    let per = probes.per_interval.max(1);
    let x_at = |k: f64| -> f64 { level.regularized_phase(phase, k).map(f64::sin).unwrap_or(f64::NAN) };
    let picked: Vec<(f64, f64)> = level.intervals().step_by(stride).collect();
    let results: Vec<(f64, bool, Vec<f64>)> = picked
        .par_iter()
        .map(|&(lo, hi)| {
            let len = hi - lo;
            let mut err = 0.0f64;
            let mut identity = true;
            for q in 0..per * 4 {
                let k = lo + len * (q as f64 + 0.5) / (per * 4) as f64;
                let x = x_at(k);
                let y = level_index(x, p);
                err = err.max((x - y as f64 / p as f64).abs());
                identity &= (1..=p).map(|i| component(y, i)).sum::<i64>() == y;
            }
            let quarter = |q: f64| lo + len * q;
            let dev = (1..=p)
                .map(|i| {
                    let c = (i as f64 - 0.5) / p as f64;
                    let up1 = flip_point(|k| x_at(k) >= c, quarter(0.0), quarter(0.25));
                    let up2 = flip_point(|k| x_at(k) < c, quarter(0.25), quarter(0.5));
                    let dn1 = flip_point(|k| x_at(k) < -c, quarter(0.5), quarter(0.75));
                    let dn2 = flip_point(|k| x_at(k) >= -c, quarter(0.75), quarter(1.0));
                    let plus = (up2 - up1) / len;
                    let minus = (dn2 - dn1) / len;
                    let zero = 1.0 - plus - minus;
                    let ai = a[i - 1];
                    (zero - 4.0 * ai).abs().max((plus - (0.5 - 2.0 * ai)).abs()).max((minus - (0.5 - 2.0 * ai)).abs())
                })
                .collect();
            (err, identity, dev)
        })
        .collect();
    let max_error = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let identity_holds = results.iter().all(|r| r.1);
    let mut fraction_errors = vec![0.0f64; p];
    for r in &results {
        for (e, d) in fraction_errors.iter_mut().zip(&r.2) {
            *e = e.max(*d);
        }
    }
    Ok(Discretization { p, thresholds: a, max_error, identity_holds, fraction_errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_for_one_level() {
        let a = thresholds(1);
        assert!((a[0] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn components_sum_to_level() {
        for p in 1..6 {
            for y in -(p as i64)..=(p as i64) {
                assert_eq!((1..=p).map(|i| component(y, i)).sum::<i64>(), y);
            }
        }
        assert_eq!(level_index(0.49, 1), 0);
        assert_eq!(level_index(0.5, 1), 1);
        assert_eq!(level_index(-0.5, 1), 0);
        assert_eq!(level_index(-0.51, 1), -1);
    }

    #[test]
    fn locate_inside_and_outside() {
        let level = PartitionLevel { n: 1, interval: (0.0, 1.0), scale: 1.0, zeros: vec![0.2, 0.5, 0.9], tolerance: 0.0 };
        assert_eq!(level.locate(0.1), None);
        assert_eq!(level.locate(0.2), Some(0));
        assert_eq!(level.locate(0.6), Some(1));
        assert_eq!(level.locate(0.9), Some(1));
        assert_eq!(level.locate(0.95), None);
    }
}
