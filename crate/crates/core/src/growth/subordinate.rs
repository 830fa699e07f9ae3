//! Subordinate-solution decay and norm ratios over long gaps.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::{fit_exponents, ExponentFit};
use crate::error::{Error, Result};
use crate::model::{EnergyPoint, SparseSpec};
use crate::propagate::{propagate, svd2, PruferTrace, TransferChain};

/// Minimum depth for a subordinate fit.
pub const MIN_SUBORDINATE_DEPTH: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubordinateEstimate {
    /// Fitted per-level slope of `ln ‖T(x_n) w‖` for the subordinate direction `w`.
    pub decay: ExponentFit,
    /// Fitted per-level slope of `ln R(x_n + 1)` from the accompanying trace.
    pub growth: ExponentFit,
    /// Fitted per-level slope of `t_n = ln ‖T(x_n)‖`.
    pub norm_growth: ExponentFit,
    pub direction: [f64; 2],
    /// `ln ‖T(x_n) w‖` per level.
    pub log_decay: Vec<f64>,
    /// Bracket `[lower, upper]` on `s_n = Σ_{m ≥ 0} t_{n+m}^{−2}`.
    pub s_n: Vec<(f64, f64)>,
    /// `‖T(x_n) w‖ / ‖T(x_n) ū‖` with `ū` the top right singular vector at the last level.
    pub ratio_to_growing: Vec<f64>,
    /// `σ_max σ_min` of the unscaled product, per level.
    pub singular_products: Vec<f64>,
}

impl SubordinateEstimate {
    pub fn decay_exponent(&self) -> f64 {
        self.decay.slope
    }

    /// `|decay + growth| / growth`.
    pub fn symmetry_defect(&self) -> f64 {
        (self.decay.slope + self.growth.slope).abs() / self.growth.slope.abs()
    }
}

/// Decaying solution from the smallest singular direction at the deepest level.
///
/// All three slopes share one window, by default every level. The direction
/// is exact only at the last level; below it `ln ‖T w‖ + t_n` is a bounded
/// but lumpy nonnegative term, so short windows give noisy slopes.
///
/// `s_n` is closed beyond the last level with the geometric tail implied by
/// the fitted norm growth rate, giving an interval rather than a point.
pub fn subordinate_estimate(
    chain: &TransferChain,
    trace: &PruferTrace,
    gamma: f64,
    window: Option<(usize, usize)>,
) -> Result<SubordinateEstimate> {
    let n = chain.records.len();
    if n < MIN_SUBORDINATE_DEPTH {
        return Err(Error::Domain(format!("subordinate estimate needs >= {MIN_SUBORDINATE_DEPTH} levels, got {n}")));
    }
    let window = Some(window.unwrap_or((1, n)));
    let t = chain.log_norms();
    let norm_growth = fit_exponents(&t, window, gamma)?;
    let noise = f64::max(3.0 * norm_growth.stderr, 1e-3);
    if norm_growth.slope <= noise {
        return Err(Error::NoGrowth(format!(
            "ln ‖T(x_n)‖ slope {:.3e} does not exceed {noise:.3e}",
            norm_growth.slope
        )));
    }
    let last = chain.records.last().expect("nonempty");
    let svd = svd2(&last.unit);
    let w = svd.v_min;
    let top = svd.v_max;
    let log_decay: Vec<f64> = chain.records.iter().map(|r| r.log_apply(&w)).collect();
    let ratio_to_growing = chain
        .records
        .iter()
        .map(|r| (r.unit * w).norm() / (r.unit * top).norm())
        .collect();
    let singular_products = chain
        .records
        .iter()
        .map(|r| {
            let s = svd2(&r.unit);
            s.sigma_max * s.sigma_min * (2.0 * r.log_factor).exp()
        })
        .collect();
    let decay = fit_exponents(&log_decay, window, gamma)?;
    let growth = fit_exponents(&trace.ln_r(), window, gamma)?;

    let g = norm_growth.slope;
    let tail = (-2.0 * t[n - 1]).exp() * (-2.0 * g).exp() / (1.0 - (-2.0 * g).exp());
    let mut s_n = vec![(0.0, 0.0); n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc += (-2.0 * t[i]).exp();
        s_n[i] = (acc, acc + tail);
    }
    Ok(SubordinateEstimate {
        decay,
        growth,
        norm_growth,
        direction: [w.x, w.y],
        log_decay,
        s_n,
        ratio_to_growing,
        singular_products,
    })
}

/// Natural logarithm of an arbitrary-precision integer.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    (x >> shift as usize).to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln ‖R‖²_{x_n}` for every barrier, summing constant segments.
///
/// `R` equals `R(x_{m−1} + 1)` on `[x_{m−1} + 1, x_m]` (with `x_0 = 0` and
/// `R(1)` from the trace start), so `‖R‖²_{x_n} = Σ_{m ≤ n} (x_m − x_{m−1}) R(x_{m−1}+1)²`.
pub fn segment_log_norm2(trace: &PruferTrace) -> Vec<f64> {
    let mut acc = f64::NEG_INFINITY;
    let mut prev_x = BigUint::zero();
    let mut prev_ln_r = trace.start.ln_r;
    trace
        .records
        .iter()
        .map(|r| {
            let len = &r.x - &prev_x;
            acc = log_add(acc, ln_big(&len) + 2.0 * prev_ln_r);
            prev_x = r.x.clone();
            prev_ln_r = r.ln_r_after;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerNormRatio {
    pub beta: f64,
    /// `ln(‖R‖²_{x_n} / ‖P‖_{x_n}^{2β})`.
    pub log_ratio: Vec<f64>,
}

impl PowerNormRatio {
    pub fn ratio(&self) -> Vec<f64> {
        self.log_ratio.iter().map(|l| l.exp()).collect()
    }

    /// `ln(last / first)`.
    pub fn log_gain(&self) -> f64 {
        match (self.log_ratio.first(), self.log_ratio.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// Norm ratio of the Dirichlet solution `R` to the `β`-th power of the
/// Neumann solution `P` (`w(1) = 0`), at `L = x_n`.
pub fn power_norm_ratio(spec: &SparseSpec, energy: &EnergyPoint, beta: f64) -> Result<PowerNormRatio> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    let r = segment_log_norm2(&propagate(spec, energy, 0.0)?);
    let p = segment_log_norm2(&propagate(spec, energy, std::f64::consts::FRAC_PI_2)?);
    let log_ratio = r.iter().zip(&p).map(|(a, b)| a - beta * b).collect();
    Ok(PowerNormRatio { beta, log_ratio })
}
