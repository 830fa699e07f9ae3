//! Closed-form constants and Hausdorff-dimension bounds.
//!
//! Every bound is rounded outward by two ulps: lower bounds down, upper
//! bounds up, so a report never claims more than the formulas give.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::{c0_range, f_closed, regime};
use crate::model::{EnergyPoint, SparseSpec};
use crate::propagate::theta_derivative_trace;

/// Relative margin of `D₁`, `D₂` beyond the fixed points `C₅`, `C₆`.
pub const DEFAULT_FIXED_POINT_MARGIN: f64 = 1e-3;
/// Relative margin of `C₁`, `C₂` beyond `d₁`, `d₂`.
pub const GROWTH_MARGIN: f64 = 1e-6;
/// `k` samples used to turn pointwise bounds into interval bounds.
pub const INTERVAL_SAMPLES: usize = 65;

fn down(x: f64) -> f64 {
    x.next_down().next_down()
}

fn up(x: f64) -> f64 {
    x.next_up().next_up()
}

/// `(C₃, C₄) = 1 + w²/2 ∓ w √(1 + w²/4)`, the range of the barrier denominator.
pub fn denominator_bounds(w2: f64) -> (f64, f64) {
    let base = 1.0 + 0.5 * w2 * w2;
    let spread = w2 * (1.0 + 0.25 * w2 * w2).sqrt();
    (base - spread, base + spread)
}

/// `(C₅, C₆) = ((γ−1)/(γ−C₃), (γ−1)/(γ−C₄))`.
pub fn ratio_fixed_points(w2: f64, gamma: f64) -> Result<(f64, f64)> {
    let (c3, c4) = denominator_bounds(w2);
    if gamma <= c4 {
        return Err(Error::Domain(format!("gamma = {gamma} must exceed C4 = {c4}")));
    }
    Ok(((gamma - 1.0) / (gamma - c3), (gamma - 1.0) / (gamma - c4)))
}

/// `|Δ − (1 + (Δ/c − 1)/γ)|`, zero at a fixed point.
pub fn fixed_point_residual(delta: f64, c: f64, gamma: f64) -> f64 {
    (delta - (1.0 + (delta / c - 1.0) / gamma)).abs()
}

/// `min |v_k|` and `max |v_k|` over `k ∈ [lo, hi]`.
pub fn coupling_range(k_lo: f64, k_hi: f64, v: f64) -> (f64, f64) {
    let (s_lo, s_hi) = (k_lo.sin(), k_hi.sin());
    let s_max = if (k_lo..=k_hi).contains(&(PI / 2.0)) { 1.0 } else { s_lo.max(s_hi) };
    let s_min = s_lo.min(s_hi);
    (v.abs() / s_max, v.abs() / s_min)
}

fn sample_ks(k_lo: f64, k_hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| k_lo + (k_hi - k_lo) * i as f64 / (n - 1) as f64)
}

/// Which hypotheses hold for a [`DimensionReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Validity {
    /// `w₂ + w₂² < 1`.
    pub regime: bool,
    /// `C₀ w₂³ < w₁²/8`, so `d₁ > 0`.
    pub d1_positive: bool,
    /// `(C₇/π)(w₂/2 + 3w₂²/8) < C₁`, the a.e.-`φ` growth condition.
    pub ae_growth: bool,
    /// Admissible `ε` exists for the all-`φ` argument.
    pub eps_window: bool,
    /// Pointwise a.e.-`φ` dimension bounds valid at every sampled `k`.
    pub ae_phi: bool,
    /// Pointwise all-`φ` dimension bounds valid at every sampled `k`.
    pub all_phi: bool,
}

/// Constants and dimension bounds for an interval `I = [k_lo, k_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub k_lo: f64,
    pub k_hi: f64,
    pub v: f64,
    pub gamma: f64,
    pub w1: f64,
    pub w2: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub d1: f64,
    pub d2: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C5")]
    pub c5: f64,
    #[serde(rename = "C6")]
    pub c6: f64,
    #[serde(rename = "D1")]
    pub d1_ratio: f64,
    #[serde(rename = "D2")]
    pub d2_ratio: f64,
    pub delta_fp: f64,
    /// Bound on `|v_k cot k sin² θ̄ / a|`.
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "C7")]
    pub c7: f64,
    #[serde(rename = "C7prime")]
    pub c7_prime: f64,
    /// Growth-rate bracket `C₁ − (C₇/π)(w₂/2 + 3w₂²/8)`, and its upper twin.
    pub growth_lo: f64,
    pub growth_hi: f64,
    pub n0: Option<usize>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub eps_k: f64,
    pub alpha1prime: f64,
    pub alpha2prime: f64,
    /// `ε` chosen just inside the admissible window, and its lower end `ε₀`.
    pub eps: f64,
    pub eps0: f64,
    pub alpha_eps: f64,
    pub valid: Validity,
}

impl DimensionReport {
    pub fn with_n0(mut self, n0: Option<usize>) -> Self {
        self.n0 = n0;
        self
    }

    /// `C₃ C₄ − 1`.
    pub fn product_defect(&self) -> f64 {
        self.c3 * self.c4 - 1.0
    }
}

/// Evaluate every constant for `I = [k_lo, k_hi]`, coupling `v`, sparsity `γ`.
pub fn interval_constants(k_lo: f64, k_hi: f64, v: f64, gamma: f64) -> Result<DimensionReport> {
    interval_constants_with(k_lo, k_hi, v, gamma, DEFAULT_FIXED_POINT_MARGIN)
}

fn cubic_bracket(w1: f64, w2: f64, v: f64) -> (f64, f64, f64) {
    let c0 = if v == 0.0 { 0.0 } else { c0_range(-v.signum() * w1, -v.signum() * w2, INTERVAL_SAMPLES) };
    let cubic = c0 * w2.powi(3);
    (c0, w1 * w1 / 8.0 - cubic, w2 * w2 / 8.0 + cubic)
}

/// `[d₁, d₂]` enclosing every non-oscillating increment `v_k²/8 + g_n` for
/// `k ∈ [k_lo, k_hi]`. Unlike [`interval_constants`] this needs no `γ`.
pub fn increment_bracket(k_lo: f64, k_hi: f64, v: f64) -> Result<(f64, f64)> {
    if !(k_lo > 0.0 && k_lo <= k_hi && k_hi < PI) {
        return Err(Error::Domain(format!("interval [{k_lo}, {k_hi}] must lie inside (0, pi)")));
    }
    let (w1, w2) = coupling_range(k_lo, k_hi, v);
    let (_, d1, d2) = cubic_bracket(w1, w2, v);
    Ok((d1, d2))
}

pub fn interval_constants_with(k_lo: f64, k_hi: f64, v: f64, gamma: f64, margin: f64) -> Result<DimensionReport> {
    if !(k_lo > 0.0 && k_lo <= k_hi && k_hi < PI) {
        return Err(Error::Domain(format!("interval [{k_lo}, {k_hi}] must lie inside (0, pi)")));
    }
    if !(gamma >= 3.0) {
        return Err(Error::Domain(format!("gamma must be at least 3, got {gamma}")));
    }
    if !(margin > 0.0) {
        return Err(Error::Domain(format!("fixed-point margin must be positive, got {margin}")));
    }
    let (w1, w2) = coupling_range(k_lo, k_hi, v);
    let (c3, c4) = denominator_bounds(w2);
    let (c5, c6) = ratio_fixed_points(w2, gamma)?;
    let (c0, d1, d2) = cubic_bracket(w1, w2, v);
    let c1 = down(d1 - GROWTH_MARGIN * d1.abs());
    let c2 = up(d2 + GROWTH_MARGIN * d2.abs());
    let delta_fp = margin * (c6 - c5);
    let (dd1, dd2) = (c5 - delta_fp, c6 + delta_fp);
    let cot_max = (k_lo.cos() / k_lo.sin()).abs().max((k_hi.cos() / k_hi.sin()).abs());
    let m = up(w2 * cot_max / c3);
    let curv = PI * dd2 * dd2 * c4 * c4 * (2.0 * w2 + w2 * w2) / (dd1 * dd1 * (gamma * gamma - 2.0));
    let c7 = up(curv.min((dd2 - dd1) / dd1));
    let r2 = regime(w2);
    let c7_prime = up((28.0 * r2 / (gamma - 2.0).powi(2)).min(2.0 * r2 / (gamma - 2.0)));
    let weight = w2 / 2.0 + 3.0 * w2 * w2 / 8.0;
    let growth_lo = down(c1 - c7 / PI * weight);
    let growth_hi = up(c2 + c7 / PI * weight);

    // growth window: ε·weight < C₁ − (π/2) C₇ weight, and ε > ε₀.
    let eps_max = if weight > 0.0 { (c1 - PI / 2.0 * c7 * weight) / weight } else { f64::INFINITY };
    let eps0 = up((2.0 * (10.0 * dd2 / (gamma * dd1)).ln_1p()).sqrt());
    let eps = if eps_max.is_finite() { down(eps_max * (1.0 - GROWTH_MARGIN)) } else { 1.0 };
    let eps_window = eps > eps0;
    let alpha_eps = covering_alpha(eps, dd1, dd2, gamma);

    let mut alpha1 = f64::INFINITY;
    let mut alpha2 = f64::NEG_INFINITY;
    let mut eps_k = f64::INFINITY;
    let mut alpha1prime = f64::INFINITY;
    let mut alpha2prime = f64::NEG_INFINITY;
    let (mut ae_ok, mut all_ok) = (gamma >= 5.0, gamma >= 5.0);
    for k in sample_ks(k_lo, k_hi, INTERVAL_SAMPLES) {
        let ae = dims_ae_phi(k, v, gamma);
        alpha1 = alpha1.min(ae.alpha1);
        alpha2 = alpha2.max(ae.alpha2);
        ae_ok &= ae.valid;
        let all = dims_all_phi(k, v, gamma);
        eps_k = eps_k.min(all.eps_k);
        alpha1prime = alpha1prime.min(all.alpha1prime);
        alpha2prime = alpha2prime.max(all.alpha2prime);
        all_ok &= all.valid;
    }

    let valid = Validity {
        regime: r2 < 1.0,
        d1_positive: d1 > 0.0,
        ae_growth: c1 > 0.0 && c7 / PI * weight < c1,
        eps_window: r2 < 1.0 && c1 > 0.0 && eps_window,
        ae_phi: ae_ok,
        all_phi: all_ok,
    };
    Ok(DimensionReport {
        k_lo,
        k_hi,
        v,
        gamma,
        w1,
        w2,
        c0,
        d1,
        d2,
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        d1_ratio: dd1,
        d2_ratio: dd2,
        delta_fp,
        m,
        c7,
        c7_prime,
        growth_lo,
        growth_hi,
        n0: None,
        alpha1,
        alpha2,
        eps_k,
        alpha1prime,
        alpha2prime,
        eps,
        eps0,
        alpha_eps,
        valid,
    })
}

/// Per-`k` outcome of the `θ̄'` ratio scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioScanPoint {
    pub k: f64,
    /// Last level with `ψ_n` outside the corridor, 0 if none.
    pub n0: usize,
    pub psi_min: f64,
    pub psi_max: f64,
}

/// `ψ_n = θ̄'(x_n)/x_n` over sampled `k ∈ I` against the corridor `(lo, hi)`.
///
/// `n₀` is the largest per-`k` exit level; `ψ_min`/`ψ_max` are taken over
/// the levels beyond it.
pub fn ratio_scan(
    k_lo: f64,
    k_hi: f64,
    v: f64,
    gamma: u64,
    depth: usize,
    samples: usize,
    corridor: (f64, f64),
) -> Result<Vec<RatioScanPoint>> {
    let spec = SparseSpec::deterministic(v, gamma, depth)?;
    sample_ks(k_lo, k_hi, samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            let e = EnergyPoint::for_spec(&spec, k)?;
            let psi: Vec<f64> = theta_derivative_trace(&spec, &e, 1)?.iter().map(|r| r.psi).collect();
            let n0 = psi.iter().rposition(|&p| !(p > corridor.0 && p < corridor.1)).map_or(0, |i| i + 1);
            let tail = &psi[n0.min(psi.len())..];
            let psi_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
            let psi_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(RatioScanPoint { k, n0, psi_min, psi_max })
        })
        .collect()
}

/// Largest `n₀` over a scan.
pub fn scan_n0(scan: &[RatioScanPoint]) -> usize {
    scan.iter().map(|p| p.n0).max().unwrap_or(0)
}

/// Dimension bounds for almost every boundary condition at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AeBounds {
    pub k: f64,
    pub v_k: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `28(|v_k|+v_k²) G(v_k) / (π(γ−2)²)`.
    pub correction: f64,
    pub valid: bool,
}

/// `α_{1,2} = 1 − 2(F(v_k) ± 28(|v_k|+v_k²)G(v_k)/(π(γ−2)²))/ln γ`.
///
/// Outside `|v_k| + v_k² < 1` the correction is infinite and the bounds
/// degenerate to `(−∞, +∞)` with `valid = false`.
pub fn dims_ae_phi(k: f64, v: f64, gamma: f64) -> AeBounds {
    let s = k.sin();
    let v_k = if s > 0.0 { -v / s } else { f64::INFINITY };
    let r = regime(v_k);
    let g = if r < 1.0 { -0.5 * (-r).ln_1p() } else { f64::INFINITY };
    let correction = 28.0 * r * g / (PI * (gamma - 2.0).powi(2));
    let f = f_closed(v_k);
    let ln_g = gamma.ln();
    let alpha1 = down(1.0 - 2.0 * (f + correction) / ln_g);
    let alpha2 = up(1.0 - 2.0 * (f - correction) / ln_g);
    let valid = gamma >= 5.0 && r < 1.0 && alpha2 < 1.0;
    AeBounds { k, v_k, alpha1, alpha2, correction, valid }
}

/// Dimension bounds for every boundary condition at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllPhiBounds {
    pub k: f64,
    pub v_k: f64,
    pub eps_k: f64,
    pub alpha1prime: f64,
    pub alpha2prime: f64,
    pub valid: bool,
}

/// `ε_k`, `α′₁`, `α′₂` for all boundary conditions.
pub fn dims_all_phi(k: f64, v: f64, gamma: f64) -> AllPhiBounds {
    let s = k.sin();
    let v_k = if s > 0.0 { -v / s } else { f64::INFINITY };
    let r = regime(v_k);
    let ln_g = gamma.ln();
    let alpha1prime = down(1.0 - r / ln_g);
    if !(r < 1.0) {
        return AllPhiBounds { k, v_k, eps_k: f64::NEG_INFINITY, alpha1prime, alpha2prime: f64::INFINITY, valid: false };
    }
    let num = (0.25 * v_k * v_k).ln_1p() - 14.0 * PI * r * r / ((gamma - 2.0).powi(2) * (1.0 - r));
    let eps_k = down(num / -(-r).ln_1p());
    let alpha2prime = up(1.0 - (eps_k * eps_k - 2.0 * (10.0 / (gamma - 2.0)).ln_1p()) / (2.0 * ln_g));
    let valid = gamma >= 5.0 && eps_k > 0.0 && alpha2prime < 1.0;
    AllPhiBounds { k, v_k, eps_k, alpha1prime, alpha2prime, valid }
}

/// `α(ε) = 1 − (ε² − 2 ln(1 + 10D₂/(γD₁)))/(2 ln γ)`.
pub fn covering_alpha(eps: f64, d1: f64, d2: f64, gamma: f64) -> f64 {
    up(1.0 - (eps * eps - 2.0 * (10.0 * d2 / (gamma * d1)).ln_1p()) / (2.0 * gamma.ln()))
}

/// Exact local dimension for the random-offset ensemble and its energy window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomDimension {
    pub dimension: f64,
    /// `(−√(4 − v²/(γ−1)), √(4 − v²/(γ−1)))`, `None` if empty.
    pub window: Option<(f64, f64)>,
    pub in_window: bool,
}

/// `1 − ln(1 + v²/(4 − E²))/ln γ`.
pub fn random_dimension(e: f64, v: f64, gamma: f64) -> Result<RandomDimension> {
    if !(e.abs() < 2.0) {
        return Err(Error::Domain(format!("|E| must be below 2, got {e}")));
    }
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    let dimension = 1.0 - (v * v / (4.0 - e * e)).ln_1p() / gamma.ln();
    let edge2 = 4.0 - v * v / (gamma - 1.0);
    let window = (edge2 > 0.0).then(|| {
        let j = edge2.sqrt();
        (-j, j)
    });
    let in_window = window.is_some_and(|(lo, hi)| e > lo && e < hi);
    Ok(RandomDimension { dimension, window, in_window })
}

/// Piecewise-monotone periodic function on `[0, 2π]`, by its breakpoints.
///
/// Breakpoints are the zeros and local extrema `0 = x₁ < … < x_m = 2π`;
/// between two zeros there is exactly one extremum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicProfile {
    pub breakpoints: Vec<(f64, f64)>,
    /// `‖G'‖∞`.
    pub derivative_sup: f64,
}

impl PeriodicProfile {
    pub fn new(breakpoints: Vec<(f64, f64)>, derivative_sup: f64) -> Result<Self> {
        let n = breakpoints.len();
        if n < 3 {
            return Err(Error::Hypothesis("profile needs at least three breakpoints".into()));
        }
        let (first, last) = (breakpoints[0], breakpoints[n - 1]);
        if first.0 != 0.0 || (last.0 - 2.0 * PI).abs() > 1e-12 || first.1 != last.1 {
            return Err(Error::Hypothesis("breakpoints must span [0, 2pi] periodically".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Hypothesis("breakpoints must be strictly increasing".into()));
        }
        if breakpoints.windows(2).any(|w| w[0].1 != 0.0 && w[1].1 != 0.0) {
            return Err(Error::Hypothesis("a nonzero breakpoint must be followed by a zero".into()));
        }
        if !(derivative_sup > 0.0 && derivative_sup.is_finite()) {
            return Err(Error::Hypothesis(format!("derivative bound must be positive, got {derivative_sup}")));
        }
        Ok(Self { breakpoints, derivative_sup })
    }

    pub fn sine() -> Self {
        let b = vec![(0.0, 0.0), (PI / 2.0, 1.0), (PI, 0.0), (1.5 * PI, -1.0), (2.0 * PI, 0.0)];
        Self::new(b, 1.0).expect("valid")
    }

    /// `sin 2x`.
    pub fn sine2() -> Self {
        let b = (0..=8)
            .map(|i| {
                let x = i as f64 * PI / 4.0;
                let y = [0.0, 1.0, 0.0, -1.0][i % 4];
                (if i == 8 { 2.0 * PI } else { x }, y)
            })
            .collect();
        Self::new(b, 2.0).expect("valid")
    }

    pub fn zeros(&self) -> usize {
        self.breakpoints.iter().filter(|b| b.1 == 0.0).count()
    }

    pub fn maxima(&self) -> usize {
        self.breakpoints.iter().filter(|b| b.1 > 0.0).count()
    }

    pub fn minima(&self) -> usize {
        self.breakpoints.iter().filter(|b| b.1 < 0.0).count()
    }

    /// Twice the zeros plus four times the larger extremum count.
    pub fn m(&self) -> usize {
        2 * self.zeros() + 4 * self.maxima().max(self.minima())
    }

    pub fn sup_plus(&self) -> f64 {
        self.breakpoints.iter().map(|b| b.1).fold(0.0, f64::max)
    }

    pub fn sup_minus(&self) -> f64 {
        self.breakpoints.iter().map(|b| -b.1).fold(0.0, f64::max)
    }

    /// `G(π + x) = −G(π − x)`, checked on the breakpoints.
    pub fn is_odd_about_pi(&self) -> bool {
        let b = &self.breakpoints;
        let n = b.len();
        (0..n).all(|i| {
            let (x, y) = b[i];
            let (xm, ym) = b[n - 1 - i];
            (x + xm - 2.0 * PI).abs() < 1e-12 && (y + ym).abs() < 1e-12
        })
    }

    /// `ε` normalisation: `‖G‖∞` for odd profiles, `‖G₊‖∞ + ‖G₋‖∞` otherwise.
    pub fn amplitude(&self) -> f64 {
        if self.is_odd_about_pi() {
            self.sup_plus().max(self.sup_minus())
        } else {
            self.sup_plus() + self.sup_minus()
        }
    }
}

/// Dimension bound on the exceptional set of the covering argument.
///
/// With no profile this is the sine case (`M = 10`, unit amplitude).
/// Errors when `ε` does not exceed the regularisation threshold.
pub fn appendix_alpha(eps: f64, delta1: f64, delta2: f64, gamma: f64, profile: Option<&PeriodicProfile>) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    if !((0.0..1.0).contains(&delta1) && (0.0..1.0).contains(&delta2)) {
        return Err(Error::Domain(format!("deltas must lie in [0, 1), got {delta1}, {delta2}")));
    }
    let sine = PeriodicProfile::sine();
    let g = profile.unwrap_or(&sine);
    let spread = (delta1 + delta2) / (1.0 - delta1);
    let threshold = PI / 2.0 * g.derivative_sup * spread;
    let base = eps / g.amplitude() - threshold;
    if !(base > 0.0) {
        return Err(Error::Hypothesis(format!(
            "eps = {eps} is not above the threshold {}",
            threshold * g.amplitude()
        )));
    }
    let cover = (g.m() as f64 / gamma * (1.0 + delta2) / (1.0 - delta1)).ln_1p();
    Ok(up(1.0 - (base * base - 2.0 * cover) / (2.0 * gamma.ln())))
}

/// One energy of the worked example: pointwise bounds against the enclosures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExampleRow {
    pub e: f64,
    pub k: f64,
    pub v_k: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `1 − ln(1 + v_k²/4)/ln γ`.
    pub centre: f64,
    /// `10/(γ² ln γ)`.
    pub corridor: f64,
    pub ae_inside: bool,
    pub alpha1prime: f64,
    pub alpha2prime: f64,
    /// `[1 − (|v_k|+v_k²)/ln γ, 1 − v_k²/(500 ln γ)]`.
    pub all_lo: f64,
    pub all_hi: f64,
    pub all_inside: bool,
}

/// Pointwise bounds on `count` energies spread over `[e_lo, e_hi]`.
pub fn example_table(v: f64, gamma: f64, e_lo: f64, e_hi: f64, count: usize) -> Result<Vec<ExampleRow>> {
    if !(-2.0 < e_lo && e_lo <= e_hi && e_hi < 2.0) {
        return Err(Error::Domain(format!("energies [{e_lo}, {e_hi}] must lie inside (-2, 2)")));
    }
    let ln_g = gamma.ln();
    let corridor = 10.0 / (gamma * gamma * ln_g);
    let n = count.max(1);
    Ok((0..n)
        .map(|i| {
            let e = if n == 1 { e_lo } else { e_lo + (e_hi - e_lo) * i as f64 / (n - 1) as f64 };
            let k = (e / 2.0).acos();
            let ae = dims_ae_phi(k, v, gamma);
            let all = dims_all_phi(k, v, gamma);
            let v_k = ae.v_k;
            let centre = 1.0 - (0.25 * v_k * v_k).ln_1p() / ln_g;
            let all_lo = 1.0 - regime(v_k) / ln_g;
            let all_hi = 1.0 - v_k * v_k / (500.0 * ln_g);
            ExampleRow {
                e,
                k,
                v_k,
                alpha1: ae.alpha1,
                alpha2: ae.alpha2,
                centre,
                corridor,
                ae_inside: ae.alpha1 >= centre - corridor && ae.alpha2 <= centre + corridor,
                alpha1prime: all.alpha1prime,
                alpha2prime: all.alpha2prime,
                all_lo,
                all_hi,
                all_inside: all.alpha1prime >= down(all_lo) && all.alpha2prime <= up(all_hi),
            }
        })
        .collect())
}
