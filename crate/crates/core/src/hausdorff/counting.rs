//! Exact counting behind the covering bounds: binomial tails, the dyadic
//! sign model, and covering-count certificates.

use std::f64::consts::{LN_2, PI, TAU};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{thresholds, PhaseFamily};
use crate::bounds::covering_alpha;
use crate::error::{Error, Result};

/// Decimal grid values such as `0.05 i` are compared with this guard so that
/// `ε n` lands on the intended side of an integer.
const GRID_GUARD: f64 = 1e-9;

/// Largest `n` accepted by the exact binomial checks.
pub const MAX_BINOMIAL_N: u64 = 200;
/// Largest depth for the dyadic model and its direct enumeration.
pub const MAX_DYADIC_DEPTH: u32 = 30;
pub const MAX_ENUMERATION_DEPTH: u32 = 24;

fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for j in 0..n {
        let next = &row[j as usize] * BigUint::from(n - j) / BigUint::from(j + 1);
        row.push(next);
    }
    row
}

/// `(Σ_{j ≤ ⌊n/2 − εn⌋} C(n, j), LHS / (n 2ⁿ e^{−2ε²n}))`.
pub fn binomial_tail_ratio(n: u64, eps: f64) -> Result<(BigUint, f64)> {
    if n == 0 || n > MAX_BINOMIAL_N {
        return Err(Error::Domain(format!("n must lie in [1, {MAX_BINOMIAL_N}], got {n}")));
    }
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0, 1/2], got {eps}")));
    }
    let limit = (n as f64 / 2.0 - eps * n as f64 + GRID_GUARD).floor();
    let row = binomial_row(n);
    let lhs: BigUint = if limit < 0.0 { BigUint::zero() } else { row.iter().take(limit as usize + 1).sum() };
    let rhs = n as f64 * 2f64.powi(n as i32) * (-2.0 * eps * eps * n as f64).exp();
    let ratio = lhs.to_f64().expect("below 2^200") / rhs;
    Ok((lhs, ratio))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialTail {
    pub max_ratio: f64,
    pub argmax: (u64, f64),
    pub cells: usize,
}

/// Largest tail ratio over an `(n, ε)` grid: the empirical `c₀`.
pub fn binomial_tail_check(n_range: std::ops::RangeInclusive<u64>, eps_grid: &[f64]) -> Result<BinomialTail> {
    let mut best = BinomialTail { max_ratio: f64::NEG_INFINITY, argmax: (0, 0.0), cells: 0 };
    for n in n_range {
        for &eps in eps_grid {
            let (_, r) = binomial_tail_ratio(n, eps)?;
            best.cells += 1;
            if r > best.max_ratio {
                best.max_ratio = r;
                best.argmax = (n, eps);
            }
        }
    }
    if best.cells == 0 {
        return Err(Error::Domain("empty grid".into()));
    }
    Ok(best)
}

/// Depth-`N` dyadic intervals on which `Σ_{n ≤ N} sgn(sin(2ⁿπk))` exceeds `εN`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicCount {
    pub depth: u32,
    pub eps: f64,
    /// Intervals with `Σ > εN`.
    pub strict: u64,
    /// Intervals with `Σ ≥ εN`.
    pub non_strict: u64,
    /// `log₂(count)/N`, `−∞` for an empty count.
    pub dim_strict: f64,
    pub dim_non_strict: f64,
    /// `1 − ε²/(2 ln 2)`, where `2^{1−α} e^{−ε²/2} = 1`.
    pub alpha_bound: f64,
}

fn sum_exceeds(sum: i64, eps_n: f64, strict: bool) -> bool {
    if strict {
        sum as f64 > eps_n + GRID_GUARD
    } else {
        sum as f64 >= eps_n - GRID_GUARD
    }
}

/// Closed-form count: a sign sequence with `m` entries `−1` sums to `N − 2m`.
pub fn dyadic_model(eps: f64, depth: u32) -> Result<DyadicCount> {
    if depth == 0 || depth > MAX_DYADIC_DEPTH {
        return Err(Error::Domain(format!("depth must lie in [1, {MAX_DYADIC_DEPTH}], got {depth}")));
    }
    let n = u64::from(depth);
    let row = binomial_row(n);
    let eps_n = eps * n as f64;
    let count = |strict: bool| -> u64 {
        (0..=n)
            .filter(|&m| sum_exceeds(n as i64 - 2 * m as i64, eps_n, strict))
            .map(|m| row[m as usize].to_u64().expect("below 2^30"))
            .sum()
    };
    let strict = count(true);
    let non_strict = count(false);
    let dim = |c: u64| if c == 0 { f64::NEG_INFINITY } else { (c as f64).log2() / n as f64 };
    Ok(DyadicCount {
        depth,
        eps,
        strict,
        non_strict,
        dim_strict: dim(strict),
        dim_non_strict: dim(non_strict),
        alpha_bound: 1.0 - eps * eps / (2.0 * LN_2),
    })
}

fn sgn(x: f64) -> i64 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// `(strict, non_strict)` by evaluating the signs at every interval midpoint.
pub fn dyadic_enumerate(eps: f64, depth: u32) -> Result<(u64, u64)> {
    if depth == 0 || depth > MAX_ENUMERATION_DEPTH {
        return Err(Error::Domain(format!("enumeration depth must lie in [1, {MAX_ENUMERATION_DEPTH}], got {depth}")));
    }
    let total = 1u64 << depth;
    let eps_n = eps * f64::from(depth);
    let scale = 1.0 / total as f64;
    let (mut strict, mut non_strict) = (0u64, 0u64);
    for j in 0..total {
        let k = (j as f64 + 0.5) * scale;
        let sum: i64 = (1..=depth).map(|n| sgn((2f64.powi(n as i32) * PI * k).sin())).sum();
        strict += u64::from(sum_exceeds(sum, eps_n, true));
        non_strict += u64::from(sum_exceeds(sum, eps_n, false));
    }
    Ok((strict, non_strict))
}

/// `(4a + 6r)^l (½ − 2a + 2r)^{n−l}` with `r = (D₂/D₁)/γ`.
pub fn covering_factor(a_i: f64, gamma: f64, ratio: f64, l: u32, n: u32) -> f64 {
    let r = ratio / gamma;
    (4.0 * a_i + 6.0 * r).powi(l as i32) * (0.5 - 2.0 * a_i + 2.0 * r).powi((n - l) as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringParams {
    pub family: PhaseFamily,
    pub interval: (f64, f64),
    pub eps: f64,
    pub depth: u32,
    pub p: usize,
    pub i: usize,
    pub delta1: f64,
    pub delta2: f64,
    /// Prefactor of the binomial tail estimate.
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthBound {
    pub depth: u32,
    /// ln of the bound on the number of covering intervals.
    pub log_count: f64,
    /// ln of `c' N (γ e^{−ε²/2} (1 + 10 D₂/(γ D₁)))^N`, which dominates it.
    pub log_closed_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExplicitCover {
    pub sequences: u64,
    /// Largest `|S_N| / analytic bound` over the tracked sequences.
    pub max_ratio: f64,
    pub total_measure: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport {
    pub a_i: f64,
    pub ratio: f64,
    /// `γ e^{−ε²/2} (1 + 10 D₂/(γ D₁))`.
    pub growth_factor: f64,
    pub per_depth: Vec<DepthBound>,
    pub closed_form_dominates: bool,
    pub alpha_eps: f64,
    /// `ε² > 2 ln(1 + 10 D₂/(γ D₁))`, so `α(ε) < 1`.
    pub certifies: bool,
    pub explicit: Option<ExplicitCover>,
}

/// Covering-count certificate for the exceptional set at level `i` of a
/// `p`-level discretisation.
pub fn covering_count(params: &CoveringParams) -> Result<CoveringReport> {
    let CoveringParams { family, interval, eps, depth, p, i, delta1, delta2, c0 } = params;
    let gamma = family.gamma();
    let beta = family.beta();
    if !(gamma > 1.0) || !(0.0..1.0).contains(delta1) || !(0.0..1.0).contains(delta2) {
        return Err(Error::Domain(format!("need gamma > 1 and deltas in [0, 1), got {gamma}, {delta1}, {delta2}")));
    }
    if *i == 0 || i > p || *depth == 0 {
        return Err(Error::Domain(format!("need 1 <= i <= p and depth >= 1, got i = {i}, p = {p}, depth = {depth}")));
    }
    let threshold = PI / 2.0 * (delta1 + delta2) / (1.0 - delta1);
    if !(*eps > threshold) {
        return Err(Error::Hypothesis(format!("eps = {eps} is not above the threshold {threshold}")));
    }
    let (dd1, dd2) = (1.0 - delta1, 1.0 + delta2);
    let ratio = dd2 / dd1;
    let r = ratio / gamma;
    let a_i = thresholds(*p)[i - 1];
    let width = interval.1 - interval.0;
    let growth_factor = gamma * (-eps * eps / 2.0).exp() * (1.0 + 10.0 * r);
    let lead = (c0 * width * beta * dd2 * gamma / TAU).ln();

    let mut per_depth = Vec::with_capacity(*depth as usize);
    for nn in 1..=*depth {
        let n = f64::from(nn);
        let row = binomial_row(u64::from(nn));
        let l_max = ((1.0 - eps) * n + GRID_GUARD).floor();
        let mut terms = Vec::new();
        if l_max >= 0.0 {
            for l in 0..=(l_max as u32).min(nn) {
                let c = row[l as usize].to_f64().expect("finite");
                terms.push(
                    c.ln() + f64::from(nn - l) * LN_2 + covering_factor(a_i, gamma, ratio, l, nn).ln() + n * gamma.ln(),
                );
            }
        }
        let log_sum = log_sum_exp(&terms);
        let log_count = lead + n.ln() - eps * eps / 2.0 * n + log_sum;
        let log_closed_form = lead + n.ln() + n * growth_factor.ln();
        per_depth.push(DepthBound { depth: nn, log_count, log_closed_form });
    }
    let closed_form_dominates = per_depth.iter().all(|d| d.log_count <= d.log_closed_form + 1e-12);
    let alpha_eps = covering_alpha(*eps, dd1, dd2, gamma);
    let certifies = eps * eps > 2.0 * (10.0 * r).ln_1p();

    let explicit = match family {
        PhaseFamily::Linear { beta, gamma } if gamma.fract() == 0.0 && *gamma <= 4.0 && *depth <= 12 => {
            Some(explicit_cover(*beta, *gamma as i64, *interval, *eps, *depth, *p, *i, ratio)?)
        }
        _ => None,
    };
    Ok(CoveringReport { a_i, ratio, growth_factor, per_depth, closed_form_dominates, alpha_eps, certifies, explicit })
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Relative pieces of `I_{n,j}` on which the component takes value `s`.
fn pieces(s: i64, a: f64) -> Vec<(f64, f64)> {
    match s {
        1 => vec![(a, 0.5 - a)],
        -1 => vec![(0.5 + a, 1.0 - a)],
        _ => vec![(0.0, a), (0.5 - a, 0.5 + a), (1.0 - a, 1.0)],
    }
}

/// Track the sets `S_n` interval by interval for every admissible sequence.
///
/// With `f_n = βγⁿk` and integer `γ`, the level-`n` intervals are
/// `[j w_n, (j+1) w_n]` with `w_n = 2π/(βγⁿ)` and each splits into `γ`
/// children, so sets are kept as sorted index lists.
#[allow(clippy::too_many_arguments)]
fn explicit_cover(
    beta: f64,
    gamma: i64,
    interval: (f64, f64),
    eps: f64,
    depth: u32,
    p: usize,
    i: usize,
    ratio: f64,
) -> Result<ExplicitCover> {
    let a = thresholds(p)[i - 1];
    let g = gamma as f64;
    let w1 = TAU / (beta * g);
    // S_0 is the union of level-1 intervals inside I, so |S_0| ≤ |I|
    let first = (interval.0 / w1 - GRID_GUARD).ceil() as i64;
    let last = (interval.1 / w1 + GRID_GUARD).floor() as i64;
    if first >= last {
        return Err(Error::Domain("interval shorter than a level-1 interval".into()));
    }
    let start: Vec<i64> = (first..last).collect();
    let width = interval.1 - interval.0;
    let eps_n = eps * f64::from(depth);
    let mut stats = ExplicitCover { sequences: 0, max_ratio: 0.0, total_measure: 0.0, ok: true };
    let ctx = Ctx { a, g, depth, eps_n, width, w1, ratio };
    descend(&ctx, &start, 1, 0, 0, &mut stats);
    Ok(stats)
}

struct Ctx {
    a: f64,
    g: f64,
    depth: u32,
    eps_n: f64,
    width: f64,
    w1: f64,
    ratio: f64,
}

fn descend(ctx: &Ctx, set: &[i64], level: u32, sum: i64, zeros: u32, stats: &mut ExplicitCover) {
    let remaining = i64::from(ctx.depth + 1 - level);
    if !sum_exceeds(sum + remaining, ctx.eps_n, true) {
        return;
    }
    if level > ctx.depth {
        let measure = set.len() as f64 * ctx.w1 / ctx.g.powi(ctx.depth as i32);
        let bound = ctx.width * covering_factor(ctx.a, ctx.g, ctx.ratio, zeros, ctx.depth);
        stats.sequences += 1;
        stats.total_measure += measure;
        stats.max_ratio = stats.max_ratio.max(measure / bound);
        stats.ok &= measure <= bound * (1.0 + 1e-12);
        return;
    }
    for s in [1i64, 0, -1] {
        let mut next: Vec<i64> = Vec::new();
        for &j in set {
            for (u, v) in pieces(s, ctx.a) {
                let from = (ctx.g * (j as f64 + u)).floor() as i64;
                let to = (ctx.g * (j as f64 + v)).ceil() as i64;
                next.extend(from..to);
            }
        }
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            continue;
        }
        descend(ctx, &next, level + 1, sum + s, zeros + u32::from(s == 0), stats);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_at_ten() {
        let (lhs, r) = binomial_tail_ratio(10, 0.0).unwrap();
        assert_eq!(lhs, BigUint::from(638u32));
        assert!((r - 638.0 / 10240.0).abs() < 1e-15);
    }

    #[test]
    fn dyadic_small_depth() {
        let d = dyadic_model(0.5, 10).unwrap();
        assert_eq!(d.strict, 56);
        // sums are even at N = 10, so Σ ≥ 5 and Σ > 5 coincide
        assert_eq!(dyadic_enumerate(0.5, 10).unwrap(), (56, d.non_strict));
        assert_eq!(d.non_strict, 56);
    }

    #[test]
    fn bracketed_factor() {
        let f = covering_factor(1.0 / 12.0, 100.0, 1.0, 0, 1);
        assert!((f - (0.5 - 2.0 / 12.0 + 0.02)).abs() < 1e-15);
    }
}
