//! Growth of the Prüfer radius across barriers.
//!
//! Each barrier increment splits as
//!
//! ```text
//! ½ ln(1 + v sin 2θ̄ + v² sin² θ̄)
//!   = v²/8 + (v/2) sin 2θ̄ − (v²/4) cos 2θ̄ + (v²/8) cos 4θ̄ + g(θ̄, v)
//! ```
//!
//! with a cubic remainder `|g| ≤ C₀ |v|³`. The constant term drives growth;
//! the oscillating terms average out along generic phase sequences.

mod subordinate;

pub use subordinate::{ln_big, segment_log_norm2, subordinate_estimate, power_norm_ratio, SubordinateEstimate, PowerNormRatio};

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagate::PruferTrace;
use crate::quadrature::integrate;

/// `|v| + v²`; the logarithm expansion needs this below 1.
pub fn regime(v_k: f64) -> f64 {
    v_k.abs() + v_k * v_k
}

fn check_regime(v_k: f64) -> Result<()> {
    let r = regime(v_k);
    if r >= 1.0 || !r.is_finite() {
        Err(Error::Regime(r))
    } else {
        Ok(())
    }
}

/// One barrier increment split into its named parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionRow {
    pub n: usize,
    pub increment: f64,
    pub constant_part: f64,
    pub sin_term: f64,
    pub cos2_term: f64,
    pub cos4_term: f64,
    pub remainder: f64,
}

impl DecompositionRow {
    /// `v²/8 + g_n`, the part bracketed by `[d₁, d₂]`.
    pub fn non_oscillating(&self) -> f64 {
        self.constant_part + self.remainder
    }

    pub fn resum(&self) -> f64 {
        self.constant_part + self.sin_term + self.cos2_term + self.cos4_term + self.remainder
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthDecomposition {
    pub v_k: f64,
    pub rows: Vec<DecompositionRow>,
    /// Partial sums of the `sin 2θ̄`, `cos 2θ̄`, `cos 4θ̄` channels.
    pub partial_sums: Vec<[f64; 3]>,
}

impl GrowthDecomposition {
    pub fn max_remainder_ratio(&self) -> f64 {
        if self.v_k == 0.0 {
            return 0.0;
        }
        let c = self.v_k.abs().powi(3);
        self.rows.iter().map(|r| r.remainder.abs() / c).fold(0.0, f64::max)
    }

    /// Whether every `v²/8 + g_n` lies in `[lo, hi]`, with the observed extremes.
    pub fn bracket(&self, lo: f64, hi: f64) -> (bool, f64, f64) {
        let vals = self.rows.iter().map(DecompositionRow::non_oscillating);
        let (mn, mx) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        (self.rows.iter().all(|r| (lo..=hi).contains(&r.non_oscillating())), mn, mx)
    }

    pub fn max_resum_error(&self) -> f64 {
        self.rows.iter().map(|r| (r.resum() - r.increment).abs()).fold(0.0, f64::max)
    }
}

/// Quadratic part of the increment at angle `t`, without the remainder.
fn quadratic_parts(t: f64, v: f64) -> (f64, f64, f64, f64) {
    let v2 = v * v;
    (v2 / 8.0, 0.5 * v * (2.0 * t).sin(), -0.25 * v2 * (2.0 * t).cos(), 0.125 * v2 * (4.0 * t).cos())
}

/// Cubic remainder `g(θ̄, v)`.
pub fn remainder(t: f64, v: f64) -> f64 {
    let (s, c) = t.sin_cos();
    let exact = 0.5 * (v * 2.0 * s * c + v * v * s * s).ln_1p();
    let (a, b, cc, d) = quadratic_parts(t, v);
    exact - (a + b + cc + d)
}

/// Split every increment of `trace` for coupling `v_k`.
pub fn decompose(trace: &PruferTrace, v_k: f64) -> Result<GrowthDecomposition> {
    check_regime(v_k)?;
    let mut sums = [0.0f64; 3];
    let mut partial_sums = Vec::with_capacity(trace.records.len());
    let rows = trace
        .records
        .iter()
        .map(|r| {
            let (constant_part, sin_term, cos2_term, cos4_term) = quadratic_parts(r.thetabar_at, v_k);
            let increment = r.increment();
            let remainder = increment - (constant_part + sin_term + cos2_term + cos4_term);
            let t = r.thetabar_at;
            sums[0] += (2.0 * t).sin();
            sums[1] += (2.0 * t).cos();
            sums[2] += (4.0 * t).cos();
            partial_sums.push(sums);
            DecompositionRow { n: r.n, increment, constant_part, sin_term, cos2_term, cos4_term, remainder }
        })
        .collect();
    Ok(GrowthDecomposition { v_k, rows, partial_sums })
}

/// Least-squares line through `ln R(x_n + 1)` against `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// `slope / ln γ`: exponent of `x_n`.
    pub beta: f64,
    pub stderr: f64,
    pub window: (usize, usize),
}

/// Shortest admissible window, `n_hi − n_lo`.
pub const MIN_FIT_SPAN: usize = 8;

/// Fit `values[n − 1]` against level `n` over `window` (inclusive levels).
///
/// The default window is the trailing half, `[n_max/2, n_max]`.
pub fn fit_exponents(values: &[f64], window: Option<(usize, usize)>, gamma: f64) -> Result<ExponentFit> {
    let n_max = values.len();
    let (lo, hi) = window.unwrap_or((n_max / 2, n_max));
    if lo < 1 || hi > n_max || hi < lo || hi - lo < MIN_FIT_SPAN {
        return Err(Error::Fit(format!(
            "window [{lo}, {hi}] over {n_max} levels; need 1 <= lo, hi <= n_max and hi - lo >= {MIN_FIT_SPAN}"
        )));
    }
    let xs: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    let ys = &values[lo - 1..hi];
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(ExponentFit { slope, intercept, beta: slope / gamma.ln(), stderr, window: (lo, hi) })
}

/// Oscillating channels averaged along a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Sin2,
    Cos2,
    Cos4,
    /// `sin^a(2θ̄) sin^{2b}(θ̄)`, centered by its circle mean.
    W { a: u32, b: u32 },
}

impl Channel {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Channel::Sin2 => (2.0 * t).sin(),
            Channel::Cos2 => (2.0 * t).cos(),
            Channel::Cos4 => (4.0 * t).cos(),
            Channel::W { a, b } => (2.0 * t).sin().powi(a as i32) * t.sin().powi(2 * b as i32) - f_ab(a, b),
        }
    }
}

/// Running averages `S_N = (1/N) Σ_{n ≤ N} channel(θ̄(x_n))`.
pub fn oscillation_average(trace: &PruferTrace, channel: Channel) -> Result<Vec<f64>> {
    if let Channel::W { a, b } = channel {
        if a + b == 0 {
            return Err(Error::Domain("W channel needs a + b >= 1".into()));
        }
    }
    let mut sum = 0.0;
    Ok(trace
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            sum += channel.eval(r.thetabar_at);
            sum / (i + 1) as f64
        })
        .collect())
}

fn double_factorial(n: i64) -> f64 {
    let mut out = 1.0;
    let mut m = n;
    while m > 1 {
        out *= m as f64;
        m -= 2;
    }
    out
}

/// `F_{a,b} = (1/π) ∫₀^π sin^a(2θ) sin^{2b}(θ) dθ`.
///
/// Zero for odd `a`. For even `a` the integrand is `2^a sin^{a+2b} θ cos^a θ`,
/// whose mean is `2^a (p−1)!! (q−1)!! / (p+q)!!` with `p = a + 2b`, `q = a`.
pub fn f_ab(a: u32, b: u32) -> f64 {
    if a % 2 == 1 {
        return 0.0;
    }
    let p = i64::from(a + 2 * b);
    let q = i64::from(a);
    2f64.powi(a as i32) * double_factorial(p - 1) * double_factorial(q - 1) / double_factorial(p + q)
}

/// `F_{a,b}` by quadrature, as a cross-check of the closed form.
pub fn f_ab_quadrature(a: u32, b: u32) -> Result<f64> {
    let v = integrate(|t| (2.0 * t).sin().powi(a as i32) * t.sin().powi(2 * b as i32), 0.0, PI, 1e-14)?;
    Ok(v / PI)
}

/// `F(v) = ½ ln(1 + v²/4)`, the mean barrier increment over a uniform angle.
pub fn f_closed(v_k: f64) -> f64 {
    0.5 * (0.25 * v_k * v_k).ln_1p()
}

/// `G(v) = −½ ln(1 − |v| − v²)`.
pub fn g_closed(v_k: f64) -> Result<f64> {
    check_regime(v_k)?;
    Ok(-0.5 * (-regime(v_k)).ln_1p())
}

/// `G̃(v) = ½ (|v| + v²)/(1 − |v| − v²)`.
pub fn g_tilde(v_k: f64) -> Result<f64> {
    check_regime(v_k)?;
    let r = regime(v_k);
    Ok(0.5 * r / (1.0 - r))
}

/// `(1/π) ∫₀^π ½ ln(1 + v sin 2θ + v² sin² θ) dθ`.
pub fn f_quadrature(v_k: f64) -> Result<f64> {
    let v = integrate(|t| 0.5 * (v_k * (2.0 * t).sin() + v_k * v_k * t.sin().powi(2)).ln_1p(), 0.0, PI, 1e-14)?;
    Ok(v / PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fgg {
    pub f: f64,
    pub g: f64,
    pub g_tilde: f64,
    pub quadrature_f: f64,
}

pub fn fgg(v_k: f64) -> Result<Fgg> {
    Ok(Fgg { f: f_closed(v_k), g: g_closed(v_k)?, g_tilde: g_tilde(v_k)?, quadrature_f: f_quadrature(v_k)? })
}

static C0_CACHE: Mutex<Option<HashMap<u64, f64>>> = Mutex::new(None);

const C0_GRID: usize = 10_000;

/// `max_θ |g(θ, v)| / |v|³`, rounded up.
///
/// A uniform grid on `[0, π)` locates the maximum, golden-section search
/// refines it, and the result is inflated by `10⁻⁹` relative. Cached per `v`.
pub fn c0(v_k: f64) -> f64 {
    if v_k == 0.0 {
        return 0.0;
    }
    let key = v_k.to_bits();
    if let Some(c) = C0_CACHE.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert_with(HashMap::new).get(&key) {
        return *c;
    }
    let cube = v_k.abs().powi(3);
    let score = |t: f64| remainder(t, v_k).abs() / cube;
    let h = PI / C0_GRID as f64;
    let (best_i, mut best) = (0..C0_GRID)
        .map(|i| (i, score(i as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let center = best_i as f64 * h;
    best = best.max(golden_max(&score, center - h, center + h));
    let c = (best * (1.0 + 1e-9)).next_up();
    C0_CACHE.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert_with(HashMap::new).insert(key, c);
    c
}

/// Largest `C₀` over couplings `v_k` sampled across `[lo, hi]`.
pub fn c0_range(lo: f64, hi: f64, samples: usize) -> f64 {
    let n = samples.max(2);
    (0..n).map(|i| c0(lo + (hi - lo) * i as f64 / (n - 1) as f64)).fold(0.0, f64::max)
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EnergyPoint, PruferState, SparseSpec};
    use crate::propagate::{propagate, TraceRecord};
    use num_bigint::BigUint;

    fn engineered(thetabar: &[f64], v: f64) -> PruferTrace {
        let mut ln_r = 0.0;
        let records = thetabar
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let (_, d) = crate::propagate::barrier_map(t, v).unwrap();
                let rec = TraceRecord {
                    n: i + 1,
                    x: BigUint::from(2u32).pow(i as u32 + 1),
                    coupling: v,
                    ln_r_before: ln_r,
                    ln_r_after: ln_r + d,
                    theta_after: 0.0,
                    thetabar_at: t,
                    psi: None,
                    psi2: None,
                };
                ln_r += d;
                rec
            })
            .collect();
        PruferTrace { phi: 0.0, k: 1.0, start: PruferState { ln_r: 0.0, theta: 0.0, site: BigUint::from(1u32) }, records }
    }

    #[test]
    fn zero_coupling_has_no_parts() {
        let t = engineered(&[0.1, 1.0, 2.0], 0.0);
        let d = decompose(&t, 0.0).unwrap();
        for r in &d.rows {
            assert_eq!(r.resum(), 0.0);
            assert_eq!(r.constant_part, 0.0);
        }
    }

    #[test]
    fn zero_angles_resum_to_zero() {
        let t = engineered(&[0.0; 6], -0.4);
        let d = decompose(&t, -0.4).unwrap();
        for r in &d.rows {
            assert!(r.increment.abs() < 1e-15);
            assert!(r.resum().abs() < 1e-12);
            // v²/8 − v²/4 + v²/8 = 0 at θ̄ = 0
            assert!(r.remainder.abs() < 1e-15);
        }
    }

    #[test]
    fn regime_is_checked() {
        let t = engineered(&[0.3], 0.7);
        assert_eq!(decompose(&t, 0.7).unwrap_err().kind(), "RegimeError");
        assert_eq!(g_closed(0.7).unwrap_err().kind(), "RegimeError");
    }

    #[test]
    fn decomposition_of_real_run() {
        let spec = SparseSpec::deterministic(0.5, 2, 500).unwrap();
        let e = EnergyPoint::for_spec(&spec, 1.3).unwrap();
        let t = propagate(&spec, &e, 0.0).unwrap();
        let d = decompose(&t, e.v_k()).unwrap();
        assert!(d.max_resum_error() < 1e-12);
        assert!(d.max_remainder_ratio() <= c0(e.v_k()));
        let w = e.v_k().abs();
        let c = c0(e.v_k());
        let (inside, _, _) = d.bracket(w * w / 8.0 - c * w.powi(3), w * w / 8.0 + c * w.powi(3));
        assert!(inside);
    }

    #[test]
    fn fit_examples() {
        let line: Vec<f64> = (1..=20).map(|n| 0.1 * n as f64).collect();
        let f = fit_exponents(&line, None, 2.0).unwrap();
        assert!((f.slope - 0.1).abs() < 1e-14 && f.stderr < 1e-12);
        assert!((f.beta - 0.1 / 2f64.ln()).abs() < 1e-13);
        let flat = vec![0.0; 20];
        assert_eq!(fit_exponents(&flat, None, 2.0).unwrap().slope, 0.0);
        assert_eq!(fit_exponents(&flat, Some((3, 9)), 2.0).unwrap_err().kind(), "FitError");
    }

    #[test]
    fn f_ab_values() {
        assert_eq!(f_ab(2, 0), 0.5);
        assert_eq!(f_ab(1, 0), 0.0);
        assert_eq!(f_ab(0, 1), 0.5);
        for (a, b) in [(2, 0), (0, 1), (2, 1), (4, 0), (0, 3), (2, 2), (4, 3), (3, 1)] {
            let q = f_ab_quadrature(a, b).unwrap();
            assert!((q - f_ab(a, b)).abs() < 1e-12, "F_{a},{b}: {q} vs {}", f_ab(a, b));
        }
    }

    #[test]
    fn f_g_values() {
        let v = fgg(0.5).unwrap();
        assert!((v.f - 0.030_312_310_9).abs() < 1e-10);
        assert!((v.quadrature_f - v.f).abs() < 1e-10);
        assert!((v.g - 2f64.ln()).abs() < 1e-15);
        assert!((v.g_tilde - 1.5).abs() < 1e-15);
    }

    #[test]
    fn c0_bounds_remainder() {
        for &v in &[0.05, -0.2, 0.5, -0.6] {
            let c = c0(v);
            for i in 0..3000 {
                let t = i as f64 * 0.001_047_3;
                assert!(remainder(t, v).abs() <= c * v.abs().powi(3));
            }
        }
        assert_eq!(c0(0.0), 0.0);
    }

    #[test]
    fn free_channel_vanishes_at_quarter_turn() {
        let spec = SparseSpec::free(2, 20).unwrap();
        let e = EnergyPoint::for_spec(&spec, std::f64::consts::FRAC_PI_2).unwrap();
        let t = propagate(&spec, &e, 0.0).unwrap();
        let s = oscillation_average(&t, Channel::Sin2).unwrap();
        // the double nearest π/2 is off by 6e-17, which 2^20 sites amplify
        assert!(s.iter().all(|x| x.abs() < 1e-9));
        assert!(oscillation_average(&t, Channel::W { a: 0, b: 0 }).is_err());
    }
}
