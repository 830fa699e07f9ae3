//! `k`-derivatives of `θ̄(x_n, k)` in ratio form.
//!
//! `θ̄'(x_n)` grows like `x_n`, so the recursion is carried for
//! `ψ_n = θ̄'(x_n)/x_n` and `ψ2_n = θ̄''(x_n)/x_n²`, which stay of order one.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::{initial_theta_derivatives, propagate, PruferTrace};
use crate::error::{Error, Result};
use crate::model::{EnergyPoint, SparseSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeRecord {
    pub n: usize,
    pub psi: f64,
    pub psi2: Option<f64>,
}

/// `a / b` correctly rounded, for `0 < a, b`.
pub(crate) fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    // 64-bit quotient with a sticky bit, then a single rounding to 53 bits
    let shift = 63 + b.bits() as i64 - a.bits() as i64;
    let (num, den) = if shift >= 0 { (a << shift as usize, b.clone()) } else { (a.clone(), b << (-shift) as usize) };
    let q = &num / &den;
    let sticky = !(&num % &den).is_zero();
    let q = q.to_u64().unwrap_or(u64::MAX) | u64::from(sticky);
    q as f64 * 2f64.powi(-shift as i32)
}

fn inverse_f64(x: &BigUint) -> f64 {
    let f = x.to_f64().unwrap_or(f64::INFINITY);
    if f.is_finite() {
        1.0 / f
    } else {
        0.0
    }
}

/// `ψ_n` (and `ψ2_n` for `order = 2`) along an existing trace.
///
/// One barrier maps `θ̄'(x_n)` to
/// `θ̄'(x_{n+1}) = x_{n+1} − x_n + (θ̄'(x_n) + c s²)/a`, with `s = sin θ̄(x_n)`,
/// `a = 1 + v_k sin 2θ̄ + v_k² s²` and `c = v_k cot k`; dividing by `x_{n+1}`
/// with `ρ = x_n/x_{n+1}` gives `ψ_{n+1} = 1 − ρ + ρ ψ_n / a + c s²/(a x_{n+1})`.
pub(crate) fn derivatives_of_trace(
    trace: &PruferTrace,
    energy: &EnergyPoint,
    order: u8,
) -> Result<Vec<DerivativeRecord>> {
    if !(1..=2).contains(&order) {
        return Err(Error::Domain(format!("derivative order must be 1 or 2, got {order}")));
    }
    let k = energy.k();
    let (sk, ck) = (energy.sin_k(), energy.cos_k());
    let (d1, d2) = initial_theta_derivatives(trace.phi, k);
    let mut out = Vec::with_capacity(trace.records.len());
    let Some(first) = trace.records.first() else {
        return Ok(out);
    };
    let inv_x1 = inverse_f64(&first.x);
    // θ̄'(x_1) = θ'(1) + x_1, θ̄''(x_1) = θ''(1)
    let mut psi = 1.0 + d1 * inv_x1;
    let mut psi2 = d2 * inv_x1 * inv_x1;
    for (i, rec) in trace.records.iter().enumerate() {
        out.push(DerivativeRecord { n: rec.n, psi, psi2: (order == 2).then_some(psi2) });
        let Some(next) = trace.records.get(i + 1) else {
            break;
        };
        let amplitude = -rec.coupling * sk;
        let v = rec.coupling;
        let dv = amplitude * ck / (sk * sk);
        let c = v * ck / sk;
        let dc = amplitude * (1.0 / sk + 2.0 * ck * ck / (sk * sk * sk));
        let (s, co) = rec.thetabar_at.sin_cos();
        let s2 = s * s;
        let sin2 = 2.0 * s * co;
        let cos2 = co * co - s * s;
        let a = 1.0 + v * sin2 + v * v * s2;
        let rho = ratio_f64(&rec.x, &next.x);
        let inv_x = inverse_f64(&rec.x);
        let inv_next = inverse_f64(&next.x);
        let new_psi = (1.0 - rho) + rho * psi / a + c * s2 / a * inv_next;
        if order == 2 {
            // N = Θ + c s², a' = v' sin 2θ̄ + 2 v v' s² + (2v cos 2θ̄ + v² sin 2θ̄) Θ
            let n_scaled = psi + c * s2 * inv_x;
            let dn_scaled = psi2 + dc * s2 * inv_x * inv_x + c * sin2 * psi * inv_x;
            let da_scaled = (dv * sin2 + 2.0 * v * dv * s2) * inv_x + (2.0 * v * cos2 + v * v * sin2) * psi;
            psi2 = rho * rho * (dn_scaled / a - n_scaled * da_scaled / (a * a));
        }
        psi = new_psi;
    }
    Ok(out)
}

/// `ψ_n = θ̄'(x_n, k)/x_n` for every barrier of a Dirichlet solution.
pub fn theta_derivative_trace(spec: &SparseSpec, energy: &EnergyPoint, order: u8) -> Result<Vec<DerivativeRecord>> {
    let trace = propagate(spec, energy, 0.0)?;
    derivatives_of_trace(&trace, energy, order)
}

/// First `n` after which `ψ` stays in `(lo, hi)` for `run` consecutive levels.
///
/// Returns `n₀` such that `ψ_{n₀+1}, …, ψ_{n₀+run}` all lie inside; level
/// numbering starts at 1, so `n₀ = 0` means the very first levels qualify.
pub fn detect_n0(psi: &[f64], lo: f64, hi: f64, run: usize) -> Option<usize> {
    let inside: Vec<bool> = psi.iter().map(|&p| p > lo && p < hi).collect();
    (0..inside.len()).find(|&start| start + run <= inside.len() && inside[start..start + run].iter().all(|&b| b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_rounding() {
        let a = BigUint::from(1u32);
        let b = BigUint::from(3u32);
        assert_eq!(ratio_f64(&a, &b), 1.0 / 3.0);
        let big = BigUint::from(10u32).pow(300);
        let bigger = BigUint::from(10u32).pow(301);
        assert_eq!(ratio_f64(&big, &bigger), 0.1);
        assert_eq!(ratio_f64(&BigUint::from(7u32), &BigUint::from(7u32)), 1.0);
        for (a, b) in [(1000u64, 10000u64), (3, 4), (5, 3), (1 << 40, 3), (999_999_999, 1_000_000_000)] {
            assert_eq!(ratio_f64(&BigUint::from(a), &BigUint::from(b)), a as f64 / b as f64);
        }
    }

    #[test]
    fn free_ratio_is_one() {
        let spec = SparseSpec::free(3, 40).unwrap();
        let e = EnergyPoint::for_spec(&spec, 1.0).unwrap();
        let d = theta_derivative_trace(&spec, &e, 2).unwrap();
        assert_eq!(d.len(), 40);
        for r in &d {
            assert!((r.psi - 1.0).abs() < 1e-13);
            assert!(r.psi2.unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn n0_detection() {
        let psi = [0.5, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(detect_n0(&psi, 0.9, 1.1, 5), Some(4));
        assert_eq!(detect_n0(&psi[..6], 0.9, 1.1, 5), None);
    }
}
