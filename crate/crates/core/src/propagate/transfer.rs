//! Transfer matrices: closed-form free powers and scaled barrier chains.

use nalgebra::{Matrix2, Vector2};
use num_bigint::BigUint;
use num_traits::Zero;

use crate::model::{EnergyPoint, SparseSpec};
use crate::phase::reduce_phase;

/// `[[E, −1], [1, 0]]^m` via `U_j = sin((j+1)k) / sin k`:
///
/// ```text
/// F^m = [[U_m, −U_{m−1}], [U_{m−1}, −U_{m−2}]]
/// ```
///
/// Each angle `(j+1)k` is reduced exactly, so the cost does not depend on `m`.
pub fn free_block(energy: &EnergyPoint, m: &BigUint) -> Matrix2<f64> {
    if m.is_zero() {
        return Matrix2::identity();
    }
    let s = energy.sin_k();
    let u = |j_plus_one: &BigUint| reduce_phase(energy.phase(), j_plus_one).sin() / s;
    let um = u(&(m + 1u32));
    let um1 = u(m);
    let um2 = u(&(m - 1u32));
    Matrix2::new(um, -um1, um1, -um2)
}

/// Repeated multiplication; for oracle use on small `m` only.
pub fn free_block_naive(energy: &EnergyPoint, m: u64) -> Matrix2<f64> {
    let f = Matrix2::new(energy.energy(), -1.0, 1.0, 0.0);
    (0..m).fold(Matrix2::identity(), |acc, _| f * acc)
}

/// Singular value decomposition of a real 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd2 {
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Right singular vector of the larger singular value.
    pub v_max: Vector2<f64>,
    /// Right singular vector of the smaller singular value.
    pub v_min: Vector2<f64>,
}

/// Closed-form 2×2 SVD through `MᵀM = [[p, q], [q, r]]`.
pub fn svd2(m: &Matrix2<f64>) -> Svd2 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let p = a * a + c * c;
    let r = b * b + d * d;
    let q = a * b + c * d;
    let half_diff = 0.5 * (p - r);
    let root = half_diff.hypot(q);
    let big = 0.5 * (p + r) + root;
    let sigma_max = big.max(0.0).sqrt();
    let det = (a * d - b * c).abs();
    let sigma_min = if sigma_max > 0.0 { det / sigma_max } else { 0.0 };
    let angle = 0.5 * (2.0 * q).atan2(p - r);
    let (sn, cs) = angle.sin_cos();
    Svd2 { sigma_max, sigma_min, v_max: Vector2::new(cs, sn), v_min: Vector2::new(-sn, cs) }
}

/// One level of a transfer chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub n: usize,
    pub x: BigUint,
    /// `t_n = ln ‖T_E(x_n)‖`.
    pub log_norm: f64,
    /// `T_E(x_n) · e^{−log_factor}`, with unit largest singular value.
    pub unit: Matrix2<f64>,
    pub log_factor: f64,
}

impl ChainRecord {
    /// `|det(T) − 1|` for the unscaled product.
    pub fn det_defect(&self) -> f64 {
        (self.unit.determinant() * (2.0 * self.log_factor).exp() - 1.0).abs()
    }

    /// Unscaled `ln ‖T_E(x_n) w‖`.
    pub fn log_apply(&self, w: &Vector2<f64>) -> f64 {
        (self.unit * w).norm().ln() + self.log_factor
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferChain {
    pub k: f64,
    pub records: Vec<ChainRecord>,
}

impl TransferChain {
    pub fn log_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.log_norm).collect()
    }

    pub fn max_det_defect(&self) -> f64 {
        self.records.iter().map(ChainRecord::det_defect).fold(0.0, f64::max)
    }
}

/// `T_E(x_n)`, mapping `(u(1), u(0))` to `(u(x_n+1), u(x_n))`, for every
/// barrier, kept in scaled form: `T(x_n) = B_n F^{x_n − x_{n−1} − 1} T(x_{n−1})`.
pub fn transfer_chain(spec: &SparseSpec, energy: &EnergyPoint) -> TransferChain {
    let mut m = Matrix2::identity();
    let mut log_factor = 0.0;
    let mut last = BigUint::zero();
    let mut records = Vec::new();
    for site in spec.positions() {
        let gap = &site.x - &last - 1u32;
        let barrier = Matrix2::new(energy.energy() - site.amplitude, -1.0, 1.0, 0.0);
        m = barrier * free_block(energy, &gap) * m;
        let s = svd2(&m).sigma_max;
        m /= s;
        log_factor += s.ln();
        records.push(ChainRecord { n: site.n, x: site.x.clone(), log_norm: log_factor, unit: m, log_factor });
        last = site.x;
    }
    TransferChain { k: energy.k(), records }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Matrix2<f64>, b: &Matrix2<f64>, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    #[test]
    fn free_block_examples() {
        let e = EnergyPoint::new(1.3, 0.5, 12, 2).unwrap();
        let one = free_block(&e, &BigUint::from(1u32));
        assert!(close(&one, &Matrix2::new(e.energy(), -1.0, 1.0, 0.0), 1e-14));
        assert_eq!(free_block(&e, &BigUint::zero()), Matrix2::identity());

        let e0 = EnergyPoint::new(FRAC_PI_2, 0.5, 12, 2).unwrap();
        assert!(close(&free_block(&e0, &BigUint::from(2u32)), &-Matrix2::identity(), 1e-15));

        let e1 = EnergyPoint::new(PI / 3.0, 0.5, 12, 2).unwrap();
        let six = free_block(&e1, &BigUint::from(6u32));
        assert!(close(&six, &Matrix2::identity(), 1e-14));
        assert!(close(&free_block_naive(&e1, 6), &Matrix2::identity(), 1e-14));
    }

    #[test]
    fn free_block_matches_repeated_product() {
        let e = EnergyPoint::new(2.1, 0.5, 12, 2).unwrap();
        for m in [3u64, 17, 64, 255, 1000] {
            let fast = free_block(&e, &BigUint::from(m));
            let slow = free_block_naive(&e, m);
            assert!(close(&fast, &slow, 1e-11), "m = {m}");
        }
    }

    #[test]
    fn svd_of_diagonal_and_rotation() {
        let d = svd2(&Matrix2::new(3.0, 0.0, 0.0, 0.5));
        assert!((d.sigma_max - 3.0).abs() < 1e-15 && (d.sigma_min - 0.5).abs() < 1e-15);
        assert!((d.v_max.x.abs() - 1.0).abs() < 1e-15);
        let m = Matrix2::new(1.0, 2.0, -0.5, 4.0);
        let s = svd2(&m);
        assert!(((m * s.v_max).norm() - s.sigma_max).abs() < 1e-13);
        assert!(((m * s.v_min).norm() - s.sigma_min).abs() < 1e-13);
    }

    #[test]
    fn chain_is_unimodular() {
        let spec = SparseSpec::deterministic(0.5, 2, 40).unwrap();
        let e = EnergyPoint::for_spec(&spec, 1.3).unwrap();
        let chain = transfer_chain(&spec, &e);
        assert!(chain.max_det_defect() < 1e-10);
    }

    #[test]
    fn free_chain_norms_bounded() {
        let spec = SparseSpec::free(3, 30).unwrap();
        let e = EnergyPoint::for_spec(&spec, 0.8).unwrap();
        let chain = transfer_chain(&spec, &e);
        // every entry of F^m is at most 1/sin k in size
        let bound = (2.0 / 0.8f64.sin()).ln() + 1e-12;
        assert!(chain.log_norms().iter().all(|&t| t <= bound));
    }
}
