//! Shared fixtures for the benchmarks.

use spectral_lab::{EnergyPoint, SparseSpec};

/// Deterministic spec γⁿ with amplitude `v`, plus its energy point at `k`.
pub fn fixture(v: f64, gamma: u64, depth: usize, k: f64) -> (SparseSpec, EnergyPoint) {
    let spec = SparseSpec::deterministic(v, gamma, depth).expect("valid spec");
    let e = EnergyPoint::for_spec(&spec, k).expect("valid energy");
    (spec, e)
}
