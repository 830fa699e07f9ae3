//! Prüfer (EFGP) propagation across sparse barriers.
//!
//! Between barriers the radius is constant and the angle turns by `k` per
//! site, so a gap of any length costs one exact phase reduction. Each barrier
//! applies the map
//!
//! ```text
//! cot θ(x+1) = cot θ̄(x) + v_k(x)
//! R(x+1)²/R(x)² = 1 + v_k sin 2θ̄ + v_k² sin² θ̄
//! ```
//!
//! with the sign of `sin θ(x+1)` inherited from `sin θ̄(x)`.

mod derivative;
mod transfer;

pub use derivative::{detect_n0, theta_derivative_trace, DerivativeRecord};
pub use transfer::{free_block, free_block_naive, svd2, transfer_chain, ChainRecord, Svd2, TransferChain};

use std::f64::consts::{PI, TAU};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{EnergyPoint, PruferState, SparseSpec};
use crate::phase::{reduce_phase, sin_cos_dd, DoubleDouble};

/// Largest lattice handled by the site-by-site oracle.
pub const NAIVE_SITE_CAP: u64 = 10_000_000;

/// Whether the angle is tracked on the full circle or only modulo `π`.
///
/// The radius never depends on the choice; full tracking keeps `θ̄` usable
/// as a phase function for the partition and oscillation analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleMode {
    #[default]
    Full,
    ModPi,
}

impl AngleMode {
    fn wrap(self, theta: f64) -> f64 {
        match self {
            AngleMode::Full => wrap_angle(theta),
            AngleMode::ModPi => {
                let t = theta.rem_euclid(PI);
                if t >= PI {
                    0.0
                } else {
                    t
                }
            }
        }
    }
}

/// Reduce to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed distance between two angles on the circle, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// One barrier record of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub x: BigUint,
    /// `v_k(x_n)` used at this barrier.
    pub coupling: f64,
    /// `ln R(x_n)`.
    pub ln_r_before: f64,
    /// `ln R(x_n + 1)`.
    pub ln_r_after: f64,
    /// `θ(x_n + 1) mod 2π`.
    pub theta_after: f64,
    /// `θ̄(x_n) = θ(x_n) + k mod 2π`.
    pub thetabar_at: f64,
    /// `θ̄'(x_n) / x_n`.
    pub psi: Option<f64>,
    /// `θ̄''(x_n) / x_n²`.
    pub psi2: Option<f64>,
}

impl TraceRecord {
    pub fn increment(&self) -> f64 {
        self.ln_r_after - self.ln_r_before
    }
}

/// Result of propagating one boundary condition through a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct PruferTrace {
    pub phi: f64,
    pub k: f64,
    /// State at site 1, before any barrier.
    pub start: PruferState,
    pub records: Vec<TraceRecord>,
}

impl PruferTrace {
    pub fn ln_r(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ln_r_after).collect()
    }

    pub fn increments(&self) -> Vec<f64> {
        self.records.iter().map(TraceRecord::increment).collect()
    }

    pub fn thetabar(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.thetabar_at).collect()
    }

    pub fn final_ln_r(&self) -> f64 {
        self.records.last().map(|r| r.ln_r_after).unwrap_or(self.start.ln_r)
    }

    /// Largest deviation of a stored increment from the barrier formula
    /// re-evaluated at the stored `θ̄`.
    pub fn radius_identity_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| {
                let (s, c) = r.thetabar_at.sin_cos();
                let v = r.coupling;
                let expect = 0.5 * (v * 2.0 * s * c + v * v * s * s).ln_1p();
                (r.increment() - expect).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `(u(0), u(1))` for boundary condition `φ`, scaled so that `R(1) = 1`,
/// together with the resulting `θ(1)`.
///
/// `u(0) cos φ + u(1) sin φ = 0`; `φ = 0` gives `u(0) = 0`, `u(1) = 1`.
pub fn initial_values(phi: f64, energy: &EnergyPoint) -> Result<(f64, f64, f64)> {
    if !(phi > -PI / 2.0 && phi <= PI / 2.0) {
        return Err(Error::Domain(format!("boundary phase φ = {phi} outside (-π/2, π/2]")));
    }
    let (sp, cp) = phi.sin_cos();
    let (u0, u1) = (-sp, cp);
    let a = u1 - energy.cos_k() * u0;
    let b = energy.sin_k() * u0;
    let r = a.hypot(b);
    Ok((u0 / r, u1 / r, wrap_angle(b.atan2(a))))
}

/// `θ(1)` and its first two `k`-derivatives for boundary condition `φ`.
pub(crate) fn initial_theta_derivatives(phi: f64, k: f64) -> (f64, f64) {
    let (sp, cp) = phi.sin_cos();
    let (u0, u1) = (-sp, cp);
    let (sk, ck) = k.sin_cos();
    let q = u1 * u1 - 2.0 * u0 * u1 * ck + u0 * u0;
    let p = u0 * (u1 * ck - u0);
    let dq = 2.0 * u0 * u1 * sk;
    let dp = -u0 * u1 * sk;
    (p / q, (dp * q - p * dq) / (q * q))
}

/// Apply one barrier of rescaled coupling `v_k` to the state at its site.
pub fn barrier_step(state: &PruferState, v_k: f64, k: f64) -> Result<PruferState> {
    barrier_step_mode(state, v_k, k, AngleMode::Full).map(|(s, _)| s)
}

/// Barrier step returning the new state and `θ̄` at the barrier.
pub fn barrier_step_mode(
    state: &PruferState,
    v_k: f64,
    k: f64,
    mode: AngleMode,
) -> Result<(PruferState, f64)> {
    let thetabar = mode.wrap(state.theta + k);
    let (theta, dlnr) = barrier_map(thetabar, v_k)?;
    Ok((
        PruferState { ln_r: state.ln_r + dlnr, theta: mode.wrap(theta), site: &state.site + 1u32 },
        thetabar,
    ))
}

/// `(θ(x+1), ln R(x+1) − ln R(x))` from `θ̄(x)`.
///
/// The vector `(cos θ̄ + v_k sin θ̄, sin θ̄)` has cotangent `cot θ̄ + v_k`,
/// the sign of `sin θ̄` in its second coordinate, the sign of `cos θ̄` when
/// `sin θ̄ = 0`, and squared length equal to the radius ratio.
#[inline]
pub fn barrier_map(thetabar: f64, v_k: f64) -> Result<(f64, f64)> {
    let (s, c) = thetabar.sin_cos();
    let excess = v_k * (2.0 * s * c) + v_k * v_k * (s * s);
    if !(1.0 + excess > 0.0) || !excess.is_finite() {
        return Err(Error::Numerical(format!(
            "radius ratio 1 + {excess} is not positive at θ̄ = {thetabar}, v_k = {v_k}"
        )));
    }
    let theta = s.atan2(c + v_k * s);
    Ok((wrap_angle(theta), 0.5 * excess.ln_1p()))
}

/// Free evolution over `gap` sites.
pub fn gap_skip(state: &PruferState, gap: &BigUint, energy: &EnergyPoint) -> PruferState {
    gap_skip_mode(state, gap, energy, AngleMode::Full)
}

pub fn gap_skip_mode(state: &PruferState, gap: &BigUint, energy: &EnergyPoint, mode: AngleMode) -> PruferState {
    if gap.is_zero() {
        return state.clone();
    }
    let turn = reduce_phase(energy.phase(), gap);
    PruferState { ln_r: state.ln_r, theta: mode.wrap(state.theta + turn), site: &state.site + gap }
}

/// Gap-skipping propagation of boundary condition `φ` through every barrier.
pub fn propagate(spec: &SparseSpec, energy: &EnergyPoint, phi: f64) -> Result<PruferTrace> {
    propagate_mode(spec, energy, phi, AngleMode::Full)
}

pub fn propagate_mode(spec: &SparseSpec, energy: &EnergyPoint, phi: f64, mode: AngleMode) -> Result<PruferTrace> {
    let floor = spec.phase_bits_floor();
    if energy.bits() < floor {
        return Err(Error::PrecisionFloor { requested: energy.bits(), floor });
    }
    let (_, _, theta1) = initial_values(phi, energy)?;
    let start = PruferState { ln_r: 0.0, theta: mode.wrap(theta1), site: BigUint::one() };
    let sites = spec.positions();
    let mut records = Vec::with_capacity(sites.len());
    let mut state = start.clone();
    let k = energy.k();
    for site in &sites {
        let gap = &site.x - &state.site;
        state = gap_skip_mode(&state, &gap, energy, mode);
        let coupling = energy.coupling(site.amplitude);
        let before = state.ln_r;
        let (next, thetabar) = barrier_step_mode(&state, coupling, k, mode)?;
        state = next;
        records.push(TraceRecord {
            n: site.n,
            x: site.x.clone(),
            coupling,
            ln_r_before: before,
            ln_r_after: state.ln_r,
            theta_after: state.theta,
            thetabar_at: thetabar,
            psi: None,
            psi2: None,
        });
    }
    Ok(PruferTrace { phi, k, start, records })
}

/// Propagation with `θ̄'/x_n` (and `θ̄''/x_n²` for `order = 2`) filled in.
pub fn propagate_with_derivatives(
    spec: &SparseSpec,
    energy: &EnergyPoint,
    phi: f64,
    order: u8,
) -> Result<PruferTrace> {
    let mut trace = propagate(spec, energy, phi)?;
    let derivs = derivative::derivatives_of_trace(&trace, energy, order)?;
    for (rec, d) in trace.records.iter_mut().zip(derivs) {
        rec.psi = Some(d.psi);
        rec.psi2 = d.psi2;
    }
    Ok(trace)
}

/// Maximum `(|Δθ|, |Δ ln R|)` between a run and a shadow run with `extra` more phase bits.
pub fn shadow_divergence(spec: &SparseSpec, energy: &EnergyPoint, phi: f64, extra: u64) -> Result<(f64, f64)> {
    let base = propagate(spec, energy, phi)?;
    let shadow = propagate(spec, &energy.refined(extra)?, phi)?;
    Ok(trace_distance(&base, &shadow))
}

/// Maximum `(|Δθ| mod 2π, |Δ ln R|)` over barriers present in both traces.
pub fn trace_distance(a: &PruferTrace, b: &PruferTrace) -> (f64, f64) {
    a.records.iter().zip(&b.records).fold((0.0, 0.0), |(dt, dr), (x, y)| {
        (
            f64::max(dt, angle_diff(x.theta_after, y.theta_after).abs()),
            f64::max(dr, (x.ln_r_after - y.ln_r_after).abs()),
        )
    })
}

/// Output of the site-by-site oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveRun {
    /// `u(0), …, u(L)`.
    pub u: Vec<f64>,
    pub trace: PruferTrace,
}

impl NaiveRun {
    /// `ln R(1), …, ln R(L)` (index 0 holds `ln R(1)`), recomputed from `u`
    /// in double precision.
    pub fn ln_r(&self) -> Vec<f64> {
        let (s, c) = self.trace.k.sin_cos();
        self.u.windows(2).map(|w| log_radius(w[1] - c * w[0], s * w[0])).collect()
    }
}

/// `ln √(a² + b²)` without a square root unless the squares leave range.
fn log_radius(a: f64, b: f64) -> f64 {
    let r2 = a * a + b * b;
    if r2.is_normal() {
        0.5 * r2.ln()
    } else {
        a.hypot(b).ln()
    }
}

/// Three-term recursion `u(x+1) = (E − V(x)) u(x) − u(x−1)` for `x < L`.
///
/// Runs in double-double arithmetic with `E` computed well beyond double
/// precision, and recovers `(R, θ)` next to each barrier from the defining relations
/// `u(x) − cos k u(x−1) = R cos θ`, `sin k u(x−1) = R sin θ`. Barriers at
/// sites `x ≥ L` are not recorded.
pub fn propagate_naive(spec: &SparseSpec, energy: &EnergyPoint, phi: f64, l: u64) -> Result<NaiveRun> {
    if l > NAIVE_SITE_CAP {
        return Err(Error::Guard(format!("naive propagation over {l} sites exceeds the cap {NAIVE_SITE_CAP}")));
    }
    if l < 2 {
        return Err(Error::Guard("naive propagation needs L >= 2".into()));
    }
    let n = l as usize;
    let mut potential = vec![0.0f64; n + 1];
    let mut barriers = Vec::new();
    for site in spec.positions() {
        match site.x.to_u64() {
            Some(x) if x < l => {
                potential[x as usize] = site.amplitude;
                barriers.push(site);
            }
            _ => break,
        }
    }
    let (s_dd, c_dd) = sin_cos_dd(energy.k());
    let e_dd = c_dd.add(c_dd);
    let (u0, u1, theta1) = initial_values(phi, energy)?;

    let mut needs_polar = vec![false; n + 1];
    for site in &barriers {
        let x = site.x.to_u64().expect("bounded above") as usize;
        needs_polar[x] = true;
        needs_polar[x + 1] = true;
    }

    let mut u = Vec::with_capacity(n + 1);
    let mut prev = DoubleDouble::from_f64(u0);
    let mut cur = DoubleDouble::from_f64(u1);
    u.push(u0);
    u.push(u1);
    // R cos θ and R sin θ at the site of `cur`
    let cartesian = |cur: DoubleDouble, prev: DoubleDouble| (cur.sub(c_dd.mul(prev)).to_f64(), s_dd.mul(prev).to_f64());
    // polar values are only read at x_n and x_n + 1, indexed by site
    let mut polar = vec![(0.0f64, 0.0f64); n + 1];
    let (a1, b1) = cartesian(cur, prev);
    polar[1] = (log_radius(a1, b1), theta1);
    for (x, &vx) in potential.iter().enumerate().take(n).skip(1) {
        let factor = if vx == 0.0 { e_dd } else { e_dd.sub(DoubleDouble::from_f64(vx)) };
        let next = factor.mul(cur).sub(prev);
        prev = cur;
        cur = next;
        u.push(cur.to_f64());
        if needs_polar[x + 1] {
            let (a, b) = cartesian(cur, prev);
            polar[x + 1] = (log_radius(a, b), wrap_angle(b.atan2(a)));
        }
    }

    let k = energy.k();
    let records = barriers
        .into_iter()
        .map(|site| {
            let x = site.x.to_u64().expect("bounded above") as usize;
            TraceRecord {
                n: site.n,
                x: site.x,
                coupling: energy.coupling(site.amplitude),
                ln_r_before: polar[x].0,
                ln_r_after: polar[x + 1].0,
                theta_after: polar[x + 1].1,
                thetabar_at: wrap_angle(polar[x].1 + k),
                psi: None,
                psi2: None,
            }
        })
        .collect();
    let start = PruferState { ln_r: polar[1].0, theta: theta1, site: BigUint::one() };
    Ok(NaiveRun { u, trace: PruferTrace { phi, k, start, records } })
}
