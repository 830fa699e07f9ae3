//! Sparse potentials, spectral parameters and Prüfer states.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::FixedPointPhase;

/// Default distance kept from the band edges `k = 0` and `k = π`.
pub const DEFAULT_K_MIN: f64 = 0.1;

/// Bits of headroom beyond the largest position in the phase mantissa.
pub const PHASE_HEADROOM_BITS: u64 = 64;

/// How barrier positions are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum SparsityRule {
    /// `x_n = γ^n`.
    Deterministic { gamma: u64 },
    /// `x_n = γ^n + ω_n` with `ω_n` uniform on `{-n, …, n}`.
    ///
    /// `sample` selects an independent member of the ensemble sharing `seed`.
    Random { gamma: u64, seed: u64, sample: u64 },
    /// Arbitrary strictly increasing positions with their own amplitudes.
    Explicit(Vec<(BigUint, f64)>),
}

/// A sparse potential: amplitude, placement rule and number of barriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireSpec", into = "WireSpec")]
pub struct SparseSpec {
    v: f64,
    rule: SparsityRule,
    n_max: usize,
}

/// One barrier: level index, exact position and amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub n: usize,
    pub x: BigUint,
    pub amplitude: f64,
}

impl SparseSpec {
    pub fn deterministic(v: f64, gamma: u64, n_max: usize) -> Result<Self> {
        Self::new(v, SparsityRule::Deterministic { gamma }, n_max)
    }

    pub fn random(v: f64, gamma: u64, seed: u64, sample: u64, n_max: usize) -> Result<Self> {
        Self::new(v, SparsityRule::Random { gamma, seed, sample }, n_max)
    }

    /// Explicit sites; all of them are used.
    pub fn explicit(sites: Vec<(BigUint, f64)>) -> Result<Self> {
        let n = sites.len();
        let v = sites.first().map(|s| s.1).unwrap_or(0.0);
        Self::new(v, SparsityRule::Explicit(sites), n)
    }

    /// Zero-amplitude sites at `γ^n`: the free operator, sampled on the usual grid.
    pub fn free(gamma: u64, n_max: usize) -> Result<Self> {
        if gamma < 2 {
            return Err(Error::Spec(format!("gamma must be >= 2, got {gamma}")));
        }
        let g = BigUint::from(gamma);
        let mut x = BigUint::one();
        let mut sites = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            x *= &g;
            sites.push((x.clone(), 0.0));
        }
        Self::new(0.0, SparsityRule::Explicit(sites), n_max)
    }

    pub fn new(v: f64, rule: SparsityRule, n_max: usize) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::Spec(format!("amplitude must be finite, got {v}")));
        }
        match &rule {
            SparsityRule::Deterministic { gamma } | SparsityRule::Random { gamma, .. } => {
                if *gamma < 2 {
                    return Err(Error::Spec(format!("gamma must be >= 2, got {gamma}")));
                }
                if v == 0.0 {
                    return Err(Error::Spec("amplitude v must be nonzero".into()));
                }
                if n_max < 1 {
                    return Err(Error::Spec("n_max must be >= 1".into()));
                }
            }
            SparsityRule::Explicit(sites) => {
                if n_max > sites.len() {
                    return Err(Error::Spec(format!(
                        "n_max = {n_max} exceeds the {} explicit sites",
                        sites.len()
                    )));
                }
                if let Some((x, _)) = sites.first() {
                    if x.is_zero() {
                        return Err(Error::Spec("first position must be >= 1".into()));
                    }
                }
                for w in sites.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::Spec(format!(
                            "positions must be strictly increasing ({} then {})",
                            w[0].0, w[1].0
                        )));
                    }
                }
                if let Some((_, a)) = sites.iter().find(|s| !s.1.is_finite()) {
                    return Err(Error::Spec(format!("amplitude must be finite, got {a}")));
                }
            }
        }
        Ok(Self { v, rule, n_max })
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn rule(&self) -> &SparsityRule {
        &self.rule
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn gamma(&self) -> Option<u64> {
        match self.rule {
            SparsityRule::Deterministic { gamma } | SparsityRule::Random { gamma, .. } => Some(gamma),
            SparsityRule::Explicit(_) => None,
        }
    }

    /// The same spec truncated (or extended) to `n_max` barriers.
    pub fn with_depth(&self, n_max: usize) -> Result<Self> {
        Self::new(self.v, self.rule.clone(), n_max)
    }

    /// Barrier sites in increasing order.
    ///
    /// Random offsets that make two levels land on the same site, or swap
    /// their order (possible only for tiny `γ`), are resolved by sorting and
    /// keeping one barrier of amplitude `v` per site.
    pub fn positions(&self) -> Vec<Site> {
        match &self.rule {
            SparsityRule::Deterministic { gamma } => {
                let g = BigUint::from(*gamma);
                let mut x = BigUint::one();
                (1..=self.n_max)
                    .map(|n| {
                        x *= &g;
                        Site { n, x: x.clone(), amplitude: self.v }
                    })
                    .collect()
            }
            SparsityRule::Random { gamma, seed, sample } => {
                let g = BigUint::from(*gamma);
                let mut power = BigUint::one();
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(*sample);
                let mut sites: Vec<Site> = (1..=self.n_max)
                    .map(|n| {
                        power *= &g;
                        let omega = draw_offset(&mut rng, n as u64);
                        let x = if omega >= 0 {
                            &power + BigUint::from(omega as u64)
                        } else {
                            &power - BigUint::from(omega.unsigned_abs())
                        };
                        Site { n, x, amplitude: self.v }
                    })
                    .collect();
                sites.sort_by(|a, b| a.x.cmp(&b.x).then(a.n.cmp(&b.n)));
                sites.dedup_by(|later, earlier| later.x == earlier.x);
                sites
            }
            SparsityRule::Explicit(list) => list
                .iter()
                .take(self.n_max)
                .enumerate()
                .map(|(i, (x, a))| Site { n: i + 1, x: x.clone(), amplitude: *a })
                .collect(),
        }
    }

    /// Minimum number of fractional phase bits for this spec.
    pub fn phase_bits_floor(&self) -> u64 {
        match &self.rule {
            SparsityRule::Deterministic { gamma } | SparsityRule::Random { gamma, .. } => {
                depth_bits(*gamma, self.n_max) + PHASE_HEADROOM_BITS
            }
            SparsityRule::Explicit(list) => {
                let top = list
                    .iter()
                    .take(self.n_max)
                    .next_back()
                    .map(|(x, _)| (x - 1u32).bits())
                    .unwrap_or(0);
                top + PHASE_HEADROOM_BITS
            }
        }
    }
}

/// `⌈n · log₂ γ⌉`, exactly.
pub fn depth_bits(gamma: u64, n: usize) -> u64 {
    let power = BigUint::from(gamma).pow(n as u32);
    (power - 1u32).bits()
}

/// The offset `ω_n` that a random rule with `seed` and `sample` places at level `n`.
pub fn random_offset(seed: u64, sample: u64, n: u64) -> i64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    draw_offset(&mut rng, n)
}

/// Offset `ω_n` uniform on `{-n, …, n}`.
///
/// The stream position is a function of `n` alone, so each level's draw is
/// independent of evaluation order. A 128-bit draw reduced mod `2n + 1` has
/// bias below `2^-60` for every representable `n`.
fn draw_offset(rng: &mut ChaCha8Rng, n: u64) -> i64 {
    rng.set_word_pos(u128::from(n) * 4);
    let hi = u128::from(rng.next_u64());
    let lo = u128::from(rng.next_u64());
    let wide = (hi << 64) | lo;
    let width = 2 * u128::from(n) + 1;
    (wide % width) as i64 - n as i64
}

/// Construction options for [`EnergyPoint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyOptions {
    pub k_min: f64,
    /// Requested phase bits; refused if below the floor.
    pub bits: Option<u64>,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self { k_min: DEFAULT_K_MIN, bits: None }
    }
}

/// A quasimomentum `k` with `E = 2cos k`, `v_k = -v / sin k` and its phase.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPoint {
    k: f64,
    e: f64,
    sin_k: f64,
    cos_k: f64,
    v: f64,
    v_k: f64,
    phase: FixedPointPhase,
}

impl EnergyPoint {
    /// Energy point for `n_max` levels of a `γ`-sparse potential.
    pub fn new(k: f64, v: f64, n_max: usize, gamma: u64) -> Result<Self> {
        if gamma < 2 {
            return Err(Error::Domain(format!("gamma must be >= 2, got {gamma}")));
        }
        let floor = depth_bits(gamma, n_max) + PHASE_HEADROOM_BITS;
        Self::with_floor(k, v, floor, EnergyOptions::default())
    }

    pub fn for_spec(spec: &SparseSpec, k: f64) -> Result<Self> {
        Self::for_spec_with(spec, k, EnergyOptions::default())
    }

    pub fn for_spec_with(spec: &SparseSpec, k: f64, opts: EnergyOptions) -> Result<Self> {
        Self::with_floor(k, spec.v(), spec.phase_bits_floor(), opts)
    }

    /// Energy point whose phase carries at least `floor` fractional bits.
    pub fn with_floor(k: f64, v: f64, floor: u64, opts: EnergyOptions) -> Result<Self> {
        if !(opts.k_min > 0.0 && opts.k_min < PI / 2.0) {
            return Err(Error::Domain(format!("k_min must lie in (0, π/2), got {}", opts.k_min)));
        }
        if !k.is_finite() || k < opts.k_min || k > PI - opts.k_min {
            return Err(Error::Domain(format!(
                "k = {k} outside [{}, π - {}]",
                opts.k_min, opts.k_min
            )));
        }
        if !v.is_finite() {
            return Err(Error::Domain(format!("amplitude must be finite, got {v}")));
        }
        let bits = match opts.bits {
            Some(b) if b < floor => return Err(Error::PrecisionFloor { requested: b, floor }),
            Some(b) => b,
            None => floor,
        };
        let (sin_k, cos_k) = k.sin_cos();
        Ok(Self {
            k,
            e: 2.0 * cos_k,
            sin_k,
            cos_k,
            v,
            v_k: -v / sin_k,
            phase: FixedPointPhase::from_angle(k, bits)?,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn energy(&self) -> f64 {
        self.e
    }
    pub fn sin_k(&self) -> f64 {
        self.sin_k
    }
    pub fn cos_k(&self) -> f64 {
        self.cos_k
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    pub fn v_k(&self) -> f64 {
        self.v_k
    }
    /// `-a / sin k` for a barrier of amplitude `a`.
    pub fn coupling(&self, amplitude: f64) -> f64 {
        -amplitude / self.sin_k
    }
    pub fn phase(&self) -> &FixedPointPhase {
        &self.phase
    }
    pub fn bits(&self) -> u64 {
        self.phase.frac_bits()
    }

    /// The same energy with `extra` more phase bits.
    pub fn refined(&self, extra: u64) -> Result<Self> {
        let mut out = self.clone();
        out.phase = FixedPointPhase::from_angle(self.k, self.bits() + extra)?;
        Ok(out)
    }
}

/// Log radius, angle and site of an EFGP state.
#[derive(Debug, Clone, PartialEq)]
pub struct PruferState {
    pub ln_r: f64,
    pub theta: f64,
    pub site: BigUint,
}

/// Essential spectrum of the half-line operator: the band `[-2, 2]` plus `sgn(v)√(4 + v²)`.
pub fn essential_spectrum(v: f64) -> ((f64, f64), Option<f64>) {
    let isolated = if v == 0.0 { None } else { Some(v.signum() * (4.0 + v * v).sqrt()) };
    ((-2.0, 2.0), isolated)
}

#[derive(Serialize, Deserialize)]
struct WireSpec {
    v: f64,
    rule: WireRule,
    n_max: usize,
}

#[derive(Serialize, Deserialize)]
struct WireRule {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sites: Option<Vec<(String, f64)>>,
}

impl TryFrom<WireSpec> for SparseSpec {
    type Error = Error;

    fn try_from(w: WireSpec) -> Result<Self> {
        let need_gamma = || w.rule.gamma.ok_or_else(|| Error::Spec("rule needs \"gamma\"".into()));
        let rule = match w.rule.kind.as_str() {
            "deterministic" => SparsityRule::Deterministic { gamma: need_gamma()? },
            "random" => SparsityRule::Random {
                gamma: need_gamma()?,
                seed: w.rule.seed.ok_or_else(|| Error::Spec("random rule needs \"seed\"".into()))?,
                sample: w.rule.sample.unwrap_or(0),
            },
            "explicit" => {
                let raw = w.rule.sites.ok_or_else(|| Error::Spec("explicit rule needs \"sites\"".into()))?;
                let mut sites = Vec::with_capacity(raw.len());
                for (s, a) in raw {
                    let x = s
                        .parse::<BigUint>()
                        .map_err(|_| Error::Spec(format!("position {s:?} is not a decimal integer")))?;
                    sites.push((x, a));
                }
                SparsityRule::Explicit(sites)
            }
            other => return Err(Error::Spec(format!("unknown rule kind {other:?}"))),
        };
        SparseSpec::new(w.v, rule, w.n_max)
    }
}

impl From<SparseSpec> for WireSpec {
    fn from(s: SparseSpec) -> Self {
        let rule = match s.rule {
            SparsityRule::Deterministic { gamma } => WireRule {
                kind: "deterministic".into(),
                gamma: Some(gamma),
                seed: None,
                sample: None,
                sites: None,
            },
            SparsityRule::Random { gamma, seed, sample } => WireRule {
                kind: "random".into(),
                gamma: Some(gamma),
                seed: Some(seed),
                sample: (sample != 0).then_some(sample),
                sites: None,
            },
            SparsityRule::Explicit(list) => WireRule {
                kind: "explicit".into(),
                gamma: None,
                seed: None,
                sample: None,
                sites: Some(list.into_iter().map(|(x, a)| (x.to_str_radix(10), a)).collect()),
            },
        };
        WireSpec { v: s.v, rule, n_max: s.n_max }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn make_energy_examples() {
        let e = EnergyPoint::new(FRAC_PI_2, 0.5, 10, 2).unwrap();
        assert!(e.energy().abs() < 1e-15);
        assert!((e.v_k() + 0.5).abs() < 1e-15);
        assert_eq!(e.bits(), 74);

        let e = EnergyPoint::new(PI / 3.0, 0.3, 10, 2).unwrap();
        assert!((e.energy() - 1.0).abs() < 1e-15);
        assert!((e.v_k() + 0.3464101615137754).abs() < 1e-15);

        assert_eq!(EnergyPoint::new(0.01, 0.5, 10, 2).unwrap_err().kind(), "DomainError");
        assert_eq!(EnergyPoint::new(PI - 0.05, 0.5, 10, 2).unwrap_err().kind(), "DomainError");
    }

    #[test]
    fn precision_floor_is_enforced() {
        let spec = SparseSpec::deterministic(0.5, 2, 2000).unwrap();
        let opts = EnergyOptions { bits: Some(100), ..Default::default() };
        let err = EnergyPoint::for_spec_with(&spec, 1.0, opts).unwrap_err();
        assert_eq!(err, Error::PrecisionFloor { requested: 100, floor: 2064 });
        let opts = EnergyOptions { bits: Some(3000), ..Default::default() };
        assert_eq!(EnergyPoint::for_spec_with(&spec, 1.0, opts).unwrap().bits(), 3000);
    }

    #[test]
    fn depth_bits_is_exact_ceiling() {
        assert_eq!(depth_bits(2, 10), 10);
        assert_eq!(depth_bits(2, 500), 500);
        assert_eq!(depth_bits(10, 1), 4);
        assert_eq!(depth_bits(3, 12), 20); // 3^12 = 531441, log2 = 19.02
        assert_eq!(depth_bits(8, 25), 75);
    }

    #[test]
    fn deterministic_positions() {
        let s = SparseSpec::deterministic(0.5, 2, 4).unwrap();
        let xs: Vec<u64> = s.positions().iter().map(|p| u64::try_from(&p.x).unwrap()).collect();
        assert_eq!(xs, vec![2, 4, 8, 16]);
        assert!(s.positions().iter().all(|p| p.amplitude == 0.5));
    }

    #[test]
    fn random_positions_in_support_and_reproducible() {
        for seed in 0..20 {
            let s = SparseSpec::random(0.5, 10, seed, 0, 3).unwrap();
            let p = s.positions();
            let x3 = u64::try_from(&p[2].x).unwrap();
            assert!((997..=1003).contains(&x3));
            assert_eq!(p, s.positions());
        }
        let a = SparseSpec::random(0.5, 10, 1, 0, 40).unwrap().positions();
        let b = SparseSpec::random(0.5, 10, 1, 1, 40).unwrap().positions();
        assert_ne!(a, b);
        // a shallow prefix is a prefix of the deeper draw
        let c = SparseSpec::random(0.5, 10, 1, 0, 10).unwrap().positions();
        assert_eq!(&a[..10], &c[..]);
    }

    #[test]
    fn random_positions_strictly_increase_for_gamma_two() {
        for seed in 0..50 {
            let p = SparseSpec::random(0.5, 2, seed, 0, 12).unwrap().positions();
            assert!(p.windows(2).all(|w| w[0].x < w[1].x));
        }
    }

    #[test]
    fn explicit_rejects_non_increasing() {
        let err = SparseSpec::explicit(vec![(5u32.into(), 1.0), (3u32.into(), 1.0)]).unwrap_err();
        assert_eq!(err.kind(), "SpecError");
        assert!(SparseSpec::explicit(vec![(0u32.into(), 1.0)]).is_err());
        assert!(SparseSpec::deterministic(0.0, 2, 3).is_err());
        assert!(SparseSpec::deterministic(0.5, 1, 3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let big: BigUint = BigUint::one() << 100usize;
        let specs = [
            SparseSpec::deterministic(0.5, 2, 12).unwrap(),
            SparseSpec::random(-0.25, 3, 7, 4, 9).unwrap(),
            SparseSpec::explicit(vec![(3u32.into(), 1.0), (big.clone(), -0.5)]).unwrap(),
        ];
        for s in &specs {
            let text = serde_json::to_string(s).unwrap();
            let back: SparseSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(&back, s);
        }
        let text = serde_json::to_string(&specs[2]).unwrap();
        assert!(text.contains("\"1267650600228229401496703205376\""));
        let bad = r#"{"v":1,"rule":{"kind":"explicit","sites":[["5",1],["3",1]]},"n_max":2}"#;
        assert!(serde_json::from_str::<SparseSpec>(bad).is_err());
    }

    #[test]
    fn essential_spectrum_examples() {
        assert_eq!(essential_spectrum(0.0), ((-2.0, 2.0), None));
        let (_, p) = essential_spectrum(1.0);
        assert!((p.unwrap() - 2.2360680).abs() < 1e-7);
        let (_, p) = essential_spectrum(-1.0);
        assert!((p.unwrap() + 2.2360680).abs() < 1e-7);
    }
}
