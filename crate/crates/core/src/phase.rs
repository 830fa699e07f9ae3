//! Fixed-point representation of `k / 2π` and exact long-range angle reduction.
//!
//! Free propagation over a gap of `m` sites advances the Prüfer angle by `m·k`.
//! Gaps reach `γⁿ` sites, far beyond what a double can multiply without losing
//! every significant bit of the fractional turn, so the turn count `k / 2π` is
//! stored as a `B`-bit binary fraction and multiplied exactly.

use std::f64::consts::TAU;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Extra bits carried beyond `B` while computing the mantissa.
const GUARD_BITS: u64 = 64;

/// `k / 2π mod 1` stored as `mantissa / 2^frac_bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointPhase {
    frac_bits: u64,
    mantissa: BigUint,
}

impl FixedPointPhase {
    /// Phase of the angle `k` (radians, `k >= 0`) with `frac_bits` fractional bits.
    pub fn from_angle(k: f64, frac_bits: u64) -> Result<Self> {
        if !k.is_finite() || k < 0.0 {
            return Err(Error::Domain(format!("phase angle must be finite and nonnegative, got {k}")));
        }
        if k == 0.0 {
            return Ok(Self { frac_bits, mantissa: BigUint::zero() });
        }
        let (m, e) = decompose(k);
        let pi_bits = frac_bits + GUARD_BITS;
        let pi = pi_fixed(pi_bits);
        // mantissa = round(m · 2^e · 2^B / (2π)) with 2π ≈ pi · 2^(1 - pi_bits)
        let shift = e + frac_bits as i64 + pi_bits as i64 - 1;
        let mut num = BigUint::from(m);
        let mut den = pi;
        if shift >= 0 {
            num <<= shift as usize;
        } else {
            den <<= (-shift) as usize;
        }
        let half = &den >> 1usize;
        let mut mantissa = (num + half) / den;
        let modulus = BigUint::one() << frac_bits as usize;
        mantissa %= &modulus;
        Ok(Self { frac_bits, mantissa })
    }

    /// Build directly from a binary fraction; `mantissa` is reduced mod `2^frac_bits`.
    pub fn from_parts(mantissa: BigUint, frac_bits: u64) -> Self {
        let modulus = BigUint::one() << frac_bits as usize;
        Self { frac_bits, mantissa: mantissa % modulus }
    }

    pub fn frac_bits(&self) -> u64 {
        self.frac_bits
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    /// The stored turn fraction rounded to a double.
    pub fn turns(&self) -> f64 {
        fraction_to_f64(&self.mantissa, self.frac_bits)
    }
}

/// `2π · frac(mantissa · x / 2^B)`, in `[0, 2π)`.
///
/// Absolute error is at most `2π · x · 2^-B` from the stored phase plus one
/// rounding of the final double.
pub fn reduce_phase(phase: &FixedPointPhase, x: &BigUint) -> f64 {
    if x.is_zero() || phase.mantissa.is_zero() {
        return 0.0;
    }
    let prod = &phase.mantissa * x;
    let low = if phase.frac_bits == 0 {
        BigUint::zero()
    } else {
        let mask = (BigUint::one() << phase.frac_bits as usize) - 1u32;
        prod & mask
    };
    let angle = TAU * fraction_to_f64(&low, phase.frac_bits);
    if angle >= TAU {
        angle - TAU
    } else {
        angle
    }
}

/// `value / 2^bits` for `value < 2^bits`, using the leading 64 bits.
fn fraction_to_f64(value: &BigUint, bits: u64) -> f64 {
    if value.is_zero() {
        return 0.0;
    }
    let top: u64 = if bits >= 64 {
        (value >> (bits - 64) as usize).to_u64().unwrap_or(u64::MAX)
    } else {
        (value << (64 - bits) as usize).to_u64().unwrap_or(u64::MAX)
    };
    top as f64 * 2f64.powi(-64)
}

/// Split a positive finite double into `m · 2^e` with integer `m`.
fn decompose(x: f64) -> (u64, i64) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

static PI_CACHE: Mutex<Option<(u64, BigUint)>> = Mutex::new(None);

/// `floor(π · 2^bits)` up to a few units in the last place.
///
/// Machin's formula in fixed point; the largest computed value is cached and
/// shifted down for smaller requests.
pub fn pi_fixed(bits: u64) -> BigUint {
    let mut cache = PI_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((cached_bits, value)) = cache.as_ref() {
        if *cached_bits >= bits {
            return value >> (*cached_bits - bits) as usize;
        }
    }
    let work = bits.max(256) + 32;
    let value = machin_pi(work);
    let out = &value >> (work - bits) as usize;
    *cache = Some((work, value));
    out
}

fn machin_pi(bits: u64) -> BigUint {
    let a = arctan_inv(5, bits);
    let b = arctan_inv(239, bits);
    let pi: BigInt = a * 16u32 - b * 4u32;
    pi.to_biguint().expect("pi is positive")
}

/// `atan(1/x) · 2^bits` by the alternating Taylor series.
fn arctan_inv(x: u32, bits: u64) -> BigInt {
    let one = BigInt::one() << bits as usize;
    let x2 = BigInt::from(u64::from(x) * u64::from(x));
    let mut power = one / x;
    let mut sum = power.clone();
    let mut n: u64 = 1;
    loop {
        power /= &x2;
        if power.is_zero() {
            break;
        }
        let term = &power / (2 * n + 1);
        if n % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        n += 1;
    }
    sum
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

// by-value helpers rather than operator traits, to keep call sites explicit about precision
#[allow(clippy::should_implement_trait)]
impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn mul(self, other: Self) -> Self {
        let p = self.hi * other.hi;
        let e = self.hi.mul_add(other.hi, -p);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// `(sin k, cos k)` to roughly 106 bits, for `|k| < 8`.
///
/// Used by the site-by-site oracle so that its energy `2cos k` is not off by a
/// double rounding that would accumulate over long free stretches.
pub fn sin_cos_dd(k: f64) -> (DoubleDouble, DoubleDouble) {
    const P: u64 = 192;
    let x = f64_to_fixed(k, P);
    let scale = BigInt::one() << P as usize;
    let x2 = (&x * &x) >> P as usize;
    // term_j = (-1)^j x^(2j) / (2j)!  and  x^(2j+1) / (2j+1)!
    let mut cos_sum = scale.clone();
    let mut sin_sum = x.clone();
    let mut cos_term = scale;
    let mut sin_term = x;
    let mut j: u64 = 1;
    loop {
        cos_term = -((&cos_term * &x2) >> P as usize) / ((2 * j - 1) * (2 * j));
        sin_term = -((&sin_term * &x2) >> P as usize) / ((2 * j) * (2 * j + 1));
        if cos_term.is_zero() && sin_term.is_zero() {
            break;
        }
        cos_sum += &cos_term;
        sin_sum += &sin_term;
        j += 1;
    }
    (fixed_to_dd(&sin_sum, P), fixed_to_dd(&cos_sum, P))
}

fn f64_to_fixed(x: f64, bits: u64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let (m, e) = decompose(x.abs());
    let shift = e + bits as i64;
    let mag = if shift >= 0 {
        BigInt::from(m) << shift as usize
    } else {
        BigInt::from(m) >> (-shift) as usize
    };
    if x < 0.0 {
        -mag
    } else {
        mag
    }
}

fn fixed_to_f64(v: &BigInt, bits: u64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let mag = v.abs().to_biguint().expect("abs is nonnegative");
    let len = mag.bits();
    let (top, exp) = if len > 64 {
        ((&mag >> (len - 64) as usize).to_u64().unwrap_or(u64::MAX), len as i64 - 64)
    } else {
        (mag.to_u64().unwrap_or(u64::MAX), 0)
    };
    let out = top as f64 * 2f64.powi((exp - bits as i64) as i32);
    if v.sign() == Sign::Minus {
        -out
    } else {
        out
    }
}

fn fixed_to_dd(v: &BigInt, bits: u64) -> DoubleDouble {
    let hi = fixed_to_f64(v, bits);
    let rest = v - f64_to_fixed(hi, bits);
    DoubleDouble { hi, lo: fixed_to_f64(&rest, bits) }
}
