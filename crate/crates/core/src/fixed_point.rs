//! Q16.8 saturating fixed-point arithmetic.
//!
//! Samples are stored as 24-bit two's-complement integers (sign, 15 integer
//! bits, 8 fraction bits) inside an `i32`. Every operation that can leave the
//! representable range saturates and raises the sticky overflow flag of the
//! [`FixedContext`] it ran on.
//!
//! Constant multiplication goes through canonical signed-digit encodings
//! ([`CsdConstant`]) so that each product is a sequence of shifts and adds,
//! and division by a positive spacing goes through a reciprocal lookup table.
//! Spline coefficient arithmetic uses a wider accumulator ([`wide`]) with 32
//! fractional bits, rounded back to Q16.8 on output.

use std::cell::Cell;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{MemdError, Result};

/// Number of fractional bits in a Q16.8 sample.
pub const FRAC_BITS: u32 = 8;
/// Largest raw value (`+32767.99609375`).
pub const RAW_MAX: i32 = (1 << 23) - 1;
/// Smallest raw value (`-32768.0`).
pub const RAW_MIN: i32 = -(1 << 23);
/// Largest denominator (in raw units) covered by the reciprocal table: 256.0.
pub const LUT_MAX_RAW: i32 = 256 << FRAC_BITS;

/// A saturating Q16.8 fixed-point sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FixedQ16_8(i32);

impl FixedQ16_8 {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1 << FRAC_BITS);
    pub const MAX: Self = Self(RAW_MAX);
    pub const MIN: Self = Self(RAW_MIN);
    /// One least-significant bit, 2^-8.
    pub const LSB: f64 = 1.0 / (1u32 << FRAC_BITS) as f64;

    /// Wraps a raw integer, saturating it into the 24-bit range.
    pub fn from_raw(raw: i64) -> Self {
        saturate(raw).0
    }

    pub const fn raw(self) -> i32 {
        self.0
    }

    pub fn to_real(self) -> f64 {
        self.0 as f64 * Self::LSB
    }

    /// Round-to-nearest-even quantization. Returns the value and whether it
    /// saturated. NaN quantizes to zero and counts as a saturation event.
    pub fn quantize(v: f64) -> (Self, bool) {
        if v.is_nan() {
            return (Self::ZERO, true);
        }
        let scaled = v * (1u32 << FRAC_BITS) as f64;
        if scaled >= RAW_MAX as f64 + 0.5 {
            return (Self::MAX, true);
        }
        if scaled < RAW_MIN as f64 - 0.5 {
            return (Self::MIN, true);
        }
        saturate(scaled.round_ties_even() as i64)
    }
}

impl fmt::Display for FixedQ16_8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_real())
    }
}

fn saturate(raw: i64) -> (FixedQ16_8, bool) {
    if raw > RAW_MAX as i64 {
        (FixedQ16_8::MAX, true)
    } else if raw < RAW_MIN as i64 {
        (FixedQ16_8::MIN, true)
    } else {
        (FixedQ16_8(raw as i32), false)
    }
}

/// Arithmetic right shift with round-half-to-even.
pub(crate) fn round_shift(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let q = v >> shift;
    let rem = v - (q << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && q & 1 == 1) {
        q + 1
    } else {
        q
    }
}

/// Integer division `n / d` for `d > 0` with round-half-to-even.
pub(crate) fn round_div(n: i128, d: i128) -> i128 {
    debug_assert!(d > 0);
    let q = n.div_euclid(d);
    let rem = n.rem_euclid(d);
    let twice = 2 * rem;
    if twice > d || (twice == d && q & 1 == 1) {
        q + 1
    } else {
        q
    }
}

/// One nonzero digit of a signed-digit constant: `±2^-shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsdTerm {
    pub negative: bool,
    pub shift: i32,
}

/// A real constant encoded in canonical signed-digit (non-adjacent) form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsdConstant {
    value: f64,
    frac_bits: u32,
    terms: Vec<CsdTerm>,
}

impl CsdConstant {
    /// Fractional precision used for direction coefficients and averaging
    /// constants.
    pub const DEFAULT_FRAC_BITS: u32 = 24;

    pub fn new(value: f64) -> Self {
        Self::with_precision(value, Self::DEFAULT_FRAC_BITS)
    }

    /// Encodes `value` rounded to `frac_bits` fractional bits as a
    /// non-adjacent signed-digit sum.
    pub fn with_precision(value: f64, frac_bits: u32) -> Self {
        assert!(frac_bits <= 40, "CSD precision limited to 40 fractional bits");
        let mut q = (value * (1u64 << frac_bits) as f64).round() as i64;
        let mut terms = Vec::new();
        let mut pos: i32 = 0;
        while q != 0 {
            if q & 1 != 0 {
                // Digit is +1 if q = 1 (mod 4), -1 if q = 3 (mod 4).
                let digit = 2 - q.rem_euclid(4);
                terms.push(CsdTerm {
                    negative: digit < 0,
                    shift: frac_bits as i32 - pos,
                });
                q -= digit;
            }
            q >>= 1;
            pos += 1;
        }
        terms.reverse();
        Self {
            value,
            frac_bits,
            terms,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// Digits ordered from most to least significant.
    pub fn terms(&self) -> &[CsdTerm] {
        &self.terms
    }

    /// The constant actually encoded by the digits.
    pub fn represented(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mag = 2f64.powi(-t.shift);
                if t.negative {
                    -mag
                } else {
                    mag
                }
            })
            .sum()
    }

    /// `x * constant`, scaled up by `2^frac_bits`, computed exactly with
    /// shifts and adds.
    pub fn apply_scaled(&self, x: i64) -> i128 {
        let wide = x as i128;
        self.terms.iter().fold(0i128, |acc, t| {
            let shifted = wide << (self.frac_bits as i32 - t.shift) as u32;
            if t.negative {
                acc - shifted
            } else {
                acc + shifted
            }
        })
    }
}

fn reciprocal_table() -> &'static [i64] {
    static TABLE: OnceLock<Vec<i64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // entry[r] = 1 / (r * 2^-8) in Q.32, i.e. round(2^40 / r).
        let mut table = vec![0i64; LUT_MAX_RAW as usize + 1];
        for (r, slot) in table.iter_mut().enumerate().skip(1) {
            *slot = round_div(1i128 << 40, r as i128) as i64;
        }
        table
    })
}

/// Q.32 reciprocal of a positive Q16.8 raw denominator, if it lies inside the
/// table domain `[1 LSB, 256.0]`.
pub fn reciprocal_q32(den_raw: i64) -> Option<i64> {
    if den_raw >= 1 && den_raw <= LUT_MAX_RAW as i64 {
        Some(reciprocal_table()[den_raw as usize])
    } else {
        None
    }
}

/// Counters kept by a [`FixedContext`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixedStats {
    pub saturations: u64,
    pub lut_hits: u64,
    pub lut_misses: u64,
}

/// Per-decomposition arithmetic context holding the sticky overflow flag and
/// lookup-table statistics. Not shared across threads.
#[derive(Debug, Default)]
pub struct FixedContext {
    stats: Cell<FixedStats>,
}

impl FixedContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sticky flag: true once any operation has saturated.
    pub fn overflowed(&self) -> bool {
        self.stats.get().saturations > 0
    }

    pub fn stats(&self) -> FixedStats {
        self.stats.get()
    }

    pub fn reset(&self) {
        self.stats.set(FixedStats::default());
    }

    fn update(&self, f: impl FnOnce(&mut FixedStats)) {
        let mut s = self.stats.get();
        f(&mut s);
        self.stats.set(s);
    }

    /// Saturates a raw integer result, recording the event.
    pub fn saturate(&self, raw: i128) -> FixedQ16_8 {
        let clamped = raw.clamp(i64::MIN as i128, i64::MAX as i128) as i64;
        let (v, sat) = saturate(clamped);
        if sat {
            self.update(|s| s.saturations += 1);
        }
        v
    }

    pub fn from_real(&self, v: f64) -> FixedQ16_8 {
        let (q, sat) = FixedQ16_8::quantize(v);
        if sat {
            self.update(|s| s.saturations += 1);
        }
        q
    }

    pub fn add(&self, a: FixedQ16_8, b: FixedQ16_8) -> FixedQ16_8 {
        self.saturate(a.0 as i128 + b.0 as i128)
    }

    pub fn sub(&self, a: FixedQ16_8, b: FixedQ16_8) -> FixedQ16_8 {
        self.saturate(a.0 as i128 - b.0 as i128)
    }

    pub fn mul(&self, a: FixedQ16_8, b: FixedQ16_8) -> FixedQ16_8 {
        let product = a.0 as i128 * b.0 as i128;
        self.saturate(round_shift(product, FRAC_BITS))
    }

    /// Constant multiplication by shifts and adds, rounded once.
    pub fn csd_mul(&self, a: FixedQ16_8, c: &CsdConstant) -> FixedQ16_8 {
        self.saturate(round_shift(c.apply_scaled(a.0 as i64), c.frac_bits()))
    }

    /// `num / den` through the reciprocal table, falling back to exact
    /// rounded division outside the table domain.
    pub fn div_lut(&self, num: FixedQ16_8, den: FixedQ16_8) -> Result<FixedQ16_8> {
        if den.0 <= 0 {
            return Err(MemdError::Domain(den.to_real()));
        }
        match reciprocal_q32(den.0 as i64) {
            Some(recip) => {
                self.update(|s| s.lut_hits += 1);
                Ok(self.saturate(round_shift(num.0 as i128 * recip as i128, 32)))
            }
            None => {
                self.update(|s| s.lut_misses += 1);
                let n = (num.0 as i128) << FRAC_BITS;
                Ok(self.saturate(round_div(n, den.0 as i128)))
            }
        }
    }

    pub(crate) fn note_lut(&self, hit: bool) {
        self.update(|s| {
            if hit {
                s.lut_hits += 1
            } else {
                s.lut_misses += 1
            }
        });
    }
}

/// Wide internal accumulator: `i64` with [`wide::FRAC`] fractional bits.
pub mod wide {
    use super::{
        reciprocal_q32, round_div, round_shift, CsdConstant, FixedContext, FixedQ16_8, FRAC_BITS,
    };

    pub const FRAC: u32 = 32;
    pub const ONE: i64 = 1 << FRAC;

    pub fn from_fixed(x: FixedQ16_8) -> i64 {
        (x.raw() as i64) << (FRAC - FRAC_BITS)
    }

    pub fn from_int(n: i64) -> i64 {
        n << FRAC
    }

    pub fn to_fixed(ctx: &FixedContext, x: i64) -> FixedQ16_8 {
        ctx.saturate(round_shift(x as i128, FRAC - FRAC_BITS))
    }

    pub fn mul(a: i64, b: i64) -> i64 {
        round_shift(a as i128 * b as i128, FRAC) as i64
    }

    pub fn mul_csd(a: i64, c: &CsdConstant) -> i64 {
        round_shift(c.apply_scaled(a), c.frac_bits()) as i64
    }

    /// Exact rounded quotient of two wide values (`den > 0`).
    pub fn div(num: i64, den: i64) -> i64 {
        round_div((num as i128) << FRAC, den as i128) as i64
    }

    /// Q.32 reciprocal of a positive integer sample spacing, via the table
    /// when the spacing is at most 256 samples.
    pub fn reciprocal_of_spacing(ctx: &FixedContext, h: i64) -> i64 {
        debug_assert!(h > 0);
        match reciprocal_q32(h << FRAC_BITS) {
            Some(r) => {
                ctx.note_lut(true);
                r
            }
            None => {
                ctx.note_lut(false);
                round_div(1i128 << FRAC, h as i128) as i64
            }
        }
    }
}
