//! Precision policy shared by every numeric module.
//!
//! All real values are MPFR floats (`rug::Float`). A [`PrecisionContext`] is
//! passed explicitly to each evaluator; there is no process-global precision.

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Configurable-precision real value.
pub type RealScalar = Float;

/// Smallest accepted target precision (single-precision mantissa).
pub const MIN_TARGET_BITS: u32 = 24;

/// Default guard bits added on top of the requested precision.
pub const DEFAULT_GUARD_BITS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionContext {
    target_bits: u32,
    guard_bits: u32,
}

impl PrecisionContext {
    pub fn new(target_bits: u32) -> Result<Self> {
        Self::with_guard(target_bits, DEFAULT_GUARD_BITS)
    }

    pub fn with_guard(target_bits: u32, guard_bits: u32) -> Result<Self> {
        if target_bits < MIN_TARGET_BITS {
            return Err(Error::Domain(format!(
                "target precision {target_bits} bits is below the minimum of {MIN_TARGET_BITS}"
            )));
        }
        target_bits
            .checked_add(guard_bits)
            .filter(|w| *w <= rug::float::prec_max())
            .ok_or_else(|| Error::Domain("working precision overflows".into()))?;
        Ok(Self {
            target_bits,
            guard_bits,
        })
    }

    pub fn target_bits(&self) -> u32 {
        self.target_bits
    }

    pub fn guard_bits(&self) -> u32 {
        self.guard_bits
    }

    /// `target_bits + guard_bits`.
    pub fn working_bits(&self) -> u32 {
        self.target_bits + self.guard_bits
    }

    /// Same target, `extra` more guard bits.
    pub fn widened(&self, extra: u32) -> Self {
        Self {
            target_bits: self.target_bits,
            guard_bits: self.guard_bits + extra,
        }
    }

    /// Same guard, doubled target.
    pub fn doubled(&self) -> Self {
        Self {
            target_bits: self.target_bits * 2,
            guard_bits: self.guard_bits,
        }
    }

    /// A float at working precision.
    pub fn real<T>(&self, v: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.working_bits(), v)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.working_bits(), Constant::Pi)
    }

    pub fn ln2(&self) -> Float {
        Float::with_val(self.working_bits(), Constant::Log2)
    }

    /// 2^-target_bits, the unit of the requested precision.
    pub fn target_ulp(&self) -> Float {
        let one = Float::with_val(self.working_bits(), 1);
        one >> self.target_bits
    }

    /// 2^-working_bits.
    pub fn working_ulp(&self) -> Float {
        let one = Float::with_val(self.working_bits(), 1);
        one >> self.working_bits()
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            target_bits: 128,
            guard_bits: DEFAULT_GUARD_BITS,
        }
    }
}

/// Number of decimal digits that guarantees an exact round trip of a
/// `prec`-bit mantissa through a decimal string.
pub fn roundtrip_digits(prec: u32) -> usize {
    // 1 + ceil(prec * log10(2))
    1 + ((prec as f64) * std::f64::consts::LOG10_2).ceil() as usize
}

/// Decimal scientific notation carrying every bit of `v`.
pub fn format_real(v: &Float) -> String {
    if v.is_zero() {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = roundtrip_digits(v.prec());
    let s = v.to_string_radix(10, Some(digits));
    normalize_sci(&s)
}

/// Short human-readable rendering with `digits` significant digits.
pub fn format_short(v: &Float, digits: usize) -> String {
    if v.is_zero() || !v.is_finite() {
        return format_real(v);
    }
    normalize_sci(&v.to_string_radix(10, Some(digits.max(1))))
}

// MPFR writes "1.2345e-3" or "1.2345"; make the exponent explicit everywhere.
fn normalize_sci(s: &str) -> String {
    if s.contains('e') {
        s.to_string()
    } else {
        format!("{s}e0")
    }
}

/// Parse a decimal string produced by [`format_real`] at precision `prec`.
pub fn parse_real(s: &str, prec: u32) -> Result<Float> {
    let parsed = Float::parse(s.trim())
        .map_err(|e| Error::Parse(format!("invalid real literal {s:?}: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

/// Nearest f64, for display and coarse heuristics only.
pub fn to_f64(v: &Float) -> f64 {
    v.to_f64()
}
