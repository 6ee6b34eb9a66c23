//! Quantization grids and the two arithmetic primitives everything else is
//! built from: saturating clamp and round-half-up.

use num::{BigInt, BigRational, One};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Signedness of a fixed-point grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    /// Unsigned: grid `[0, 2^Q - 1]`.
    #[serde(rename = "+")]
    Unsigned,
    /// Two's complement: grid `[-2^(Q-1), 2^(Q-1) - 1]`.
    #[serde(rename = "+-", alias = "±")]
    Signed,
}

/// A fixed-point quantization configuration: signedness, total bit width `Q`,
/// and fraction bit count `F`. A grid value `v` represents the real number
/// `v / 2^F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantConfig {
    pub sign: Sign,
    #[serde(rename = "Q")]
    pub total_bits: u32,
    #[serde(rename = "F")]
    pub frac_bits: u32,
}

/// Widths above this make the exact i128 accumulation paths overflow-prone;
/// nothing in scope needs more than 16 bits.
pub const MAX_TOTAL_BITS: u32 = 30;

impl QuantConfig {
    pub fn new(sign: Sign, total_bits: u32, frac_bits: u32) -> Result<Self, ModelError> {
        let cfg = QuantConfig {
            sign,
            total_bits,
            frac_bits,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.total_bits == 0 || self.total_bits > MAX_TOTAL_BITS {
            return Err(ModelError::BadConfig(format!(
                "total bits must be in 1..={MAX_TOTAL_BITS}, got {}",
                self.total_bits
            )));
        }
        if self.frac_bits > self.total_bits {
            return Err(ModelError::BadConfig(format!(
                "fraction bits {} exceed total bits {}",
                self.frac_bits, self.total_bits
            )));
        }
        Ok(())
    }

    /// Smallest representable grid integer.
    pub fn lb(&self) -> i64 {
        match self.sign {
            Sign::Unsigned => 0,
            Sign::Signed => -(1i64 << (self.total_bits - 1)),
        }
    }

    /// Largest representable grid integer.
    pub fn ub(&self) -> i64 {
        match self.sign {
            Sign::Unsigned => (1i64 << self.total_bits) - 1,
            Sign::Signed => (1i64 << (self.total_bits - 1)) - 1,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lb() <= v && v <= self.ub()
    }

    /// `ub - lb`, the number of grid steps.
    pub fn span(&self) -> i64 {
        self.ub() - self.lb()
    }

    /// The scale factor `2^F` as an exact rational.
    pub fn scale(&self) -> BigRational {
        BigRational::from_integer(BigInt::one() << self.frac_bits)
    }
}

impl std::fmt::Display for QuantConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = match self.sign {
            Sign::Unsigned => "+",
            Sign::Signed => "+-",
        };
        write!(f, "<{sign},{},{}>", self.total_bits, self.frac_bits)
    }
}

/// Clamp `u` into `[lo, hi]`. Panics if `lo > hi`; ranges are validated where
/// they are built, so an inverted range here is a caller bug.
pub fn clamp<T: Ord>(u: T, lo: T, hi: T) -> T {
    assert!(lo <= hi, "clamp range is inverted");
    if u < lo {
        lo
    } else if u > hi {
        hi
    } else {
        u
    }
}

/// Round to the nearest integer with ties toward positive infinity:
/// `floor(q + 1/2)`. This is the rounding applied after every fixed-point
/// rescale, so e.g. `round_half_up(-2.5) = -2`.
pub fn round_half_up(q: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (q + half).floor().to_integer()
}

/// `round_half_up(num / 2^pow2)` in pure integer arithmetic. Returns `None`
/// on overflow (the caller maps that to [`ModelError::Overflow`]).
pub fn round_half_up_pow2(num: i128, pow2: u32) -> Option<i128> {
    // floor(num/2^p + 1/2) = floor((2*num + 2^p) / 2^(p+1))
    let doubled = num.checked_mul(2)?;
    let den_exp = pow2.checked_add(1)?;
    if den_exp >= 127 {
        return None;
    }
    let shifted = doubled.checked_add(1i128.checked_shl(pow2)?)?;
    Some(shifted.div_euclid(1i128 << den_exp))
}
