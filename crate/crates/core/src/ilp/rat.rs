//! Exact rational arithmetic for the LP machinery.
//!
//! [`Rat`] is a reduced fraction with a small fast tier (i64 numerator and
//! denominator, all intermediate products in i128) and an arbitrary-precision
//! fallback. Simplex tableaus pivot millions of times on values that almost
//! always stay tiny; the fallback only exists so exactness never depends on
//! that observation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::Sign as BigSign;
use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

#[derive(Clone)]
enum Repr {
    /// Reduced, denominator > 0.
    Small(i64, i64),
    Big(Box<BigRational>),
}

/// An exact rational number.
#[derive(Clone)]
pub struct Rat(Repr);

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl Rat {
    pub fn zero() -> Rat {
        Rat(Repr::Small(0, 1))
    }

    pub fn one() -> Rat {
        Rat(Repr::Small(1, 1))
    }

    pub fn from_int(n: i64) -> Rat {
        Rat(Repr::Small(n, 1))
    }

    /// `n / d`, reduced. Panics if `d == 0`.
    pub fn new(n: i64, d: i64) -> Rat {
        assert!(d != 0, "zero denominator");
        reduce_i128(i128::from(n), i128::from(d))
    }

    /// `2^e` for a signed exponent.
    pub fn pow2(e: i64) -> Rat {
        if (0..=62).contains(&e) {
            Rat(Repr::Small(1i64 << e, 1))
        } else if (-62..0).contains(&e) {
            Rat(Repr::Small(1, 1i64 << (-e)))
        } else if e > 0 {
            Rat::from_big(BigRational::from_integer(BigInt::one() << e as usize))
        } else {
            Rat::from_big(BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize))
        }
    }

    pub fn from_big(b: BigRational) -> Rat {
        demote(b)
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n == 0,
            Repr::Big(b) => b.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(b) => b.is_positive(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Floor as a big integer.
    pub fn floor_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(i128::from(*n).div_euclid(i128::from(*d))),
            Repr::Big(b) => b.floor().to_integer(),
        }
    }

    /// Floor as an i64; `None` when it does not fit.
    pub fn floor_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n, d) => Some(i128::from(*n).div_euclid(i128::from(*d)) as i64),
            Repr::Big(b) => b.floor().to_integer().to_i64(),
        }
    }

    /// The integer value, if this is an integer that fits an i64.
    pub fn as_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n, 1) => Some(*n),
            Repr::Small(..) => None,
            Repr::Big(b) if b.is_integer() => b.to_integer().to_i64(),
            Repr::Big(_) => None,
        }
    }

    /// Fractional part `self - floor(self)`, in `[0, 1)`.
    pub fn frac(&self) -> Rat {
        match &self.0 {
            Repr::Small(n, d) => {
                let r = i128::from(*n).rem_euclid(i128::from(*d));
                reduce_i128(r, i128::from(*d))
            }
            Repr::Big(b) => Rat::from_big((**b).clone() - b.floor()),
        }
    }

    /// Numerator and denominator as big integers (denominator > 0).
    pub fn into_parts(&self) -> (BigInt, BigInt) {
        match &self.0 {
            Repr::Small(n, d) => (BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (b.numer().clone(), b.denom().clone()),
        }
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if self >= other {
            self
        } else {
            other
        }
    }

    fn big_op(a: &Rat, b: &Rat, f: impl Fn(BigRational, BigRational) -> BigRational) -> Rat {
        demote(f(a.to_big(), b.to_big()))
    }
}

fn reduce_i128(mut n: i128, mut d: i128) -> Rat {
    debug_assert!(d != 0);
    if d < 0 {
        n = -n;
        d = -d;
    }
    let g = n.abs().gcd(&d);
    if g > 1 {
        n /= g;
        d /= g;
    }
    if let (Ok(sn), Ok(sd)) = (i64::try_from(n), i64::try_from(d)) {
        Rat(Repr::Small(sn, sd))
    } else {
        Rat(Repr::Big(Box::new(BigRational::new(
            i128_to_big(n),
            i128_to_big(d),
        ))))
    }
}

fn i128_to_big(v: i128) -> BigInt {
    BigInt::from(v)
}

fn demote(b: BigRational) -> Rat {
    let (n, d) = (b.numer(), b.denom());
    if let (Some(sn), Some(sd)) = (n.to_i64(), d.to_i64()) {
        Rat(Repr::Small(sn, sd))
    } else {
        Rat(Repr::Big(Box::new(b)))
    }
}

impl Add for &Rat {
    type Output = Rat;
    // Rational addition needs products and gcds; the lint does not know that.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: &Rat) -> Rat {
        match (&self.0, &rhs.0) {
            (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
                let (n1, d1, n2, d2) = (
                    i128::from(*n1),
                    i128::from(*d1),
                    i128::from(*n2),
                    i128::from(*d2),
                );
                match (n1.checked_mul(d2), n2.checked_mul(d1)) {
                    (Some(a), Some(b)) => match a.checked_add(b) {
                        Some(num) => reduce_i128(num, d1 * d2),
                        None => Rat::big_op(self, rhs, |a, b| a + b),
                    },
                    _ => Rat::big_op(self, rhs, |a, b| a + b),
                }
            }
            _ => Rat::big_op(self, rhs, |a, b| a + b),
        }
    }
}

impl Sub for &Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        self + &(-rhs)
    }
}

impl Mul for &Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        match (&self.0, &rhs.0) {
            (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
                // Cross-reduce first so products stay small.
                let g1 = i128::from(n1.abs()).gcd(&i128::from(*d2));
                let g2 = i128::from(n2.abs()).gcd(&i128::from(*d1));
                let n1 = i128::from(*n1) / g1;
                let d2 = i128::from(*d2) / g1;
                let n2 = i128::from(*n2) / g2;
                let d1 = i128::from(*d1) / g2;
                reduce_i128(n1 * n2, d1 * d2)
            }
            _ => Rat::big_op(self, rhs, |a, b| a * b),
        }
    }
}

impl Div for &Rat {
    type Output = Rat;
    fn div(self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        let inv = match &rhs.0 {
            Repr::Small(n, d) => {
                if *n < 0 {
                    Rat(Repr::Small(-d, -n))
                } else {
                    Rat(Repr::Small(*d, *n))
                }
            }
            Repr::Big(b) => {
                let r: &BigRational = b;
                Rat::from_big(BigRational::new(r.denom().clone(), r.numer().clone()))
            }
        };
        self * &inv
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match &self.0 {
            // i64::MIN negation would overflow the small tier.
            Repr::Small(n, d) if *n != i64::MIN => Rat(Repr::Small(-n, *d)),
            _ => Rat::from_big(-self.to_big()),
        }
    }
}

macro_rules! forward_value_ops {
    ($($trait:ident :: $m:ident),*) => {$(
        impl $trait for Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                $trait::$m(&self, &rhs)
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: &Rat) -> Rat {
                $trait::$m(&self, rhs)
            }
        }
    )*};
}
forward_value_ops!(Add::add, Sub::sub, Mul::mul, Div::div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -&self
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Rat {}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
                // Denominators are positive, so cross-multiplying keeps order.
                (i128::from(*n1) * i128::from(*d2)).cmp(&(i128::from(*n2) * i128::from(*d1)))
            }
            _ => {
                let (an, ad) = self.into_parts();
                let (bn, bd) = other.into_parts();
                (an * bd).cmp(&(bn * ad))
            }
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.into_parts();
        if d.is_one() {
            write!(f, "{n}")
        } else {
            write!(f, "{n}/{d}")
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Decimal rendering for dyadic rationals (`den == 2^k`): exact, finite.
/// Returns `None` when the denominator has other factors.
pub(crate) fn dyadic_decimal(r: &Rat) -> Option<String> {
    let (num, den) = r.into_parts();
    if den.is_one() {
        return Some(num.to_string());
    }
    let power_of_two = den.sign() == BigSign::Plus && (&den & &(&den - BigInt::one())).is_zero();
    if !power_of_two {
        return None;
    }
    let k = den.trailing_zeros().unwrap_or(0);
    // n / 2^k = n * 5^k / 10^k
    let mut scaled = num * BigInt::from(5).pow(k as u32);
    let neg = scaled.is_negative();
    if neg {
        scaled = -scaled;
    }
    let digits = scaled.to_string();
    let k = k as usize;
    let (int_part, frac_part) = if digits.len() > k {
        let split = digits.len() - k;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        ("0".to_string(), format!("{digits:0>k$}"))
    };
    let frac_part = frac_part.trim_end_matches('0');
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&int_part);
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(frac_part);
    }
    Some(out)
}
