//! Exact dyadic values: `numerator × 2^exponent2` with an arbitrary-width numerator.
//!
//! Every posit and every binary32 value is dyadic, and so are sums and products of
//! dyadic values, so the reference arithmetic can carry results exactly until the
//! single final rounding.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueClass {
    Zero,
    NaR,
    Finite,
}

/// Canonical form: the numerator is odd for `Finite`, and both fields are zero
/// for `Zero` and `NaR`, so structural equality is value equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactValue {
    class: ValueClass,
    numerator: BigInt,
    exponent2: i64,
}

impl ExactValue {
    pub fn zero() -> Self {
        ExactValue { class: ValueClass::Zero, numerator: BigInt::zero(), exponent2: 0 }
    }

    pub fn nar() -> Self {
        ExactValue { class: ValueClass::NaR, numerator: BigInt::zero(), exponent2: 0 }
    }

    /// `numerator × 2^exponent2`, canonicalised.
    pub fn new(numerator: BigInt, exponent2: i64) -> Self {
        match numerator.trailing_zeros() {
            None => Self::zero(),
            Some(tz) => {
                ExactValue { class: ValueClass::Finite, numerator: numerator >> tz, exponent2: exponent2 + tz as i64 }
            }
        }
    }

    pub fn from_i64(numerator: i64, exponent2: i64) -> Self {
        Self::new(BigInt::from(numerator), exponent2)
    }

    pub fn class(&self) -> ValueClass {
        self.class
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent2(&self) -> i64 {
        self.exponent2
    }

    pub fn is_zero(&self) -> bool {
        self.class == ValueClass::Zero
    }

    pub fn is_nar(&self) -> bool {
        self.class == ValueClass::NaR
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.sign() == Sign::Minus
    }

    pub fn abs(&self) -> Self {
        ExactValue { numerator: self.numerator.abs(), ..self.clone() }
    }

    /// `floor(log2 |self|)` for finite values.
    pub fn floor_log2(&self) -> Option<i64> {
        (self.class == ValueClass::Finite).then(|| self.numerator.magnitude().bits() as i64 - 1 + self.exponent2)
    }

    /// Three-way comparison; `None` when either side is NaR.
    pub fn compare(&self, other: &Self) -> Option<Ordering> {
        if self.is_nar() || other.is_nar() {
            return None;
        }
        let diff = self - other;
        Some(match diff.numerator.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        })
    }

    /// Nearest binary64 (only exact when the value has ≤ 53 significant bits and
    /// lies in the normal range, which holds for every posit up to 32 bits).
    pub fn to_f64(&self) -> f64 {
        match self.class {
            ValueClass::Zero => 0.0,
            ValueClass::NaR => f64::NAN,
            ValueClass::Finite => {
                let mag = self.numerator.magnitude();
                let bits = mag.bits() as i64;
                // keep the top 62 bits; lower bits only matter past the 53rd
                let drop = (bits - 62).max(0);
                let top = (mag >> drop as usize).to_u64().unwrap_or(u64::MAX) as f64;
                let v = top * pow2(self.exponent2 + drop);
                if self.is_negative() {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// Exact decimal expansion (dyadic values always terminate).
    pub fn to_decimal_string(&self) -> String {
        use alloc::string::ToString;
        match self.class {
            ValueClass::Zero => return "0".into(),
            ValueClass::NaR => return "NaR".into(),
            ValueClass::Finite => {}
        }
        let sign = if self.is_negative() { "-" } else { "" };
        let mag: BigUint = self.numerator.magnitude().clone();
        if self.exponent2 >= 0 {
            let int = mag << self.exponent2 as usize;
            return alloc::format!("{sign}{int}");
        }
        // m / 2^d = m·5^d / 10^d
        let d = (-self.exponent2) as usize;
        let scaled = mag * BigUint::from(5u32).pow(d as u32);
        let mut digits = scaled.to_string();
        if digits.len() <= d {
            let pad = d + 1 - digits.len();
            digits.insert_str(0, &"0".repeat(pad));
        }
        let point = digits.len() - d;
        let (int, frac) = digits.split_at(point);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            alloc::format!("{sign}{int}")
        } else {
            alloc::format!("{sign}{int}.{frac}")
        }
    }
}

/// 2^e as binary64 for `e` in the normal range.
pub(crate) fn pow2(e: i64) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e < -1074 {
        0.0
    } else if e < -1022 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        f64::from_bits(((e + 1023) as u64) << 52)
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl Neg for &ExactValue {
    type Output = ExactValue;
    fn neg(self) -> ExactValue {
        ExactValue { numerator: -&self.numerator, ..self.clone() }
    }
}

impl Neg for ExactValue {
    type Output = ExactValue;
    fn neg(self) -> ExactValue {
        -&self
    }
}

impl Add for &ExactValue {
    type Output = ExactValue;
    fn add(self, rhs: &ExactValue) -> ExactValue {
        match (self.class, rhs.class) {
            (ValueClass::NaR, _) | (_, ValueClass::NaR) => ExactValue::nar(),
            (ValueClass::Zero, _) => rhs.clone(),
            (_, ValueClass::Zero) => self.clone(),
            _ => {
                let e = self.exponent2.min(rhs.exponent2);
                let a = &self.numerator << (self.exponent2 - e) as usize;
                let b = &rhs.numerator << (rhs.exponent2 - e) as usize;
                ExactValue::new(a + b, e)
            }
        }
    }
}

impl Sub for &ExactValue {
    type Output = ExactValue;
    fn sub(self, rhs: &ExactValue) -> ExactValue {
        self + &(-rhs)
    }
}

impl Mul for &ExactValue {
    type Output = ExactValue;
    fn mul(self, rhs: &ExactValue) -> ExactValue {
        match (self.class, rhs.class) {
            (ValueClass::NaR, _) | (_, ValueClass::NaR) => ExactValue::nar(),
            (ValueClass::Zero, _) | (_, ValueClass::Zero) => ExactValue::zero(),
            _ => ExactValue::new(&self.numerator * &rhs.numerator, self.exponent2 + rhs.exponent2),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ExactValue {
            type Output = ExactValue;
            fn $m(self, rhs: ExactValue) -> ExactValue {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// `num / den` kept unevaluated; compared against dyadic values by cross-multiplying.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactQuotient {
    pub num: ExactValue,
    pub den: ExactValue,
}

impl ExactQuotient {
    /// Compare `|num/den|` with a positive dyadic value.
    pub(crate) fn cmp_abs(&self, v: &ExactValue) -> Ordering {
        let lhs = self.num.abs();
        let rhs = v * &self.den.abs();
        lhs.compare(&rhs).expect("finite operands")
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative() != self.den.is_negative()
    }
}
