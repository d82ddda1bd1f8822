//! Exact rational arithmetic for exponent bookkeeping.
//!
//! Values are reduced `i128` fractions. A single distinguished value `+∞`
//! (numerator 1, denominator 0) represents conjugates of 1, e.g. `r' = ∞`
//! when `r = 1`. All strict-inequality decisions between exponents go through
//! this type; floating point is only used downstream for powering weights.

use crate::{Error, Result};
use serde::{Deserialize, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(try_from = "String")]
pub struct Rational {
    num: i128,
    den: i128, // > 0 for finite values, 0 exactly for +infinity
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const INFINITY: Rational = Rational { num: 1, den: 0 };

    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator; use Rational::INFINITY");
        let s = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Rational {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn int(n: i128) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn is_infinite(self) -> bool {
        self.den == 0
    }

    pub fn is_finite(self) -> bool {
        self.den != 0
    }

    pub fn numer(self) -> i128 {
        self.num
    }

    pub fn denom(self) -> i128 {
        self.den
    }

    pub fn zero() -> Self {
        Rational::int(0)
    }

    pub fn one() -> Self {
        Rational::int(1)
    }

    pub fn is_zero(self) -> bool {
        self.is_finite() && self.num == 0
    }

    pub fn is_positive(self) -> bool {
        self.is_infinite() || self.num > 0
    }

    pub fn is_negative(self) -> bool {
        self.is_finite() && self.num < 0
    }

    /// Reciprocal; 0 maps to +∞ and +∞ maps to 0.
    pub fn recip(self) -> Rational {
        if self.is_infinite() {
            return Rational::zero();
        }
        if self.num == 0 {
            return Rational::INFINITY;
        }
        Rational::new(self.den, self.num)
    }

    /// Hölder conjugate: 1/x + 1/x' = 1. Requires x >= 1; x = 1 gives +∞.
    pub fn conjugate(self) -> Rational {
        assert!(
            self.is_infinite() || self >= Rational::one(),
            "conjugate requires x >= 1, got {self}"
        );
        if self.is_infinite() {
            return Rational::one();
        }
        (Rational::one() - self.recip()).recip()
    }

    pub fn to_f64(self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.num as f64 / self.den as f64
        }
    }

    pub fn min(self, other: Rational) -> Rational {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Parses `"a/b"`, an integer, or a finite decimal (converted exactly,
    /// e.g. `"1.5"` -> 3/2). Anything else is rejected.
    pub fn parse(s: &str) -> Result<Rational> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty rational".into()));
        }
        if s == "inf" {
            return Ok(Rational::INFINITY);
        }
        if let Some((a, b)) = s.split_once('/') {
            let num: i128 = a
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
            let den: i128 = b
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
            if den == 0 {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            return Ok(Rational::new(num, den));
        }
        // Integer or exact decimal; no exponent notation.
        let (sign, digits) = match s.strip_prefix('-') {
            Some(rest) => (-1i128, rest),
            None => (1i128, s),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Parse(format!("not a rational: {s:?}")));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(Error::Parse(format!("not a rational: {s:?}")));
        }
        if frac_part.len() > 30 {
            return Err(Error::Parse(format!(
                "decimal {s:?} not exactly representable"
            )));
        }
        let mut num: i128 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| Error::Parse(format!("integer overflow in {s:?}")))?
        };
        let mut den: i128 = 1;
        for c in frac_part.chars() {
            num = num
                .checked_mul(10)
                .and_then(|n| n.checked_add((c as u8 - b'0') as i128))
                .ok_or_else(|| Error::Parse(format!("decimal {s:?} overflows")))?;
            den = den
                .checked_mul(10)
                .ok_or_else(|| Error::Parse(format!("decimal {s:?} overflows")))?;
        }
        Ok(Rational::new(sign * num, den))
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        if self.is_infinite() || rhs.is_infinite() {
            return Rational::INFINITY;
        }
        Rational::new(self.num * rhs.den + rhs.num * self.den, self.den * rhs.den)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_infinite(), "cannot subtract infinity");
        if self.is_infinite() {
            return Rational::INFINITY;
        }
        Rational::new(self.num * rhs.den - rhs.num * self.den, self.den * rhs.den)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        if self.is_infinite() || rhs.is_infinite() {
            assert!(
                self.is_positive() && rhs.is_positive(),
                "infinite product requires positive factors"
            );
            return Rational::INFINITY;
        }
        Rational::new(self.num * rhs.num, self.den * rhs.den)
    }
}

impl Div for Rational {
    type Output = Rational;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Rational) -> Rational {
        self * rhs.recip()
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        assert!(self.is_finite(), "cannot negate infinity");
        Rational {
            num: -self.num,
            den: self.den,
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => (self.num * other.den).cmp(&(other.num * self.den)),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl TryFrom<String> for Rational {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Rational::parse(&s)
    }
}
