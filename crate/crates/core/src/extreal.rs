//! Nonnegative extended reals: finite values plus an absorbing `+∞`.
//!
//! Divergent averages and characteristic constants are first-class values
//! here, not errors. The one convention that departs from IEEE arithmetic is
//! `0 · ∞ = 0`, matching the measure-theoretic reading of integrating the
//! zero function against an infinite mass.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtReal(f64);

#[allow(clippy::should_implement_trait)] // non-IEEE conventions, named on purpose
impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const ONE: ExtReal = ExtReal(1.0);

    /// Wraps a nonnegative value. Panics on NaN or negative input.
    pub fn new(v: f64) -> Self {
        assert!(!v.is_nan() && v >= 0.0, "ExtReal requires 0 <= v, got {v}");
        ExtReal(v)
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Finite payload, or `None` for +∞.
    pub fn finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// Raw value; +∞ maps to `f64::INFINITY`.
    pub fn raw(self) -> f64 {
        self.0
    }

    pub fn mul(self, other: ExtReal) -> ExtReal {
        // 0 * inf = 0 by convention.
        if self.0 == 0.0 || other.0 == 0.0 {
            return ExtReal::ZERO;
        }
        ExtReal(self.0 * other.0)
    }

    pub fn add(self, other: ExtReal) -> ExtReal {
        ExtReal(self.0 + other.0)
    }

    pub fn div(self, other: ExtReal) -> ExtReal {
        if self.is_infinite() {
            // inf / inf has no useful value in our computations; treat a
            // divergent numerator as a divergent quotient.
            return ExtReal::INFINITY;
        }
        if other.is_infinite() {
            return ExtReal::ZERO;
        }
        assert!(other.0 > 0.0, "division by zero ExtReal");
        ExtReal(self.0 / other.0)
    }

    /// Power with the conventions ∞^e = ∞ (e>0), ∞^0 = 1, ∞^e = 0 (e<0).
    pub fn powf(self, e: f64) -> ExtReal {
        if e == 0.0 {
            return ExtReal::ONE;
        }
        if self.is_infinite() {
            return if e > 0.0 {
                ExtReal::INFINITY
            } else {
                ExtReal::ZERO
            };
        }
        if self.0 == 0.0 {
            return if e > 0.0 {
                ExtReal::ZERO
            } else {
                ExtReal::INFINITY
            };
        }
        ExtReal(self.0.powf(e))
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        ExtReal(self.0.max(other.0))
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::new(v)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}
