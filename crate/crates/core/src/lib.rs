//! Desk-scale numerical verification of multilinear Muckenhoupt weight theory
//! on dyadic grids.
//!
//! The crate computes characteristic constants of scalar and vector weight
//! classes, checks the factorization lemmas that decompose a vector weight
//! into scalar components, evaluates sparse operators and sparse forms with
//! explicit duality-chain constants, verifies commutator-style weight
//! perturbations driven by BMO functions, and carries out the exact rational
//! exponent bookkeeping behind one-component-at-a-time extrapolation.
//!
//! Everything is built on piecewise-constant functions over the unit cube at
//! a fixed dyadic depth, so integrals, averages and norms are exact cell sums
//! (up to floating-point roundoff) and inequalities can be asserted with tight
//! tolerances. Exponent arithmetic is exact rational throughout; strict
//! inequalities between exponents are never decided in floating point.

pub mod cli;
pub mod exponents;
pub mod extreal;
pub mod grid;
pub mod maximal;
pub mod rational;
pub mod rng;
pub mod sparse;
pub mod tol;
pub mod verify;
pub mod weights;

pub use extreal::ExtReal;
pub use rational::Rational;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Enumeration policy not available for the requested dimension.
    UnsupportedPolicy(String),
    /// Vector lengths or grid shapes do not match.
    DimensionMismatch(String),
    /// The exponent order relation required by an operation does not hold.
    OrderViolation(String),
    /// A scalar parameter is outside its admissible range.
    InvalidParameter(String),
    /// A constant that must be finite came out infinite.
    InfiniteConstant(String),
    /// Malformed textual input (weight specs, rationals, CSV, JSON).
    Parse(String),
    /// Underlying I/O failure.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedPolicy(s) => write!(f, "unsupported policy: {s}"),
            Error::DimensionMismatch(s) => write!(f, "dimension mismatch: {s}"),
            Error::OrderViolation(s) => write!(f, "exponent order violation: {s}"),
            Error::InvalidParameter(s) => write!(f, "invalid parameter: {s}"),
            Error::InfiniteConstant(s) => write!(f, "infinite constant: {s}"),
            Error::Parse(s) => write!(f, "parse error: {s}"),
            Error::Io(s) => write!(f, "io error: {s}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
