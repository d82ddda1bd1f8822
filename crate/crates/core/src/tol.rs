//! Centralized numeric tolerances.
//!
//! Two tolerances cover the whole crate: identities that are exact algebra on
//! piecewise-constant data are asserted to `REL_EQ`, and inequalities proved
//! by the weight theory get the looser slack `REL_INEQ` to absorb accumulated
//! rounding on both sides.

/// Relative tolerance for equality assertions (exact algebraic identities).
pub const REL_EQ: f64 = 1e-10;

/// Relative slack for inequality assertions.
pub const REL_INEQ: f64 = 1e-9;

/// Relative closeness of `a` to `b`: |a-b| <= tol * max(1, |a|, |b|).
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * (1.0f64).max(a.abs()).max(b.abs())
}

/// Inequality with relative slack: lhs <= rhs * (1 + tol) + tol (absolute floor
/// for values near zero).
pub fn leq_slack(lhs: f64, rhs: f64, tol: f64) -> bool {
    if rhs.is_infinite() {
        return true;
    }
    if lhs.is_infinite() {
        return false;
    }
    lhs <= rhs + tol * (1.0f64).max(lhs.abs()).max(rhs.abs())
}
