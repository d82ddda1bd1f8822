//! Exact-rational exponent bookkeeping: the componentwise order between
//! exponent vectors, the derived quantities driving the weight-class
//! factorization, admissibility of triples for restricted-range sparse
//! forms, power-weight membership intervals, one-component off-diagonal
//! parameters, and certified one-coordinate-at-a-time extrapolation paths.

use crate::rational::Rational;
use crate::{Error, Result};
use serde::Serialize;

/// Outcome of comparing `r` (length m+1) against `p` (length m).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrderRelation {
    /// r_i < p_i for i <= m and r_{m+1}' > p.
    Strict,
    /// r_i <= p_i for i <= m and r_{m+1}' > p.
    Weak,
    /// The order fails.
    None,
}

/// Exponent data: `m >= 2`, `p` of length m with entries >= 1, `r` of length
/// m+1 with entries >= 1, all finite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentConfig {
    pub p: Vec<Rational>,
    pub r: Vec<Rational>,
}

impl ExponentConfig {
    pub fn new(p: Vec<Rational>, r: Vec<Rational>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need m >= 2 exponents, got {}",
                p.len()
            )));
        }
        if r.len() != p.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "r must have length m+1 = {}, got {}",
                p.len() + 1,
                r.len()
            )));
        }
        for x in p.iter().chain(r.iter()) {
            if x.is_infinite() || *x < Rational::one() {
                return Err(Error::InvalidParameter(format!(
                    "exponents must be finite and >= 1, got {x}"
                )));
            }
        }
        let cfg = ExponentConfig { p, r };
        if cfg.order() != OrderRelation::None {
            // The order forces sum of reciprocals of r to exceed 1.
            debug_assert!(cfg.inv_rbar() > Rational::one());
        }
        Ok(cfg)
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    /// 1/p = sum of 1/p_i.
    pub fn inv_p_total(&self) -> Rational {
        self.p
            .iter()
            .fold(Rational::zero(), |acc, x| acc + x.recip())
    }

    pub fn p_total(&self) -> Rational {
        self.inv_p_total().recip()
    }

    /// 1/r = sum over all m+1 entries of 1/r_i.
    pub fn inv_rbar(&self) -> Rational {
        self.r
            .iter()
            .fold(Rational::zero(), |acc, x| acc + x.recip())
    }

    pub fn order(&self) -> OrderRelation {
        check_order(&self.r, &self.p)
    }

    pub fn derived(&self) -> Result<DerivedExponents> {
        derived(self)
    }
}

/// Derived quantities for an admissible pair of exponent vectors. All stored
/// as exact rationals; entries of `delta` may be +∞ at endpoint components.
#[derive(Clone, Debug, Serialize)]
pub struct DerivedExponents {
    /// The harmonic aggregate of r (strictly below 1 when the order holds).
    pub rbar: Rational,
    /// Signed reciprocal of the dual slot exponent: 1/p_{m+1} = 1 - 1/p,
    /// which may be zero or negative.
    pub inv_pm1: Rational,
    /// delta_i with 1/delta_i = 1/r_i - 1/p_i, length m+1.
    pub delta: Vec<Rational>,
    /// theta_i with 1/theta_i = (1-rbar)/rbar - 1/delta_i, length m.
    pub theta: Vec<Rational>,
    /// rho with 1/rho = 1/delta_m + 1/delta_{m+1}.
    pub rho: Rational,
}

impl DerivedExponents {
    /// (1-rbar)/rbar = 1/rbar - 1, the total of the delta reciprocals.
    pub fn delta_total(&self) -> Rational {
        self.rbar.recip() - Rational::one()
    }
}

/// Componentwise order: Weak iff r_i <= p_i for i <= m and r_{m+1}' > p
/// (with r' = ∞ when r = 1); Strict additionally requires r_i < p_i for all
/// i <= m.
pub fn check_order(r: &[Rational], p: &[Rational]) -> OrderRelation {
    assert_eq!(r.len(), p.len() + 1, "r must be one longer than p");
    let mut strict = true;
    for (ri, pi) in r.iter().zip(p.iter()) {
        if ri > pi {
            return OrderRelation::None;
        }
        if ri == pi {
            strict = false;
        }
    }
    let inv_p: Rational = p.iter().fold(Rational::zero(), |a, x| a + x.recip());
    let r_last_conj = r[p.len()].conjugate();
    // r_{m+1}' > p  <=>  1/r_{m+1}' < 1/p.
    if r_last_conj.recip() >= inv_p {
        return OrderRelation::None;
    }
    if strict {
        OrderRelation::Strict
    } else {
        OrderRelation::Weak
    }
}

/// Computes every derived exponent for a config whose order holds.
pub fn derived(cfg: &ExponentConfig) -> Result<DerivedExponents> {
    if cfg.order() == OrderRelation::None {
        return Err(Error::OrderViolation(format!(
            "r = {:?} is not below p = {:?}",
            cfg.r, cfg.p
        )));
    }
    let m = cfg.m();
    let rbar = cfg.inv_rbar().recip();
    let inv_pm1 = Rational::one() - cfg.inv_p_total();
    let mut delta = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let inv_pi = if i < m { cfg.p[i].recip() } else { inv_pm1 };
        delta.push((cfg.r[i].recip() - inv_pi).recip());
    }
    let total = rbar.recip() - Rational::one();
    let theta: Vec<Rational> = (0..m).map(|i| (total - delta[i].recip()).recip()).collect();
    let rho = (delta[m - 1].recip() + delta[m].recip()).recip();
    let out = DerivedExponents {
        rbar,
        inv_pm1,
        delta,
        theta,
        rho,
    };
    // Identities that hold by construction, kept as debug guards.
    debug_assert_eq!(
        out.delta
            .iter()
            .fold(Rational::zero(), |a, d| a + d.recip()),
        out.delta_total()
    );
    debug_assert!(out.theta.iter().all(|t| t.is_positive()));
    debug_assert!(out.rho.is_positive());
    Ok(out)
}

/// Natural exponents attached to `r`: p_i = r_i / rbar for i <= m together
/// with the aggregate 1/p = 1 - rbar/r_{m+1}. The resulting order is Strict.
pub fn natural_exponents(r: &[Rational]) -> Result<(Vec<Rational>, Rational)> {
    let inv_rbar: Rational = r.iter().fold(Rational::zero(), |a, x| a + x.recip());
    if inv_rbar <= Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "reciprocals of r must sum above 1, got {inv_rbar}"
        )));
    }
    let rbar = inv_rbar.recip();
    let m = r.len() - 1;
    let p: Vec<Rational> = r[..m].iter().map(|ri| *ri / rbar).collect();
    let inv_p = Rational::one() - rbar / r[m];
    debug_assert_eq!(p.iter().fold(Rational::zero(), |a, x| a + x.recip()), inv_p);
    debug_assert_eq!(check_order(r, &p), OrderRelation::Strict);
    Ok((p, inv_p.recip()))
}

/// Admissibility of a triple for the restricted-range sparse forms:
/// sum of 1/min{r_i, 2} < 2, with every r_i strictly above 1.
pub fn bht_admissible(r: &[Rational; 3]) -> Result<bool> {
    let two = Rational::int(2);
    for ri in r {
        if *ri <= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "admissibility requires r_i > 1, got {ri}"
            )));
        }
    }
    let s = r
        .iter()
        .fold(Rational::zero(), |a, ri| a + (*ri).min(two).recip());
    Ok(s < two)
}

/// Closed form of the admissibility condition: sum of 1/min{r_i, 2} <= 2.
/// The triples produced by [`gamma_to_r`] land exactly on this boundary.
pub fn bht_boundary_admissible(r: &[Rational; 3]) -> Result<bool> {
    let two = Rational::int(2);
    for ri in r {
        if *ri <= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "admissibility requires r_i > 1, got {ri}"
            )));
        }
    }
    let s = r
        .iter()
        .fold(Rational::zero(), |a, ri| a + (*ri).min(two).recip());
    Ok(s <= two)
}

/// Converts a simplex point (gamma_1, gamma_2, gamma_3) with 0 <= gamma_i < 1
/// and sum 1 into the triple r_i = 2/(1+gamma_i). Exact arithmetic places the
/// result on the closure of the admissible region: the admissibility sum
/// equals 2 exactly for every simplex point, so strict admissibility is
/// recovered only by perturbing gamma inward.
pub fn gamma_to_r(gamma: &[Rational; 3]) -> Result<[Rational; 3]> {
    let one = Rational::one();
    let sum = gamma[0] + gamma[1] + gamma[2];
    if sum != one || gamma.iter().any(|g| g.is_negative() || *g >= one) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0,1)^3 with sum 1, got {gamma:?}"
        )));
    }
    let two = Rational::int(2);
    let r = [
        two / (one + gamma[0]),
        two / (one + gamma[1]),
        two / (one + gamma[2]),
    ];
    debug_assert_eq!(bht_boundary_admissible(&r), Ok(true));
    Ok(r)
}

/// Open interval of powers `a` for which the pair (|x|^{-a}, |x|^{-a})
/// belongs to the two-weight class at exponents `q` over `r`:
/// 1 - min{q_1/r_1, q_2/r_2} < a < 1 - q / r_3'.
///
/// Requires r_i < q_i componentwise; the dual slot may sit on its boundary
/// (r_3' = q), where the upper bound degenerates to 1 - 1 = 0.
pub fn power_weight_interval(q: &[Rational; 2], r: &[Rational; 3]) -> Result<(Rational, Rational)> {
    if r[0] >= q[0] || r[1] >= q[1] {
        return Err(Error::OrderViolation(format!(
            "power-weight interval needs r_i < q_i componentwise, got {:?} vs {:?}",
            r, q
        )));
    }
    let q_total_inv = q[0].recip() + q[1].recip();
    if r[2].conjugate().recip() > q_total_inv {
        return Err(Error::OrderViolation(format!(
            "power-weight interval needs r_3' >= q, got {:?} vs {:?}",
            r, q
        )));
    }
    let one = Rational::one();
    let lower = one - (q[0] / r[0]).min(q[1] / r[1]);
    let q_total = (q[0].recip() + q[1].recip()).recip();
    // 1 - q / r_3'; the conjugate may be ∞, in which case q/r_3' = 0.
    let upper = one - q_total * r[2].conjugate().recip();
    Ok((lower, upper))
}

/// Two-sided bound on `a` for which the bilinear power-weight estimate holds
/// at exponents `p` (scalar case) or `(p, s)` (square-function case); the
/// interval may be empty, flagged by `lower >= upper`.
#[derive(Clone, Debug, Serialize)]
pub struct PowerInterval {
    pub lower: Rational,
    pub upper: Rational,
    pub empty: bool,
}

pub fn bh_power_interval(p: &[Rational; 2], s: Option<&[Rational; 2]>) -> Result<PowerInterval> {
    let one = Rational::one();
    let two = Rational::int(2);
    let three_halves = Rational::new(3, 2);
    let check_pair = |v: &[Rational; 2], name: &str| -> Result<Rational> {
        for x in v {
            if *x <= one || x.is_infinite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} entries must lie in (1, inf), got {x}"
                )));
            }
        }
        let inv = v[0].recip() + v[1].recip();
        if inv >= three_halves {
            return Err(Error::InvalidParameter(format!(
                "{name} must satisfy 1/{name} < 3/2, got {inv}"
            )));
        }
        Ok(inv)
    };
    let inv_p = check_pair(p, "p")?;
    let p_total = inv_p.recip();
    let half = Rational::new(1, 2);
    let zero = Rational::zero();
    let (lower, upper) = match s {
        None => {
            let lo = one - (one.max(p[0] / two)).min(one.max(p[1] / two));
            let hi =
                one - p_total * ((zero.max(p[0].recip() - half)) + (zero.max(p[1].recip() - half)));
            (lo, hi)
        }
        Some(s) => {
            check_pair(s, "s")?;
            let term = |i: usize| one.max(p[i] / two).max(p[i] / s[i]);
            let lo = one - term(0).min(term(1));
            let slack = |i: usize| zero.max(p[i].recip() - half).max(s[i].recip() - half);
            let hi = one - p_total * (slack(0) + slack(1));
            (lo, hi)
        }
    };
    Ok(PowerInterval {
        lower,
        upper,
        empty: lower >= upper,
    })
}

/// One-component off-diagonal parameters: moving the last coordinate of `p`
/// to `q_m` produces target exponents (s, s_m, tau) linked by
/// 1/s - 1/p = 1/tau - 1/delta_{m+1} = 1/s_m - 1/p_m.
#[derive(Clone, Debug, Serialize)]
pub struct StepParameters {
    pub s: Rational,
    pub s_m: Rational,
    pub tau: Rational,
}

pub fn step1_parameters(p: &[Rational], r: &[Rational], q_m: Rational) -> Result<StepParameters> {
    let cfg = ExponentConfig::new(p.to_vec(), r.to_vec())?;
    if cfg.order() == OrderRelation::None {
        return Err(Error::OrderViolation("step requires r below p".into()));
    }
    let m = cfg.m();
    if q_m <= r[m - 1] {
        return Err(Error::InvalidParameter(format!(
            "moved exponent must exceed r_m, got q_m = {q_m} <= {}",
            r[m - 1]
        )));
    }
    let d = cfg.derived()?;
    let shift = q_m.recip() - p[m - 1].recip();
    let inv_s = cfg.inv_p_total() + shift;
    let inv_tau = d.delta[m].recip() + shift;
    let out = StepParameters {
        s: inv_s.recip(),
        s_m: q_m,
        tau: inv_tau.recip(),
    };
    // tau must reproduce the dual-slot delta of the moved configuration.
    let mut q_vec = p.to_vec();
    q_vec[m - 1] = q_m;
    let moved = ExponentConfig::new(q_vec, r.to_vec())?;
    let inv_q = moved.inv_p_total();
    let delta_dual_moved = (r[m].recip() - (Rational::one() - inv_q)).recip();
    debug_assert_eq!(out.tau, delta_dual_moved);
    Ok(out)
}

/// One certified constraint attached to a path step.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub constraint: String,
    pub satisfied: bool,
}

/// A single one-coordinate move in an extrapolation path.
#[derive(Clone, Debug, Serialize)]
pub struct PathStep {
    pub from: Vec<Rational>,
    pub to: Vec<Rational>,
    pub changed_index: usize,
    pub certificates: Vec<Certificate>,
}

/// Builds the one-coordinate-at-a-time path from `p` to `q` over `r`,
/// certifying at every step that the intermediate vector stays admissible.
///
/// Coordinates are processed with the decreasing ones (p_i > q_i) first,
/// preserving relative order within the two groups; trivial moves
/// (p_i = q_i) are skipped.
pub fn extrapolation_path(p: &[Rational], q: &[Rational], r: &[Rational]) -> Result<Vec<PathStep>> {
    if p.len() != q.len() || r.len() != p.len() + 1 {
        return Err(Error::DimensionMismatch(
            "p and q must share length m; r must have length m+1".into(),
        ));
    }
    let start = ExponentConfig::new(p.to_vec(), r.to_vec())?;
    if start.order() == OrderRelation::None {
        return Err(Error::OrderViolation(
            "path requires the order to hold at the starting exponents".into(),
        ));
    }
    let m = p.len();
    // Target admissibility with the endpoint relaxation: r_j <= q_j always,
    // and strictness r_j < q_j is demanded exactly where r_j < p_j.
    for j in 0..m {
        if q[j] < r[j] {
            return Err(Error::OrderViolation(format!(
                "target coordinate {j} violates r_{} <= q_{}: {} > {}",
                j + 1,
                j + 1,
                r[j],
                q[j]
            )));
        }
        if r[j] < p[j] && q[j] <= r[j] {
            return Err(Error::OrderViolation(format!(
                "target coordinate {j} needs r < q since r < p there: r = {}, q = {}",
                r[j], q[j]
            )));
        }
    }
    let inv_q: Rational = q.iter().fold(Rational::zero(), |a, x| a + x.recip());
    let inv_r_last_conj = r[m].conjugate().recip();
    if inv_q <= inv_r_last_conj {
        return Err(Error::OrderViolation(format!(
            "target violates the dual-slot constraint: 1/q = {inv_q} <= {inv_r_last_conj}"
        )));
    }

    // Decreasing coordinates first, each group in original order.
    let mut order: Vec<usize> = (0..m).filter(|&i| p[i] > q[i]).collect();
    order.extend((0..m).filter(|&i| p[i] <= q[i]));

    let mut current = p.to_vec();
    let mut steps = Vec::new();
    for &i in &order {
        if current[i] == q[i] {
            continue; // trivial move
        }
        let mut next = current.clone();
        next[i] = q[i];
        let mut certs = Vec::new();
        let mut all_ok = true;
        for j in 0..m {
            let ok = r[j] <= next[j];
            all_ok &= ok;
            certs.push(Certificate {
                constraint: format!("r_{} <= s_{} ({} <= {})", j + 1, j + 1, r[j], next[j]),
                satisfied: ok,
            });
        }
        let inv_s: Rational = next.iter().fold(Rational::zero(), |a, x| a + x.recip());
        let ok_sum = inv_s > inv_r_last_conj;
        all_ok &= ok_sum;
        certs.push(Certificate {
            constraint: format!("sum 1/s_j > 1/r_{{m+1}}' ({inv_s} > {inv_r_last_conj})"),
            satisfied: ok_sum,
        });
        let ok_move = r[i] < next[i];
        all_ok &= ok_move;
        certs.push(Certificate {
            constraint: format!(
                "moved coordinate stays strict: r_{} < s_{} ({} < {})",
                i + 1,
                i + 1,
                r[i],
                next[i]
            ),
            satisfied: ok_move,
        });
        if !all_ok {
            return Err(Error::OrderViolation(format!(
                "step at coordinate {} failed certification: {:?}",
                i + 1,
                certs
                    .iter()
                    .filter(|c| !c.satisfied)
                    .map(|c| c.constraint.clone())
                    .collect::<Vec<_>>()
            )));
        }
        steps.push(PathStep {
            from: current.clone(),
            to: next.clone(),
            changed_index: i,
            certificates: certs,
        });
        current = next;
    }
    debug_assert_eq!(current, q);
    Ok(steps)
}
