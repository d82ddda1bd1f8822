//! Bounded mean oscillation in two gauges, reverse Hölder exponents, and
//! the exponential-perturbation chain for commutator weights.

use crate::grid::{comp_sum, DyadicGrid, GridFunction};
use crate::rational::Rational;
use crate::rng::Rng;
use crate::tol;
use crate::verify::Check;
use crate::weights::{ml_constant, product_weight, scalar_constant, MassTable, ScalarClass};
use crate::weights::{VectorWeight, Weight};
use crate::{Error, Result};

/// A real-valued cell function with its two oscillation norms: the plain
/// mean-oscillation supremum and the exponential Luxemburg variant.
#[derive(Clone, Debug)]
pub struct BmoFunction {
    pub b: GridFunction,
    pub bmo: f64,
    pub bmo_exp: f64,
}

/// Computes both oscillation norms over the grid's cube family. The
/// Luxemburg gauge per cube is found by bisection to 1e-8.
pub fn bmo_norms(b: &GridFunction, grid: &DyadicGrid) -> BmoFunction {
    let mut bmo: f64 = 0.0;
    let mut bmo_exp: f64 = 0.0;
    let vals = b.values();
    grid.for_each_cube(&mut |q| {
        let cells: Vec<usize> = q.cells(grid).collect();
        let n = cells.len() as f64;
        let mean = comp_sum(cells.iter().map(|&c| vals[c])) / n;
        let devs: Vec<f64> = cells.iter().map(|&c| (vals[c] - mean).abs()).collect();
        let mean_dev = comp_sum(devs.iter().copied()) / n;
        bmo = bmo.max(mean_dev);

        let max_dev = devs.iter().cloned().fold(0.0f64, f64::max);
        // The cube's gauge is at most max_dev/ln 2; skip cubes that cannot
        // raise the running supremum.
        if max_dev == 0.0 || max_dev / std::f64::consts::LN_2 <= bmo_exp {
            return true;
        }
        // avg(exp(|b - b_Q|/lambda) - 1) <= 1 certainly holds at
        // lambda = max_dev/ln 2 and is monotone in lambda.
        let feasible = |lambda: f64| -> bool {
            let s = comp_sum(devs.iter().map(|&d| (d / lambda).exp_m1())) / n;
            s <= 1.0 + 1e-12
        };
        let mut hi = max_dev / std::f64::consts::LN_2;
        let mut lo = bmo_exp;
        debug_assert!(feasible(hi));
        while hi - lo > 1e-8 * (1.0f64).max(hi) {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        bmo_exp = bmo_exp.max(hi);
        true
    });
    BmoFunction {
        b: b.clone(),
        bmo,
        bmo_exp,
    }
}

/// A random oscillation normalized to unit Luxemburg norm. Rescaling is
/// exactly linear, so two passes absorb the gauge bisection error even when
/// the raw norm is small.
pub fn normalized_random_bmo(grid: &DyadicGrid, rng: &mut Rng) -> BmoFunction {
    loop {
        let raw = crate::weights::random_oscillation(grid, rng);
        let norms = bmo_norms(&raw, grid);
        if norms.bmo_exp > 1e-6 {
            let mut current = raw.map(|v| v / norms.bmo_exp).unwrap();
            let mut out = bmo_norms(&current, grid);
            if (out.bmo_exp - 1.0).abs() > 1e-9 {
                current = current.map(|v| v / out.bmo_exp).unwrap();
                out = bmo_norms(&current, grid);
            }
            return out;
        }
    }
}

/// Largest exponent (up to a cap) at which the power-average of the weight
/// stays within a factor 2 of its plain average on every enumerated cube.
#[derive(Clone, Copy, Debug)]
pub struct ReverseHolderResult {
    pub eta: f64,
    pub eta_prime: f64,
}

pub const RH_CAP: f64 = 64.0;

pub fn reverse_holder_eta(v: &Weight, grid: &DyadicGrid) -> Result<ReverseHolderResult> {
    let base = MassTable::build(v);
    let feasible = |eta: f64| -> bool {
        let powered = MassTable::build(&v.pow(eta));
        let mut ok = true;
        grid.for_each_cube(&mut |q| {
            let avg = base.average(&q);
            let pow_avg = powered.average(&q).powf(1.0 / eta);
            match (pow_avg.finite(), avg.finite()) {
                (Some(l), Some(r)) => {
                    if l > 2.0 * r * (1.0 + tol::REL_INEQ) {
                        ok = false;
                    }
                }
                (None, Some(_)) => ok = false,
                _ => {} // divergent plain average dominates everything
            }
            ok
        });
        ok
    };
    if feasible(RH_CAP) {
        return Ok(ReverseHolderResult {
            eta: RH_CAP,
            eta_prime: RH_CAP / (RH_CAP - 1.0),
        });
    }
    let mut lo = 1.0;
    let mut hi = RH_CAP;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 1.0 {
        return Err(Error::InvalidParameter(
            "no reverse-Hölder exponent above one; degenerate weight".into(),
        ));
    }
    Ok(ReverseHolderResult {
        eta: lo,
        eta_prime: lo / (lo - 1.0),
    })
}

/// Verifies the exponential-weight bound `[e^{λb}]_{A_q} <= 4^{|λ|·norm}`
/// under the admissibility constraint `|λ|·norm <= min{1, q-1}`.
pub fn exp_weight_check(
    b: &BmoFunction,
    lambda: f64,
    q: Rational,
    grid: &DyadicGrid,
) -> Result<Vec<Check>> {
    if q <= Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "exponential-weight bound needs q > 1, got {q}"
        )));
    }
    let cap = (q - Rational::one()).to_f64().min(1.0);
    if lambda.abs() * b.bmo_exp > cap * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} out of admissible range (|λ|·norm <= {cap})"
        )));
    }
    let w = Weight::from_values(
        *grid,
        b.b.values().iter().map(|&v| (lambda * v).exp()).collect(),
    )?;
    let c = scalar_constant(&w, &ScalarClass::Ap { p: q }, None, grid)?;
    let bound = 4.0f64.powf(lambda.abs() * b.bmo_exp);
    Ok(vec![Check::leq(
        "exp_weight.class_bound",
        format!("exponential weight constant at q = {q}"),
        c.raw(),
        bound,
    )])
}

/// The admissible perturbation sizes for a vector weight: component i may
/// move by at most `(1/η') min{1/δ_i, s/(δ_{m+1} s_i)}`, where η comes from
/// the reverse Hölder exponents of the dual-power weights.
pub fn max_admissible_gamma(vv: &VectorWeight, grid: &DyadicGrid) -> Result<(Vec<f64>, f64)> {
    let cfg = &vv.cfg;
    let d = cfg.derived()?;
    let m = cfg.m();
    for (i, delta) in d.delta.iter().enumerate().take(m) {
        if delta.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "perturbation requires strict order in every slot; slot {} is at its endpoint",
                i + 1
            )));
        }
    }
    let s_total = cfg.p_total();
    let w = product_weight(vv);
    let mut eta = f64::INFINITY;
    let e_dual = (d.delta[m] * s_total.recip()).to_f64();
    eta = eta.min(reverse_holder_eta(&w.pow(e_dual), grid)?.eta);
    for i in 0..m {
        let e = -(d.delta[i] / cfg.p[i]).to_f64();
        eta = eta.min(reverse_holder_eta(&vv.weights[i].pow(e), grid)?.eta);
    }
    let eta_prime = eta / (eta - 1.0);
    let bounds = (0..m)
        .map(|i| {
            let a = d.delta[i].recip().to_f64();
            let b = (s_total / (d.delta[m] * cfg.p[i])).to_f64();
            a.min(b) / eta_prime
        })
        .collect();
    Ok((bounds, eta_prime))
}

/// Perturbs each component by `e^{-γ_i s_i b_i}` for unit-normalized
/// oscillations `b_i` and certifies that the characteristic grows by at
/// most `2^{(1-r)/r + 2 Σ|γ_i|}`.
pub fn commutator_perturb(
    vv: &VectorWeight,
    bs: &[BmoFunction],
    gamma: &[f64],
    grid: &DyadicGrid,
) -> Result<(VectorWeight, Vec<Check>)> {
    let cfg = &vv.cfg;
    let m = cfg.m();
    if bs.len() != m || gamma.len() != m {
        return Err(Error::DimensionMismatch(
            "need one oscillation and one size per component".into(),
        ));
    }
    for (i, b) in bs.iter().enumerate() {
        if (b.bmo_exp - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "oscillation {} is not unit-normalized (norm {})",
                i + 1,
                b.bmo_exp
            )));
        }
    }
    let (bounds, eta_prime) = max_admissible_gamma(vv, grid)?;
    let mut checks = Vec::new();
    for i in 0..m {
        let ok = gamma[i].abs() <= bounds[i] * (1.0 + 1e-9);
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "perturbation size {} exceeds the admissible {} at slot {}",
                gamma[i],
                bounds[i],
                i + 1
            )));
        }
        checks.push(Check::leq(
            format!("commutator.size_admissible_{}", i + 1),
            format!("perturbation size within the reverse-Hölder budget (η' = {eta_prime:.4})"),
            gamma[i].abs(),
            bounds[i],
        ));
    }

    let base = ml_constant(vv, grid)?
        .finite()
        .ok_or_else(|| Error::InfiniteConstant("unperturbed characteristic diverges".into()))?;
    let mut weights = Vec::with_capacity(m);
    for i in 0..m {
        let s_i = cfg.p[i].to_f64();
        let factor = Weight::from_values(
            *grid,
            bs[i]
                .b
                .values()
                .iter()
                .map(|&v| (-gamma[i] * s_i * v).exp())
                .collect(),
        )?;
        weights.push(vv.weights[i].mul(&factor));
    }
    let perturbed = VectorWeight::new(weights, cfg.clone())?;
    let after = ml_constant(&perturbed, grid)?;
    let d = cfg.derived()?;
    let exponent = d.delta_total().to_f64() + 2.0 * gamma.iter().map(|g| g.abs()).sum::<f64>();
    let bound = 2.0f64.powf(exponent) * base;
    checks.push(Check::leq(
        "commutator.perturbed_bound",
        "perturbed characteristic within the exponential budget",
        after.raw(),
        bound,
    ));
    Ok((perturbed, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ExponentConfig;
    use crate::weights::{mesh_grid, random_vector_weight};

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn constant_functions_have_zero_oscillation() {
        let g = mesh_grid(4);
        let b = GridFunction::constant(g, 3.5);
        let n = bmo_norms(&b, &g);
        assert_eq!(n.bmo, 0.0);
        assert_eq!(n.bmo_exp, 0.0);
    }

    #[test]
    fn half_indicator_oscillation() {
        // sup over straddling intervals of 2t(1-t) = 1/2, attained when the
        // split point halves the interval.
        let g = mesh_grid(6);
        let half: Vec<usize> = (0..32).collect();
        let b = GridFunction::indicator(g, &half);
        let n = bmo_norms(&b, &g);
        assert!(tol::close(n.bmo, 0.5, 1e-12), "got {}", n.bmo);
        assert!(n.bmo <= n.bmo_exp);
    }

    #[test]
    fn plain_norm_below_exponential_norm() {
        let g = mesh_grid(5);
        let mut rng = Rng::new(17);
        for _ in 0..25 {
            let b = crate::weights::random_oscillation(&g, &mut rng);
            let n = bmo_norms(&b, &g);
            assert!(n.bmo <= n.bmo_exp + 1e-12, "{} > {}", n.bmo, n.bmo_exp);
        }
    }

    #[test]
    fn reverse_holder_on_flat_and_singular_weights() {
        let g = mesh_grid(6);
        // Flat weight: every exponent works, so the cap is returned.
        let rh = reverse_holder_eta(&Weight::one(g), &g).unwrap();
        assert_eq!(rh.eta, RH_CAP);
        // Grid-sampled half-power singularity: the eta-moment needs
        // eta/2 < 1 asymptotically, so eta stays below 2 plus truncation.
        let vals: Vec<f64> = (0..g.cell_count())
            .map(|c| {
                let x0 = c as f64 / g.cell_count() as f64;
                let x1 = (c + 1) as f64 / g.cell_count() as f64;
                2.0 * (x1.sqrt() - x0.sqrt()) / (x1 - x0)
            })
            .collect();
        let w = Weight::from_values(g, vals).unwrap();
        let rh = reverse_holder_eta(&w, &g).unwrap();
        assert!(rh.eta > 1.0 && rh.eta < 3.0, "eta = {}", rh.eta);
        assert!(rh.eta_prime > 1.0);
    }

    #[test]
    fn reverse_holder_is_monotone_under_refinement() {
        let mut prev: Option<f64> = None;
        for depth in [6u32, 8, 10] {
            let g = mesh_grid(depth);
            let vals: Vec<f64> = (0..g.cell_count())
                .map(|c| {
                    let x0 = c as f64 / g.cell_count() as f64;
                    let x1 = (c + 1) as f64 / g.cell_count() as f64;
                    2.0 * (x1.sqrt() - x0.sqrt()) / (x1 - x0)
                })
                .collect();
            let w = Weight::from_values(g, vals).unwrap();
            let rh = reverse_holder_eta(&w, &g).unwrap();
            if let Some(p) = prev {
                assert!(
                    rh.eta <= p + 1e-3,
                    "eta grew under refinement: {p} -> {}",
                    rh.eta
                );
            }
            prev = Some(rh.eta);
        }
    }

    #[test]
    fn exponential_weight_bound_cases() {
        let g = mesh_grid(5);
        // Zero oscillation: the constant is 1 against a bound of 1.
        let zero = bmo_norms(&GridFunction::constant(g, 0.0), &g);
        let checks = exp_weight_check(&zero, 0.7, q(2, 1), &g).unwrap();
        assert!(checks.iter().all(|c| c.pass));
        assert!(tol::close(checks[0].lhs.0, 1.0, 1e-12));

        // Half indicator at q = 2, lambda = 1.
        let half: Vec<usize> = (0..16).collect();
        let b = bmo_norms(&GridFunction::indicator(g, &half), &g);
        assert!(b.bmo_exp <= 1.0);
        let checks = exp_weight_check(&b, 1.0, q(2, 1), &g).unwrap();
        assert!(checks.iter().all(|c| c.pass), "{checks:#?}");

        // Out-of-range lambda is rejected.
        assert!(exp_weight_check(&b, 4.0 / b.bmo_exp, q(2, 1), &g).is_err());
    }

    #[test]
    fn exponential_weight_randomized_sweep() {
        let g = mesh_grid(5);
        let mut rng = Rng::new(19);
        for _ in 0..20 {
            let b = bmo_norms(&crate::weights::random_oscillation(&g, &mut rng), &g);
            if b.bmo_exp == 0.0 {
                continue;
            }
            let qq = q(1 + rng.below(3) as i128 + 1, 1);
            let cap = (qq - Rational::one()).to_f64().min(1.0) / b.bmo_exp;
            let max_b = b.b.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for k in 1..=5 {
                let lambda = cap * k as f64 / 5.0 * if rng.f64() < 0.5 { -1.0 } else { 1.0 };
                if lambda.abs() * max_b > 250.0 {
                    continue; // exp overflows f64 long before the bound fails
                }
                let checks = exp_weight_check(&b, lambda, qq, &g).unwrap();
                assert!(checks.iter().all(|c| c.pass), "{checks:#?}");
            }
        }
    }

    #[test]
    fn zero_perturbation_is_certified() {
        let g = mesh_grid(5);
        let mut rng = Rng::new(23);
        let cfg =
            ExponentConfig::new(vec![q(3, 1), q(3, 1)], vec![q(1, 1), q(1, 1), q(1, 1)]).unwrap();
        let vv = random_vector_weight(&cfg, &g, &mut rng);
        let b1 = normalized_random_bmo(&g, &mut rng);
        let b2 = normalized_random_bmo(&g, &mut rng);
        let (out, checks) = commutator_perturb(&vv, &[b1, b2], &[0.0, 0.0], &g).unwrap();
        assert!(checks.iter().all(|c| c.pass), "{checks:#?}");
        assert!(out.weights[0].approx_eq(&vv.weights[0], 1e-12));
    }

    #[test]
    fn maximal_perturbation_certified_both_signs() {
        let g = mesh_grid(5);
        let mut rng = Rng::new(29);
        let cfg =
            ExponentConfig::new(vec![q(3, 1), q(3, 1)], vec![q(1, 1), q(1, 1), q(1, 1)]).unwrap();
        for _ in 0..6 {
            let vv = random_vector_weight(&cfg, &g, &mut rng);
            let (bounds, _) = max_admissible_gamma(&vv, &g).unwrap();
            let b1 = normalized_random_bmo(&g, &mut rng);
            let b2 = normalized_random_bmo(&g, &mut rng);
            let (_, checks) =
                commutator_perturb(&vv, &[b1.clone(), b2.clone()], &bounds, &g).unwrap();
            assert!(checks.iter().all(|c| c.pass), "{checks:#?}");
            let flipped: Vec<f64> = bounds.iter().map(|g| -g).collect();
            let (_, checks) = commutator_perturb(&vv, &[b1, b2], &flipped, &g).unwrap();
            assert!(checks.iter().all(|c| c.pass), "{checks:#?}");
        }
    }

    #[test]
    fn perturbation_rejects_oversized_moves() {
        let g = mesh_grid(4);
        let mut rng = Rng::new(31);
        let cfg =
            ExponentConfig::new(vec![q(3, 1), q(3, 1)], vec![q(1, 1), q(1, 1), q(1, 1)]).unwrap();
        let vv = random_vector_weight(&cfg, &g, &mut rng);
        let (bounds, _) = max_admissible_gamma(&vv, &g).unwrap();
        let b1 = normalized_random_bmo(&g, &mut rng);
        let b2 = normalized_random_bmo(&g, &mut rng);
        let too_big = [bounds[0] * 1.5, bounds[1]];
        assert!(commutator_perturb(&vv, &[b1.clone(), b2.clone()], &too_big, &g).is_err());
        // Non-normalized oscillations are rejected as well.
        let raw = bmo_norms(&crate::weights::random_oscillation(&g, &mut rng), &g);
        if (raw.bmo_exp - 1.0).abs() > 1e-6 {
            assert!(commutator_perturb(&vv, &[raw, b2], &[0.0, 0.0], &g).is_err());
        }
    }
}
