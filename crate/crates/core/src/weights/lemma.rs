//! Factorization of a vector weight into scalar components and back.
//!
//! The decomposition produces the auxiliary weight `ŵ` built from the first
//! m-1 components and the weight `W = w^{r_m/p} ŵ^{-r_m/δ_{m+1}}`, and
//! certifies quantitative scalar-class bounds for all pieces. The
//! reconstruction inverts it via `w_m = W^{p_m/r_m} ŵ^{-p_m/δ_m}`; the
//! exponent on `ŵ` must be negative for consistency with the decomposition,
//! and the norm identities below pin that sign. A second, simpler
//! factorization routes through the product weight `w^{δ_{m+1}/p}` and all
//! m components.

use crate::exponents::{DerivedExponents, ExponentConfig, OrderRelation};
use crate::extreal::ExtReal;
use crate::grid::{lp_norm_mass, DyadicGrid, GridFunction};
use crate::rational::Rational;
use crate::rng::Rng;
use crate::tol;
use crate::verify::Check;
use crate::weights::{
    gen_weight, ml_constant, product_weight, scalar_constant, GenKind, ScalarClass, VectorWeight,
    Weight,
};
use crate::{Error, Result};

/// Decomposition of a vector weight into certified scalar pieces.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub w_hat: Weight,
    pub cap_w: Weight,
    /// The vector characteristic the bounds are measured against.
    pub characteristic: f64,
    pub checks: Vec<Check>,
}

fn require_order(cfg: &ExponentConfig) -> Result<DerivedExponents> {
    if cfg.order() == OrderRelation::None {
        return Err(Error::OrderViolation(format!(
            "r = {:?} is not below p = {:?}",
            cfg.r, cfg.p
        )));
    }
    cfg.derived()
}

/// `ŵ = (Π_{i<m} w_i^{1/p_i})^ρ`.
fn build_w_hat(weights: &[Weight], cfg: &ExponentConfig, rho: Rational) -> Weight {
    let m = cfg.m();
    let mut base = Weight::one(*weights[0].grid());
    for (wi, pi) in weights.iter().zip(cfg.p.iter()).take(m - 1) {
        base = base.mul(&wi.pow(pi.recip().to_f64()));
    }
    base.pow(rho.to_f64())
}

/// The scalar class for component i of the factorization:
/// exponent (1-r)/r · θ_i, degenerating to the esssup form when p_i = r_i.
fn component_class(d: &DerivedExponents, i: usize) -> ScalarClass {
    ScalarClass::Ap {
        p: d.delta_total() * d.theta[i],
    }
}

/// Splits `wv` into (ŵ, W) and certifies the three component bounds.
pub fn lemma_decompose(wv: &VectorWeight, grid: &DyadicGrid) -> Result<Decomposition> {
    let cfg = &wv.cfg;
    let m = cfg.m();
    let d = require_order(cfg)?;
    let ml = ml_constant(wv, grid)?
        .finite()
        .ok_or_else(|| Error::InfiniteConstant("vector characteristic diverges".into()))?;

    let w_hat = build_w_hat(&wv.weights, cfg, d.rho);
    let w = product_weight(wv);
    let r_m = cfg.r[m - 1];
    let p_m = cfg.p[m - 1];
    let e_w = (r_m * cfg.inv_p_total()).to_f64();
    let e_hat = -(r_m * d.delta[m].recip()).to_f64();
    let cap_w = w.pow(e_w).mul(&w_hat.pow(e_hat));

    let mut checks = Vec::new();

    // Representation consistency: the same W from the w_m-side formula.
    let alt = wv.weights[m - 1]
        .pow((r_m / p_m).to_f64())
        .mul(&w_hat.pow((r_m * d.delta[m - 1].recip()).to_f64()));
    checks.push(Check::weights_eq(
        "factorization.representation",
        "both closed forms of W agree cellwise",
        &cap_w,
        &alt,
        tol::REL_EQ,
    ));

    // Component bounds for i < m.
    for i in 0..m - 1 {
        let theta = d.theta[i];
        let piece = wv.weights[i].pow((theta / cfg.p[i]).to_f64());
        let c = scalar_constant(&piece, &component_class(&d, i), None, grid)?;
        checks.push(Check::leq(
            format!("factorization.component_bound_{}", i + 1),
            format!(
                "scalar constant of component {} against the characteristic",
                i + 1
            ),
            c.raw(),
            ml.powf(theta.to_f64()),
        ));
    }
    // The auxiliary weight bound.
    let q_hat = d.delta_total() * d.rho;
    let c_hat = scalar_constant(&w_hat, &ScalarClass::Ap { p: q_hat }, None, grid)?;
    checks.push(Check::leq(
        "factorization.aux_bound",
        "auxiliary weight constant against the characteristic",
        c_hat.raw(),
        ml.powf(d.rho.to_f64()),
    ));
    // The weighted bound for W over the base measure ŵ.
    let class_w = ScalarClass::Apr {
        p: p_m / r_m,
        r: d.delta[m].div_by(r_m),
    };
    let c_w = scalar_constant(&cap_w, &class_w, Some(&w_hat), grid)?;
    checks.push(Check::leq(
        "factorization.weighted_bound",
        "restricted-class constant of W over the auxiliary measure",
        c_w.raw(),
        ml.powf(d.delta[m].to_f64()),
    ));

    Ok(Decomposition {
        w_hat,
        cap_w,
        characteristic: ml,
        checks,
    })
}

trait RationalDiv {
    fn div_by(self, d: Rational) -> Rational;
}

impl RationalDiv for Rational {
    fn div_by(self, d: Rational) -> Rational {
        if self.is_infinite() {
            Rational::INFINITY
        } else {
            self / d
        }
    }
}

/// Rebuilds the last component from (components, ŵ, W) and certifies the
/// product bound on the vector characteristic.
#[allow(clippy::needless_range_loop)] // indexed jointly with the exponent data
pub fn lemma_reconstruct(
    components: &[Weight],
    w_hat: &Weight,
    cap_w: &Weight,
    cfg: &ExponentConfig,
    grid: &DyadicGrid,
) -> Result<(VectorWeight, Vec<Check>)> {
    let m = cfg.m();
    if components.len() != m - 1 {
        return Err(Error::DimensionMismatch(format!(
            "need m-1 = {} components, got {}",
            m - 1,
            components.len()
        )));
    }
    let d = require_order(cfg)?;
    let mut checks = Vec::new();

    // The given ŵ must match its defining product.
    let rebuilt = build_w_hat(components, cfg, d.rho);
    let consistency = Check::weights_eq(
        "reconstruction.consistency",
        "given auxiliary weight matches its defining product",
        w_hat,
        &rebuilt,
        tol::REL_EQ,
    );
    if !consistency.pass {
        return Err(Error::InvalidParameter(
            "auxiliary weight is inconsistent with the components".into(),
        ));
    }
    checks.push(consistency);

    let p_m = cfg.p[m - 1];
    let r_m = cfg.r[m - 1];
    // w_m = W^{p_m/r_m} ŵ^{-p_m/δ_m}; the exponent degenerates to zero at
    // the endpoint p_m = r_m.
    let e_hat = -(p_m * d.delta[m - 1].recip()).to_f64();
    let w_m = cap_w.pow((p_m / r_m).to_f64()).mul(&w_hat.pow(e_hat));

    let mut weights = components.to_vec();
    weights.push(w_m);
    let wv = VectorWeight::new(weights, cfg.clone())?;

    // Product bound: [w⃗] <= [W]^{1/δ_{m+1}} [ŵ]^{1/ρ} Π [w_i^{θ_i/p_i}]^{1/θ_i}.
    let ml = ml_constant(&wv, grid)?;
    let mut rhs = ExtReal::ONE;
    let class_w = ScalarClass::Apr {
        p: p_m / r_m,
        r: d.delta[m].div_by(r_m),
    };
    let c_w = scalar_constant(cap_w, &class_w, Some(w_hat), grid)?;
    rhs = rhs.mul(c_w.powf(d.delta[m].recip().to_f64()));
    let q_hat = d.delta_total() * d.rho;
    let c_hat = scalar_constant(w_hat, &ScalarClass::Ap { p: q_hat }, None, grid)?;
    rhs = rhs.mul(c_hat.powf(d.rho.recip().to_f64()));
    for i in 0..m - 1 {
        let piece = components[i].pow((d.theta[i] / cfg.p[i]).to_f64());
        let c = scalar_constant(&piece, &component_class(&d, i), None, grid)?;
        if c.is_infinite() {
            return Err(Error::InfiniteConstant(format!(
                "component {} has a divergent scalar constant",
                i + 1
            )));
        }
        rhs = rhs.mul(c.powf(d.theta[i].recip().to_f64()));
    }
    checks.push(Check::leq(
        "reconstruction.product_bound",
        "rebuilt vector characteristic against the component product",
        ml.raw(),
        rhs.raw(),
    ));
    Ok((wv, checks))
}

/// L^p norm of |f| against a weight density.
pub fn lp_norm_weight(f: &GridFunction, w: &Weight, p: f64) -> ExtReal {
    lp_norm_mass(f, &w.masses(), p)
}

/// Verifies the two norm identities tying the vector-weight norm to the
/// factorized weights. Both are exact algebraic identities for
/// cell-constant data:
///
/// `‖f‖_{L^p(w)}     = ‖(f ŵ^{-1/r_{m+1}'})^{r_m}‖_{L^{p/r_m}(W^{p/r_m} dŵ)}^{1/r_m}`
/// `‖f‖_{L^{p_m}(w_m)} = ‖(f ŵ^{-1/r_m})^{r_m}‖_{L^{p_m/r_m}(W^{p_m/r_m} dŵ)}^{1/r_m}`
pub fn norm_identity_check(
    f: &GridFunction,
    wv: &VectorWeight,
    dec: &Decomposition,
    grid: &DyadicGrid,
) -> Result<Vec<Check>> {
    let _ = grid;
    let cfg = &wv.cfg;
    let m = cfg.m();
    let d = require_order(cfg)?;
    let p = cfg.p_total().to_f64();
    let p_m = cfg.p[m - 1].to_f64();
    let r_m = cfg.r[m - 1].to_f64();
    let inv_r_last_conj = cfg.r[m].conjugate().recip().to_f64();

    let w = product_weight(wv);
    let lhs1 = lp_norm_weight(f, &w, p);
    // Inner integrand folded into a single exact weight:
    // f^p ŵ^{-p/r_{m+1}'} W^{p/r_m} ŵ.
    let u1 = dec
        .w_hat
        .pow(1.0 - p * inv_r_last_conj)
        .mul(&dec.cap_w.pow(p / r_m));
    let rhs1 = lp_norm_weight(f, &u1, p);

    let lhs2 = lp_norm_weight(f, &wv.weights[m - 1], p_m);
    let u2 = dec
        .w_hat
        .pow(1.0 - p_m / r_m)
        .mul(&dec.cap_w.pow(p_m / r_m));
    let rhs2 = lp_norm_weight(f, &u2, p_m);

    let _ = d;
    Ok(vec![
        Check::eq(
            "norm_identity.target_side",
            "vector-weight norm equals its factorized rewrite",
            lhs1.raw(),
            rhs1.raw(),
            tol::REL_EQ,
        ),
        Check::eq(
            "norm_identity.component_side",
            "last-component norm equals its factorized rewrite",
            lhs2.raw(),
            rhs2.raw(),
            tol::REL_EQ,
        ),
    ])
}

/// Direction selector for the second factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma2Direction {
    Decompose,
    Reconstruct,
}

/// The simpler factorization through the product weight: decompose certifies
/// `[w_i^{θ_i/p_i}] <= [w⃗]^{θ_i}` for all i <= m and
/// `[w^{δ_{m+1}/p}] <= [w⃗]^{δ_{m+1}}`; reconstruct certifies the converse
/// product bound. Requires every p_i > 1.
pub fn lemma2_check(
    wv: &VectorWeight,
    grid: &DyadicGrid,
    direction: Lemma2Direction,
) -> Result<Vec<Check>> {
    let cfg = &wv.cfg;
    let m = cfg.m();
    for pi in &cfg.p {
        if *pi <= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "this factorization needs p_i > 1, got {pi}"
            )));
        }
    }
    let d = require_order(cfg)?;
    let ml = ml_constant(wv, grid)?
        .finite()
        .ok_or_else(|| Error::InfiniteConstant("vector characteristic diverges".into()))?;
    let w = product_weight(wv);
    let e_prod = (d.delta[m] * cfg.inv_p_total()).to_f64();
    let prod_piece = w.pow(e_prod);
    let prod_class = ScalarClass::Ap {
        p: d.delta_total() * d.delta[m],
    };
    let mut checks = Vec::new();
    match direction {
        Lemma2Direction::Decompose => {
            for i in 0..m {
                let piece = wv.weights[i].pow((d.theta[i] / cfg.p[i]).to_f64());
                let c = scalar_constant(&piece, &component_class(&d, i), None, grid)?;
                checks.push(Check::leq(
                    format!("factorization2.component_bound_{}", i + 1),
                    format!(
                        "scalar constant of component {} against the characteristic",
                        i + 1
                    ),
                    c.raw(),
                    ml.powf(d.theta[i].to_f64()),
                ));
            }
            let c = scalar_constant(&prod_piece, &prod_class, None, grid)?;
            checks.push(Check::leq(
                "factorization2.product_bound",
                "product-weight constant against the characteristic",
                c.raw(),
                ml.powf(d.delta[m].to_f64()),
            ));
        }
        Lemma2Direction::Reconstruct => {
            let mut rhs = ExtReal::ONE;
            let c = scalar_constant(&prod_piece, &prod_class, None, grid)?;
            rhs = rhs.mul(c.powf(d.delta[m].recip().to_f64()));
            for i in 0..m {
                let piece = wv.weights[i].pow((d.theta[i] / cfg.p[i]).to_f64());
                let ci = scalar_constant(&piece, &component_class(&d, i), None, grid)?;
                rhs = rhs.mul(ci.powf(d.theta[i].recip().to_f64()));
            }
            checks.push(Check::leq(
                "factorization2.reconstruction_bound",
                "vector characteristic against the scalar product",
                ml,
                rhs.raw(),
            ));
        }
    }
    Ok(checks)
}

/// Constructive vector-weight generator: draws scaled maximal-function
/// pieces for the components and the weighted slot, then routes them
/// through the reconstruction so the output carries its certified bound.
pub fn constructive_vector_weight(
    seed: u64,
    cfg: &ExponentConfig,
    grid: &DyadicGrid,
) -> Result<(VectorWeight, Vec<Check>)> {
    let d = require_order(cfg)?;
    let m = cfg.m();
    let mut rng = Rng::new(seed);
    let a1_piece = |rng: &mut Rng| -> Result<Weight> {
        let mut vals = vec![0.0; grid.cell_count()];
        vals[rng.below(grid.cell_count())] = rng.range(0.5, 2.0);
        let f = GridFunction::new(*grid, vals).unwrap();
        gen_weight(
            GenKind::CoifmanRochberg {
                f: &f,
                eta: rng.range(0.3, 0.6),
            },
            grid,
        )
    };
    // Components enter through their θ_i/p_i powers, so undo that power.
    let mut components = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        let u = a1_piece(&mut rng)?;
        components.push(u.pow((cfg.p[i] / d.theta[i]).to_f64()));
    }
    let w_hat = build_w_hat(&components, cfg, d.rho);
    let cap_w = a1_piece(&mut rng)?;
    lemma_reconstruct(&components, &w_hat, &cap_w, cfg, grid)
}
