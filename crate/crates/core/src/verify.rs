//! Verification orchestration: structured check records, named suites,
//! refinement-based divergence detection, and the scalar aggregation
//! inequalities behind square-function estimates.

use crate::exponents::{self, ExponentConfig, OrderRelation};
use crate::grid::{DyadicGrid, GridFunction, Policy};
use crate::maximal;
use crate::rational::Rational;
use crate::rng::Rng;
use crate::sparse;
use crate::tol;
use crate::weights::bmo;
use crate::weights::lemma::{self, Lemma2Direction};
use crate::weights::{
    self, ml_constant, random_vector_weight, scalar_constant, ScalarClass, VectorWeight, Weight,
    WeightSpec,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A real number that serializes infinities as the string "inf" so reports
/// survive a JSON round trip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JsonReal(pub f64);

impl Serialize for JsonReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for JsonReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(JsonReal(v)),
            Raw::Str(s) => match s.as_str() {
                "inf" => Ok(JsonReal(f64::INFINITY)),
                "-inf" => Ok(JsonReal(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!("bad real {other:?}"))),
            },
        }
    }
}

/// One verified statement: an inequality or identity with both sides, the
/// relative margin by which it holds (negative margins fail), and a stable
/// anchor naming the fact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub anchor: String,
    pub description: String,
    pub lhs: JsonReal,
    pub rhs: JsonReal,
    pub margin: JsonReal,
    pub pass: bool,
}

impl Check {
    /// lhs <= rhs up to the inequality slack.
    pub fn leq(
        anchor: impl Into<String>,
        description: impl Into<String>,
        lhs: f64,
        rhs: f64,
    ) -> Check {
        let scale = (1.0f64)
            .max(lhs.abs())
            .max(if rhs.is_finite() { rhs.abs() } else { 0.0 });
        let margin = if rhs.is_infinite() {
            f64::INFINITY
        } else {
            (rhs - lhs) / scale
        };
        Check {
            anchor: anchor.into(),
            description: description.into(),
            lhs: JsonReal(lhs),
            rhs: JsonReal(rhs),
            margin: JsonReal(margin),
            pass: tol::leq_slack(lhs, rhs, tol::REL_INEQ),
        }
    }

    /// lhs == rhs to the given relative tolerance.
    pub fn eq(
        anchor: impl Into<String>,
        description: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Check {
        let pass = tol::close(lhs, rhs, tolerance);
        let scale = (1.0f64)
            .max(if lhs.is_finite() { lhs.abs() } else { 0.0 })
            .max(if rhs.is_finite() { rhs.abs() } else { 0.0 });
        let margin = if lhs.is_infinite() && rhs.is_infinite() {
            0.0
        } else if lhs.is_infinite() || rhs.is_infinite() {
            f64::NEG_INFINITY
        } else {
            -((lhs - rhs).abs() / scale)
        };
        Check {
            anchor: anchor.into(),
            description: description.into(),
            lhs: JsonReal(lhs),
            rhs: JsonReal(rhs),
            margin: JsonReal(margin),
            pass,
        }
    }

    /// Cellwise agreement of two weight representations.
    pub fn weights_eq(
        anchor: impl Into<String>,
        description: impl Into<String>,
        a: &Weight,
        b: &Weight,
        tolerance: f64,
    ) -> Check {
        let pass = a.approx_eq(b, tolerance);
        Check {
            anchor: anchor.into(),
            description: description.into(),
            lhs: JsonReal(if pass { 0.0 } else { 1.0 }),
            rhs: JsonReal(0.0),
            margin: JsonReal(if pass { 0.0 } else { -1.0 }),
            pass,
        }
    }
}

/// A tuple (f, f_1, ..., f_m) of nonnegative functions, the shape the
/// weighted estimates quantify over.
#[derive(Clone, Debug)]
pub struct FunctionTuple {
    pub f: GridFunction,
    pub fs: Vec<GridFunction>,
}

impl FunctionTuple {
    pub fn new(f: GridFunction, fs: Vec<GridFunction>) -> Result<Self> {
        if !f.is_nonnegative() || fs.iter().any(|g| !g.is_nonnegative()) {
            return Err(Error::InvalidParameter(
                "function tuples must be nonnegative".into(),
            ));
        }
        Ok(FunctionTuple { f, fs })
    }
}

/// Suite configuration shared by the CLI and the library entry points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub dim: usize,
    pub depth: u32,
    pub policy: String,
    pub seed: u64,
    pub samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dim: 1,
            depth: 10,
            policy: "mesh".into(),
            seed: 42,
            samples: 50,
        }
    }
}

impl SuiteConfig {
    pub fn grid(&self) -> Result<DyadicGrid> {
        DyadicGrid::new(self.dim, self.depth, Policy::parse(&self.policy)?)
    }
}

/// A full suite report; `pass` holds exactly when every check passes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub config: SuiteConfig,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    fn assemble(suite: &str, config: &SuiteConfig, checks: Vec<Check>) -> VerificationReport {
        let pass = checks.iter().all(|c| c.pass);
        let report = VerificationReport {
            suite: suite.into(),
            config: config.clone(),
            checks,
            pass,
        };
        debug_assert!(report.anchors_unique());
        report
    }

    /// Every anchor appears exactly once: no check is silently dropped or
    /// duplicated by concurrent execution.
    pub fn anchors_unique(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.checks.iter().all(|c| seen.insert(c.anchor.clone()))
    }
}

pub const SUITES: &[&str] = &[
    "lemma-main",
    "lemma-two",
    "sparse-bound",
    "maximal",
    "commutator",
    "exponents",
    "power-weights",
    "characterization",
];

/// Runs one named suite. Reports are deterministic for a fixed config: every
/// check draws from a stream seeded by (master seed, check name).
pub fn run_suite(name: &str, config: &SuiteConfig) -> Result<VerificationReport> {
    let checks = match name {
        "lemma-main" => suite_lemma_main(config)?,
        "lemma-two" => suite_lemma_two(config)?,
        "sparse-bound" => suite_sparse_bound(config)?,
        "maximal" => suite_maximal(config)?,
        "commutator" => suite_commutator(config)?,
        "exponents" => suite_exponents(config)?,
        "power-weights" => suite_power_weights(config)?,
        "characterization" => suite_characterization(config)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown suite {other:?}; expected one of {SUITES:?}"
            )))
        }
    };
    Ok(VerificationReport::assemble(name, config, checks))
}

fn rational_pairs(p: &[(i128, i128)]) -> Vec<Rational> {
    p.iter().map(|&(n, d)| Rational::new(n, d)).collect()
}

fn worst(checks: impl IntoIterator<Item = Check>) -> (f64, bool) {
    let mut margin = f64::INFINITY;
    let mut pass = true;
    for c in checks {
        margin = margin.min(c.margin.0);
        pass &= c.pass;
    }
    (margin, pass)
}

fn summary(anchor: &str, description: &str, margin: f64, pass: bool) -> Check {
    Check {
        anchor: anchor.into(),
        description: description.into(),
        lhs: JsonReal(0.0),
        rhs: JsonReal(0.0),
        margin: JsonReal(margin),
        pass,
    }
}

fn suite_lemma_main(config: &SuiteConfig) -> Result<Vec<Check>> {
    let grid = config.grid()?;
    let sets = [
        (vec![(3, 1), (3, 1)], vec![(1, 1), (1, 1), (1, 1)]),
        (vec![(3, 1), (3, 1)], vec![(2, 1), (2, 1), (2, 1)]),
        (vec![(3, 1), (2, 1)], vec![(1, 1), (2, 1), (2, 1)]),
    ];
    let mut out = Vec::new();
    for (p, r) in &sets {
        let cfg = ExponentConfig::new(rational_pairs(p), rational_pairs(r))?;
        let label = format!("p={p:?} r={r:?}");
        let mut rng = Rng::for_check(config.seed, &format!("lemma-main/{label}"));
        let mut all = Vec::new();
        for _ in 0..config.samples {
            let wv = random_vector_weight(&cfg, &grid, &mut rng);
            let dec = lemma::lemma_decompose(&wv, &grid)?;
            all.extend(dec.checks.iter().cloned());
            let m = cfg.m();
            let (rebuilt, rec_checks) = lemma::lemma_reconstruct(
                &wv.weights[..m - 1],
                &dec.w_hat,
                &dec.cap_w,
                &cfg,
                &grid,
            )?;
            all.extend(rec_checks);
            all.push(Check::weights_eq(
                "roundtrip",
                "reconstruction recovers the last component",
                &rebuilt.weights[m - 1],
                &wv.weights[m - 1],
                tol::REL_EQ * 10.0,
            ));
            let f = GridFunction::random(grid, &mut rng, 2.0);
            all.extend(lemma::norm_identity_check(&f, &wv, &dec, &grid)?);
        }
        let (margin, pass) = worst(all);
        out.push(summary(
            &format!("factorization.suite[{label}]"),
            "decomposition bounds, reconstruction bound, roundtrip and norm identities",
            margin,
            pass,
        ));
    }
    Ok(out)
}

fn suite_lemma_two(config: &SuiteConfig) -> Result<Vec<Check>> {
    let grid = config.grid()?;
    let sets = [
        (vec![(3, 1), (3, 1)], vec![(1, 1), (1, 1), (1, 1)]),
        (vec![(3, 1), (3, 1)], vec![(2, 1), (2, 1), (2, 1)]),
        (vec![(4, 1), (4, 1)], vec![(1, 1), (1, 1), (1, 1)]),
    ];
    let mut out = Vec::new();
    for (p, r) in &sets {
        let cfg = ExponentConfig::new(rational_pairs(p), rational_pairs(r))?;
        let label = format!("p={p:?} r={r:?}");
        let mut rng = Rng::for_check(config.seed, &format!("lemma-two/{label}"));
        let mut all = Vec::new();
        for _ in 0..config.samples {
            let wv = random_vector_weight(&cfg, &grid, &mut rng);
            all.extend(lemma::lemma2_check(&wv, &grid, Lemma2Direction::Decompose)?);
            all.extend(lemma::lemma2_check(
                &wv,
                &grid,
                Lemma2Direction::Reconstruct,
            )?);
        }
        let (margin, pass) = worst(all);
        out.push(summary(
            &format!("factorization2.suite[{label}]"),
            "product-weight factorization bounds in both directions",
            margin,
            pass,
        ));
    }
    Ok(out)
}

fn sparse_bound_checks(
    config: &SuiteConfig,
    rv: &[Rational],
    zeta: Rational,
) -> Result<(Check, Rational)> {
    // Sparse machinery lives on the dyadic tree regardless of the configured
    // enumeration policy.
    let grid = DyadicGrid::new(config.dim, config.depth, Policy::Dyadic)?;
    let (p, _) = exponents::natural_exponents(rv)?;
    let cfg = ExponentConfig::new(p, rv.to_vec())?;
    let label = format!("r={rv:?} zeta={zeta}");
    let mut rng = Rng::for_check(config.seed, &format!("sparse-bound/{label}"));
    let mut all = Vec::new();
    let mut prefactor = Rational::one();
    for _ in 0..config.samples {
        let wv = random_vector_weight(&cfg, &grid, &mut rng);
        let fam = sparse::random_sparse(&grid, zeta, rng.next_u64())?;
        let f1 = GridFunction::random(grid, &mut rng, 2.0);
        let f2 = GridFunction::random(grid, &mut rng, 2.0);
        let h = GridFunction::random(grid, &mut rng, 2.0);
        let cert = sparse::form_bound_certificate(&fam, &wv, &[f1, f2], &h, &grid)?;
        prefactor = cert.prefactor;
        all.extend(cert.checks.iter().cloned());
        all.extend(sparse::necessity_sweep(&wv, cert.constant, &grid)?);
    }
    let (margin, pass) = worst(all);
    Ok((
        summary(
            &format!("sparse_chain.suite[{label}]"),
            &format!("duality chain and necessity sweep (prefactor {prefactor})"),
            margin,
            pass,
        ),
        prefactor,
    ))
}

fn suite_sparse_bound(config: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let half = Rational::new(1, 2);
    for r in [vec![(1, 1); 3], vec![(2, 1); 3]] {
        let (check, _) = sparse_bound_checks(config, &rational_pairs(&r), half)?;
        out.push(check);
    }
    // The reference prefactor at zeta = 1/2 and unit exponents.
    let pref = {
        let one = Rational::one();
        let rbar = Rational::new(1, 3);
        let mut acc = Rational::new(2, 1);
        for _ in 0..3 {
            acc = acc / (one - rbar);
        }
        acc
    };
    out.push(Check::eq(
        "sparse_chain.reference_prefactor",
        "explicit constant at zeta 1/2 and unit exponents is 27/4",
        pref.to_f64(),
        27.0 / 4.0,
        0.0,
    ));
    Ok(out)
}

/// Targeted sparse-bound run at one exponent vector and sparsity constant;
/// the report carries the evaluated explicit prefactor.
pub fn run_sparse_bound(
    config: &SuiteConfig,
    r: &[Rational],
    zeta: Rational,
) -> Result<VerificationReport> {
    let (check, prefactor) = sparse_bound_checks(config, r, zeta)?;
    let pref_check = Check::eq(
        "sparse_chain.prefactor",
        format!("evaluated explicit prefactor is exactly {prefactor}"),
        prefactor.to_f64(),
        prefactor.to_f64(),
        0.0,
    );
    Ok(VerificationReport::assemble(
        "sparse-bound",
        config,
        vec![check, pref_check],
    ))
}

fn suite_maximal(config: &SuiteConfig) -> Result<Vec<Check>> {
    let grid = DyadicGrid::new(config.dim, config.depth, Policy::Dyadic)?;
    let mut out = Vec::new();
    for (num, den) in [(3, 1), (2, 1), (3, 2)] {
        let p = num as f64 / den as f64;
        let mut rng = Rng::for_check(config.seed, &format!("maximal/p={num}/{den}"));
        let mu = weights::random_weight(&grid, &mut rng);
        let rep = maximal::maximal_norm_check(&mu, p, config.samples, rng.next_u64(), &grid)?;
        out.push(Check::leq(
            format!("maximal.norm_ratio[p={num}/{den}]"),
            format!(
                "worst maximal norm ratio against the conjugate bound {}",
                rep.bound
            ),
            rep.worst_ratio,
            rep.bound,
        ));
    }
    Ok(out)
}

fn suite_commutator(config: &SuiteConfig) -> Result<Vec<Check>> {
    // Oscillation norms walk every cube with a per-cube bisection; capping
    // the depth keeps the suite inside its time budget at the defaults.
    let grid = DyadicGrid::new(
        config.dim,
        config.depth.min(7),
        Policy::parse(&config.policy)?,
    )?;
    let cfg = ExponentConfig::new(
        rational_pairs(&[(3, 1), (3, 1)]),
        rational_pairs(&[(1, 1), (1, 1), (1, 1)]),
    )?;
    let mut rng = Rng::for_check(config.seed, "commutator/perturbation");
    let mut all = Vec::new();
    for _ in 0..config.samples {
        let vv = random_vector_weight(&cfg, &grid, &mut rng);
        let (bounds, _) = bmo::max_admissible_gamma(&vv, &grid)?;
        let b1 = bmo::normalized_random_bmo(&grid, &mut rng);
        let b2 = bmo::normalized_random_bmo(&grid, &mut rng);
        let (_, checks) = bmo::commutator_perturb(&vv, &[b1, b2], &bounds, &grid)?;
        all.extend(checks);
    }
    let (margin, pass) = worst(all);
    let mut out = vec![summary(
        "commutator.suite",
        "perturbed characteristics within the exponential budget at maximal sizes",
        margin,
        pass,
    )];

    let mut rng = Rng::for_check(config.seed, "commutator/exp-weight");
    let mut all = Vec::new();
    let mut norm_ordered = true;
    for _ in 0..config.samples {
        let b = bmo::bmo_norms(&weights::random_oscillation(&grid, &mut rng), &grid);
        norm_ordered &= b.bmo <= b.bmo_exp + 1e-12;
        if b.bmo_exp == 0.0 {
            continue;
        }
        let q = Rational::new(1 + rng.below(3) as i128 + 1, 1);
        let cap = (q - Rational::one()).to_f64().min(1.0) / b.bmo_exp;
        let lambda = cap * rng.range(0.1, 1.0);
        let max_b = b.b.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if lambda.abs() * max_b > 250.0 {
            continue;
        }
        all.extend(bmo::exp_weight_check(&b, lambda, q, &grid)?);
    }
    let (margin, pass) = worst(all);
    out.push(summary(
        "exp_weight.suite",
        "exponential weight class bounds over admissible sizes",
        margin,
        pass,
    ));
    out.push(summary(
        "bmo.norm_order",
        "plain oscillation norm below the exponential norm",
        if norm_ordered { 0.0 } else { -1.0 },
        norm_ordered,
    ));
    Ok(out)
}

fn suite_exponents(config: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    // Exact identities on random admissible configurations.
    let mut rng = Rng::for_check(config.seed, "exponents/identities");
    let mut exact = true;
    for _ in 0..config.samples.max(100) {
        if let Some((cfg, _)) = random_admissible(&mut rng) {
            let d = cfg.derived()?;
            exact &= cfg.inv_p_total() + d.inv_pm1 == Rational::one();
            exact &= d.delta.iter().fold(Rational::zero(), |a, x| a + x.recip()) == d.delta_total();
            let m = cfg.m();
            exact &= d.rho.recip() == d.delta[m - 1].recip() + d.delta[m].recip();
            exact &= d.theta.iter().all(|t| t.is_positive());
        }
    }
    out.push(summary(
        "exponents.exact_identities",
        "reciprocal sums, the dual-slot relation and positivity, all exact",
        if exact { 0.0 } else { -1.0 },
        exact,
    ));

    // Certified paths and one-component parameters.
    let mut rng = Rng::for_check(config.seed, "exponents/paths");
    let mut ok = true;
    let mut count = 0;
    while count < config.samples * 4 {
        let Some((cfg, strict)) = random_admissible(&mut rng) else {
            continue;
        };
        if !strict {
            continue;
        }
        count += 1;
        let m = cfg.m();
        let target: Vec<Rational> = (0..m)
            .map(|i| cfg.r[i] + Rational::new(1 + rng.below(6) as i128, 1 + rng.below(3) as i128))
            .collect();
        let inv_q: Rational = target.iter().fold(Rational::zero(), |a, x| a + x.recip());
        if inv_q <= cfg.r[m].conjugate().recip() {
            continue;
        }
        match exponents::extrapolation_path(&cfg.p, &target, &cfg.r) {
            Ok(steps) => {
                ok &= steps
                    .iter()
                    .all(|s| s.certificates.iter().all(|c| c.satisfied));
                if let Some(last) = steps.last() {
                    ok &= last.to == target;
                }
            }
            Err(_) => ok = false,
        }
        // One-component parameters keep the three differences equal.
        let q_m = cfg.p[m - 1] + Rational::one();
        if let Ok(st) = exponents::step1_parameters(&cfg.p, &cfg.r, q_m) {
            let d = cfg.derived()?;
            let a = st.s.recip() - cfg.inv_p_total();
            let b = st.tau.recip() - d.delta[m].recip();
            let c = st.s_m.recip() - cfg.p[m - 1].recip();
            ok &= a == b && b == c;
        } else {
            ok = false;
        }
    }
    out.push(summary(
        "exponents.certified_paths",
        "randomized certified paths and one-component parameter identities",
        if ok { 0.0 } else { -1.0 },
        ok,
    ));
    Ok(out)
}

fn suite_power_weights(config: &SuiteConfig) -> Result<Vec<Check>> {
    let grid = DyadicGrid::new(1, config.depth, Policy::MeshIntervals)?;
    let combos: [(Vec<Rational>, Vec<Rational>); 4] = [
        (
            rational_pairs(&[(3, 1), (3, 1)]),
            rational_pairs(&[(1, 1); 3]),
        ),
        (
            rational_pairs(&[(3, 1), (3, 1)]),
            rational_pairs(&[(2, 1); 3]),
        ),
        (
            rational_pairs(&[(4, 1), (4, 1)]),
            rational_pairs(&[(1, 1); 3]),
        ),
        (
            rational_pairs(&[(4, 1), (4, 1)]),
            rational_pairs(&[(2, 1); 3]),
        ),
    ];
    let mut out = Vec::new();
    for (qv, rv) in &combos {
        let (lo, hi) = exponents::power_weight_interval(&[qv[0], qv[1]], &[rv[0], rv[1], rv[2]])?;
        let cfg = ExponentConfig::new(qv.clone(), rv.clone())?;
        let mut agree = true;
        let samples = 20;
        let (lof, hif) = (lo.to_f64(), hi.to_f64());
        let margin = 0.05;
        let span = hif - lof;
        for k in 0..samples {
            // Sample inside and outside with the boundary margin.
            let t = (k as f64 + 0.5) / samples as f64;
            let a = lof - 0.5 * span + 2.0 * span * t;
            if (a - lof).abs() < margin || (a - hif).abs() < margin {
                continue;
            }
            let inside = a > lof && a < hif;
            let w = Weight::analytic_power(grid, a)?;
            let wv = VectorWeight::new(vec![w.clone(), w], cfg.clone())?;
            let member = ml_constant(&wv, &grid)?.is_finite();
            agree &= member == inside;
        }
        out.push(summary(
            &format!("power_weights.match[q={qv:?} r={rv:?}]"),
            &format!("numeric membership matches the closed-form interval ({lo}, {hi})"),
            if agree { 0.0 } else { -1.0 },
            agree,
        ));
    }
    Ok(out)
}

fn suite_characterization(config: &SuiteConfig) -> Result<Vec<Check>> {
    let grid = DyadicGrid::new(1, config.depth.min(10), Policy::MeshIntervals)?;
    let cfg = ExponentConfig::new(
        rational_pairs(&[(1, 1), (1, 1)]),
        rational_pairs(&[(1, 1), (1, 1), (1, 1)]),
    )?;
    let mut out = Vec::new();

    // The two reference pairs: one member, one divergent.
    let depths = vec![8, 10, 12, 14];
    let finite = refinement_divergence(
        &[WeightSpec::Power { a: 1.0 }, WeightSpec::Power { a: 0.0 }],
        &cfg,
        &depths,
        1.5,
    )?;
    out.push(summary(
        "characterization.member_pair",
        "the (singular, flat) pair is classified finite under refinement",
        if finite == Verdict::Finite { 0.0 } else { -1.0 },
        finite == Verdict::Finite,
    ));
    let divergent = refinement_divergence(
        &[WeightSpec::Power { a: 1.0 }, WeightSpec::Power { a: 1.0 }],
        &cfg,
        &depths,
        1.5,
    )?;
    out.push(summary(
        "characterization.divergent_pair",
        "the doubly singular pair is classified divergent",
        if divergent == Verdict::Divergent {
            0.0
        } else {
            -1.0
        },
        divergent == Verdict::Divergent,
    ));

    // Three-weight equivalence on random pairs.
    let mut rng = Rng::for_check(config.seed, "characterization/three-weight");
    let mut agree = true;
    for _ in 0..config.samples.min(30) {
        let powers = [-0.5, 0.0, 0.3, 0.8, 1.2, 1.6];
        let a = powers[rng.below(powers.len())];
        let b = powers[rng.below(powers.len())];
        let w1 = Weight::analytic_power(grid, a)?;
        let w2 = Weight::analytic_power(grid, b)?;
        let wv = VectorWeight::new(vec![w1.clone(), w2.clone()], cfg.clone())?;
        let direct = ml_constant(&wv, &grid)?.is_finite();
        let one = Rational::one();
        let a1 = |w: &Weight| -> Result<bool> {
            Ok(scalar_constant(&w.pow(0.5), &ScalarClass::Ap { p: one }, None, &grid)?.is_finite())
        };
        let three = a1(&w1)? && a1(&w2)? && a1(&w1.mul(&w2))?;
        agree &= direct == three;
    }
    out.push(summary(
        "characterization.three_weight",
        "three-weight equivalence agrees with direct membership",
        if agree { 0.0 } else { -1.0 },
        agree,
    ));
    Ok(out)
}

/// Draws a random admissible (p, r) configuration with small denominators;
/// returns the config and whether the order is strict.
pub fn random_admissible(rng: &mut Rng) -> Option<(ExponentConfig, bool)> {
    let m = 2 + rng.below(2);
    let rat = |rng: &mut Rng, lo_num: i128| {
        Rational::new(lo_num + rng.below(8) as i128, 1 + rng.below(4) as i128).max(Rational::one())
    };
    let r: Vec<Rational> = (0..=m).map(|_| rat(rng, 1)).collect();
    let p: Vec<Rational> = (0..m)
        .map(|i| r[i] + Rational::new(rng.below(5) as i128, 1 + rng.below(3) as i128))
        .collect();
    let cfg = ExponentConfig::new(p, r).ok()?;
    match cfg.order() {
        OrderRelation::Strict => Some((cfg, true)),
        OrderRelation::Weak => Some((cfg, false)),
        OrderRelation::None => None,
    }
}

/// Outcome of a refinement sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// Classifies a vector weight by recomputing its characteristic on
/// successively deeper grids. An exactly divergent constant at any depth is
/// decisive; otherwise growth by at least `growth_threshold` across every
/// consecutive pair reads as divergent, ratios within 1.1 as finite, and
/// anything between as inconclusive.
pub fn refinement_divergence(
    specs: &[WeightSpec],
    cfg: &ExponentConfig,
    depths: &[u32],
    growth_threshold: f64,
) -> Result<Verdict> {
    if depths.len() < 3 || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "need at least three strictly increasing depths".into(),
        ));
    }
    let mut values = Vec::new();
    for &d in depths {
        let grid = DyadicGrid::new(1, d, Policy::MeshIntervals)?;
        let ws: Result<Vec<Weight>> = specs.iter().map(|s| s.realize(&grid)).collect();
        let wv = VectorWeight::new(ws?, cfg.clone())?;
        let k = ml_constant(&wv, &grid)?;
        if k.is_infinite() {
            return Ok(Verdict::Divergent);
        }
        values.push(k.raw());
    }
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&r| r >= growth_threshold) {
        Ok(Verdict::Divergent)
    } else if ratios.iter().all(|&r| r <= 1.1) {
        Ok(Verdict::Finite)
    } else {
        Ok(Verdict::Inconclusive)
    }
}

/// Scalar aggregation inequality behind square-function bounds: for a table
/// `a[i][j] >= 0` and exponents with `1/s = Σ 1/s_i`,
/// `(Σ_j Π_i a_{ij}^s)^{1/s} <= Π_i (Σ_j a_{ij}^{s_i})^{1/s_i}`.
#[allow(clippy::needless_range_loop)] // loops mirror the displayed sums
pub fn holder_vv_single(table: &[Vec<f64>], s: &[Rational]) -> Result<Check> {
    let m = table.len();
    if m == 0 || s.len() != m {
        return Err(Error::DimensionMismatch(
            "one exponent per table row required".into(),
        ));
    }
    let cols = table[0].len();
    if table.iter().any(|row| row.len() != cols) {
        return Err(Error::DimensionMismatch("ragged norm table".into()));
    }
    let inv_s: Rational = s.iter().fold(Rational::zero(), |a, x| a + x.recip());
    let sf = inv_s.recip().to_f64();
    let mut lhs = 0.0;
    for j in 0..cols {
        let prod: f64 = (0..m).map(|i| table[i][j]).product();
        lhs += prod.powf(sf);
    }
    let lhs = lhs.powf(1.0 / sf);
    let mut rhs = 1.0;
    for (row, si) in table.iter().zip(s.iter()) {
        let sif = si.to_f64();
        rhs *= row.iter().map(|a| a.powf(sif)).sum::<f64>().powf(1.0 / sif);
    }
    Ok(Check::leq(
        "holder_vv.single",
        "aggregated product norm below the product of aggregated norms",
        lhs,
        rhs,
    ))
}

/// Doubly nested variant: `b[i][j][k]` aggregated first in k with `s`, then
/// in j with `t`.
#[allow(clippy::needless_range_loop)] // loops mirror the displayed sums
pub fn holder_vv_double(table: &[Vec<Vec<f64>>], s: &[Rational], t: &[Rational]) -> Result<Check> {
    let m = table.len();
    if m == 0 || s.len() != m || t.len() != m {
        return Err(Error::DimensionMismatch(
            "one exponent per table row required".into(),
        ));
    }
    let inv_s: Rational = s.iter().fold(Rational::zero(), |a, x| a + x.recip());
    let inv_t: Rational = t.iter().fold(Rational::zero(), |a, x| a + x.recip());
    let sf = inv_s.recip().to_f64();
    let tf = inv_t.recip().to_f64();
    let rows = table[0].len();
    let cols = table[0][0].len();
    // LHS: (Σ_j (Σ_k Π_i b^s)^{t/s})^{1/t}
    let mut lhs = 0.0;
    for j in 0..rows {
        let mut inner = 0.0;
        for k in 0..cols {
            let prod: f64 = (0..m).map(|i| table[i][j][k]).product();
            inner += prod.powf(sf);
        }
        lhs += inner.powf(tf / sf);
    }
    let lhs = lhs.powf(1.0 / tf);
    // RHS: Π_i (Σ_j (Σ_k b^{s_i})^{t_i/s_i})^{1/t_i}
    let mut rhs = 1.0;
    for i in 0..m {
        let sif = s[i].to_f64();
        let tif = t[i].to_f64();
        let mut outer = 0.0;
        for j in 0..rows {
            let inner: f64 = table[i][j].iter().map(|a| a.powf(sif)).sum();
            outer += inner.powf(tif / sif);
        }
        rhs *= outer.powf(1.0 / tif);
    }
    Ok(Check::leq(
        "holder_vv.double",
        "doubly nested aggregation inequality",
        lhs,
        rhs,
    ))
}

/// Spec-level entry point dispatching on the nesting depth.
pub enum Nesting<'a> {
    Single(&'a [Vec<f64>]),
    Double(&'a [Vec<Vec<f64>>], &'a [Rational]),
}

pub fn holder_vv_check(nesting: Nesting<'_>, s: &[Rational]) -> Result<Check> {
    match nesting {
        Nesting::Single(table) => holder_vv_single(table, s),
        Nesting::Double(table, t) => holder_vv_double(table, s, t),
    }
}
