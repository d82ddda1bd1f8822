//! Weight representations and characteristic constants.
//!
//! A weight is a strictly positive density on the grid, stored as an optional
//! per-cell factor times an analytic power `x^e` anchored at the left domain
//! endpoint (1D only). Products and real powers stay inside this family, and
//! every cube moment `∫_Q w^s dx` is computed exactly, returning `+∞` when
//! the singularity is non-integrable. Divergent constants are values, not
//! errors: `+∞` signals non-membership in a weight class.

pub mod bmo;
pub mod lemma;

use crate::exponents::ExponentConfig;
use crate::extreal::ExtReal;
use crate::grid::{Cube, DyadicGrid, GridFunction, Policy};
use crate::maximal;
use crate::rational::Rational;
use crate::rng::Rng;
use crate::{Error, Result};
use std::path::Path;
use std::sync::Arc;

/// A positive weight: `w(x) = factor(x) · x^exponent` with `factor` constant
/// on finest cells (all ones when absent).
#[derive(Clone, Debug)]
pub struct Weight {
    grid: DyadicGrid,
    factor: Option<Arc<Vec<f64>>>,
    exponent: f64,
}

impl Weight {
    pub fn constant(grid: DyadicGrid, c: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "constant weight must be positive finite, got {c}"
            )));
        }
        Ok(Weight {
            grid,
            factor: if c == 1.0 {
                None
            } else {
                Some(Arc::new(vec![c; grid.cell_count()]))
            },
            exponent: 0.0,
        })
    }

    pub fn one(grid: DyadicGrid) -> Self {
        Weight {
            grid,
            factor: None,
            exponent: 0.0,
        }
    }

    /// Grid-sampled weight from strictly positive cell values.
    pub fn from_values(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                grid.cell_count(),
                values.len()
            )));
        }
        if values.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::InvalidParameter(
                "weight values must be strictly positive and finite".into(),
            ));
        }
        Ok(Weight {
            grid,
            factor: Some(Arc::new(values)),
            exponent: 0.0,
        })
    }

    pub fn from_grid_function(f: &GridFunction) -> Result<Self> {
        Weight::from_values(*f.grid(), f.values().to_vec())
    }

    /// The analytic power density `|x|^{-a}`, singular at the left endpoint
    /// when a > 0. One-dimensional grids only.
    pub fn analytic_power(grid: DyadicGrid, a: f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::UnsupportedPolicy(
                "analytic power weights are one-dimensional".into(),
            ));
        }
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!("bad power {a}")));
        }
        Ok(Weight {
            grid,
            factor: None,
            exponent: -a,
        })
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn has_analytic_part(&self) -> bool {
        self.exponent != 0.0
    }

    /// Real power, exact on both parts.
    pub fn pow(&self, s: f64) -> Weight {
        assert!(s.is_finite(), "weight power must be finite");
        if s == 0.0 {
            return Weight::one(self.grid);
        }
        Weight {
            grid: self.grid,
            factor: self
                .factor
                .as_ref()
                .map(|f| Arc::new(f.iter().map(|&v| v.powf(s)).collect())),
            exponent: self.exponent * s,
        }
    }

    /// Pointwise product; grids must agree.
    pub fn mul(&self, other: &Weight) -> Weight {
        assert_eq!(self.grid, other.grid, "weight grids differ");
        let factor = match (&self.factor, &other.factor) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => Some(Arc::new(
                a.iter().zip(b.iter()).map(|(x, y)| x * y).collect(),
            )),
        };
        Weight {
            grid: self.grid,
            factor,
            exponent: self.exponent + other.exponent,
        }
    }

    pub fn recip(&self) -> Weight {
        self.pow(-1.0)
    }

    fn factor_at(&self, cell: usize) -> f64 {
        self.factor.as_ref().map_or(1.0, |f| f[cell])
    }

    /// Exact mass `∫_cell w dx`; +∞ when the analytic part is non-integrable
    /// over a cell touching the origin.
    pub fn cell_mass(&self, cell: usize) -> ExtReal {
        let f = self.factor_at(cell);
        if self.exponent == 0.0 {
            return ExtReal::new(f * self.grid.cell_volume());
        }
        let n = self.grid.side() as f64;
        let (c0, c1) = (cell as f64 / n, (cell + 1) as f64 / n);
        power_moment(c0, c1, self.exponent).mul(ExtReal::new(f))
    }

    /// Per-cell essential supremum of the pointwise values.
    pub fn cell_sup(&self, cell: usize) -> ExtReal {
        let f = self.factor_at(cell);
        if self.exponent == 0.0 {
            return ExtReal::new(f);
        }
        let n = self.grid.side() as f64;
        let (c0, c1) = (cell as f64 / n, (cell + 1) as f64 / n);
        let e = self.exponent;
        let edge = if e > 0.0 {
            ExtReal::new(c1.powf(e))
        } else if c0 == 0.0 {
            ExtReal::INFINITY
        } else {
            ExtReal::new(c0.powf(e))
        };
        edge.mul(ExtReal::new(f))
    }

    /// Per-cell essential infimum.
    pub fn cell_inf(&self, cell: usize) -> f64 {
        let f = self.factor_at(cell);
        if self.exponent == 0.0 {
            return f;
        }
        let n = self.grid.side() as f64;
        let (c0, c1) = (cell as f64 / n, (cell + 1) as f64 / n);
        let e = self.exponent;
        let edge = if e > 0.0 { c0.powf(e) } else { c1.powf(e) };
        f * edge
    }

    /// All cell masses.
    pub fn masses(&self) -> Vec<ExtReal> {
        (0..self.grid.cell_count())
            .map(|c| self.cell_mass(c))
            .collect()
    }

    /// Essential supremum over a cube (exact: max of per-cell sups).
    pub fn ess_sup(&self, q: &Cube) -> ExtReal {
        q.cells(&self.grid)
            .map(|c| self.cell_sup(c))
            .fold(ExtReal::ZERO, ExtReal::max)
    }

    /// Essential infimum over a cube.
    pub fn ess_inf(&self, q: &Cube) -> f64 {
        q.cells(&self.grid)
            .map(|c| self.cell_inf(c))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact average of the weight over a cube.
    pub fn average(&self, q: &Cube) -> ExtReal {
        MassTable::build(self).average(q)
    }

    /// Relative cellwise comparison of the two representations.
    pub fn approx_eq(&self, other: &Weight, tol: f64) -> bool {
        if self.grid != other.grid {
            return false;
        }
        if (self.exponent - other.exponent).abs() > 1e-9 * (1.0 + self.exponent.abs()) {
            return false;
        }
        (0..self.grid.cell_count()).all(|c| {
            let a = self.factor_at(c);
            let b = other.factor_at(c);
            (a - b).abs() <= tol * (1.0f64).max(a.abs()).max(b.abs())
        })
    }
}

/// `∫_{c0}^{c1} x^e dx`, exact, +∞ when divergent at the origin.
fn power_moment(c0: f64, c1: f64, e: f64) -> ExtReal {
    debug_assert!(c0 < c1);
    if c0 == 0.0 && e <= -1.0 {
        return ExtReal::INFINITY;
    }
    if e == -1.0 {
        return ExtReal::new((c1 / c0).ln());
    }
    let k = e + 1.0;
    let hi = c1.powf(k);
    let lo = if c0 == 0.0 { 0.0 } else { c0.powf(k) };
    ExtReal::new((hi - lo) / k)
}

/// Cumulative cell masses with O(1) cube queries (summed-area in 2D).
pub struct MassTable {
    grid: DyadicGrid,
    prefix: Vec<f64>,
    infinite_origin: bool,
}

impl MassTable {
    pub fn build(w: &Weight) -> MassTable {
        let grid = w.grid;
        let n = grid.side();
        let infinite_origin = w.cell_mass(0).is_infinite();
        let cell_mass = |c: usize| w.cell_mass(c).finite().unwrap_or(0.0);
        let prefix = if grid.dim() == 1 {
            let mut p = vec![0.0; n + 1];
            let mut s = 0.0;
            let mut comp = 0.0;
            for c in 0..n {
                let x = cell_mass(c);
                let t = s + x;
                if s.abs() >= x.abs() {
                    comp += (s - t) + x;
                } else {
                    comp += (x - t) + s;
                }
                s = t;
                p[c + 1] = s + comp;
            }
            p
        } else {
            let mut p = vec![0.0; (n + 1) * (n + 1)];
            for y in 0..n {
                let mut row = 0.0;
                for x in 0..n {
                    row += cell_mass(y * n + x);
                    p[(y + 1) * (n + 1) + (x + 1)] = p[y * (n + 1) + (x + 1)] + row;
                }
            }
            p
        };
        MassTable {
            grid,
            prefix,
            infinite_origin,
        }
    }

    /// Mass of the cube, +∞ if it touches a divergent origin cell.
    pub fn mass(&self, q: &Cube) -> ExtReal {
        if self.infinite_origin && q.lo[0] == 0 && q.lo[1] == 0 {
            return ExtReal::INFINITY;
        }
        let v = if self.grid.dim() == 1 {
            self.prefix[q.hi[0]] - self.prefix[q.lo[0]]
        } else {
            let n = self.grid.side() + 1;
            let at = |x: usize, y: usize| self.prefix[y * n + x];
            at(q.hi[0], q.hi[1]) - at(q.lo[0], q.hi[1]) - at(q.hi[0], q.lo[1])
                + at(q.lo[0], q.lo[1])
        };
        ExtReal::new(v.max(0.0))
    }

    pub fn average(&self, q: &Cube) -> ExtReal {
        self.mass(q).div(ExtReal::new(q.volume(&self.grid)))
    }

    /// Finite mass of a single finest cell (1D).
    pub fn mass_cell(&self, cell: usize) -> f64 {
        debug_assert_eq!(self.grid.dim(), 1);
        self.prefix[cell + 1] - self.prefix[cell]
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }
}

/// Range maximum over per-cell suprema (sparse table in 1D, direct in 2D).
pub struct SupTable {
    grid: DyadicGrid,
    values: Vec<f64>, // +inf allowed
    levels: Vec<Vec<f64>>,
}

impl SupTable {
    pub fn build(grid: DyadicGrid, values: Vec<f64>) -> SupTable {
        let mut levels = Vec::new();
        if grid.dim() == 1 {
            let n = values.len();
            let mut prev = values.clone();
            levels.push(prev.clone());
            let mut len = 1;
            while 2 * len <= n {
                let mut next = vec![f64::NEG_INFINITY; n - 2 * len + 1];
                for (i, slot) in next.iter_mut().enumerate() {
                    *slot = prev[i].max(prev[i + len]);
                }
                levels.push(next.clone());
                prev = next;
                len *= 2;
            }
        }
        SupTable {
            grid,
            values,
            levels,
        }
    }

    pub fn for_weight(w: &Weight) -> SupTable {
        let vals = (0..w.grid.cell_count())
            .map(|c| w.cell_sup(c).raw())
            .collect();
        SupTable::build(w.grid, vals)
    }

    pub fn max(&self, q: &Cube) -> ExtReal {
        let v = if self.grid.dim() == 1 {
            let (a, b) = (q.lo[0], q.hi[0]);
            let k = usize::BITS - 1 - (b - a).leading_zeros();
            let len = 1usize << k;
            self.levels[k as usize][a].max(self.levels[k as usize][b - len])
        } else {
            q.cells(&self.grid)
                .map(|c| self.values[c])
                .fold(f64::NEG_INFINITY, f64::max)
        };
        if v.is_infinite() {
            ExtReal::INFINITY
        } else {
            ExtReal::new(v)
        }
    }
}

/// An m-tuple of weights bound to its exponent configuration.
#[derive(Clone, Debug)]
pub struct VectorWeight {
    pub weights: Vec<Weight>,
    pub cfg: ExponentConfig,
}

impl VectorWeight {
    pub fn new(weights: Vec<Weight>, cfg: ExponentConfig) -> Result<Self> {
        if weights.len() != cfg.m() {
            return Err(Error::DimensionMismatch(format!(
                "vector weight needs m = {} components, got {}",
                cfg.m(),
                weights.len()
            )));
        }
        Ok(VectorWeight { weights, cfg })
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn product_weight(&self) -> Weight {
        product_weight(self)
    }
}

/// `w = Π w_i^{p/p_i}`; analytic exponents compose exactly.
pub fn product_weight(wv: &VectorWeight) -> Weight {
    let p = wv.cfg.p_total();
    let mut acc = Weight::one(*wv.weights[0].grid());
    for (wi, pi) in wv.weights.iter().zip(wv.cfg.p.iter()) {
        let e = (p / *pi).to_f64();
        acc = acc.mul(&wi.pow(e));
    }
    acc
}

/// Scalar weight classes over an optional base measure.
#[derive(Clone, Debug)]
pub enum ScalarClass {
    /// Muckenhoupt class at exponent p >= 1 (p = 1 takes the esssup form).
    Ap { p: Rational },
    /// Restricted-range class at p >= 1, r > 0; both averages run against
    /// the base measure.
    Apr { p: Rational, r: Rational },
}

/// Characteristic constant of `v` in the given scalar class with respect to
/// the base measure `mu` (Lebesgue when absent), over the grid's cube family.
pub fn scalar_constant(
    v: &Weight,
    class: &ScalarClass,
    mu: Option<&Weight>,
    grid: &DyadicGrid,
) -> Result<ExtReal> {
    let one = Weight::one(*v.grid());
    let mu = mu.unwrap_or(&one);
    match class {
        ScalarClass::Ap { p } => {
            if p.is_infinite() || *p < Rational::one() {
                return Err(Error::InvalidParameter(format!(
                    "scalar class needs 1 <= p < inf, got {p}"
                )));
            }
            let m_mu = MassTable::build(mu);
            let m_vmu = MassTable::build(&v.mul(mu));
            if *p == Rational::one() {
                // sup_Q avg_mu(v) * esssup_Q v^{-1}
                let sup_inv = SupTable::for_weight(&v.recip());
                sup_over_cubes(grid, |q| weighted_avg(&m_vmu, &m_mu, q).mul(sup_inv.max(q)))
            } else {
                // sup_Q avg_mu(v) * avg_mu(v^{1-p'})^{p-1}
                let pc = p.conjugate();
                let e_dual = (Rational::one() - pc).to_f64();
                let m_dual = MassTable::build(&v.pow(e_dual).mul(mu));
                let pw = (*p - Rational::one()).to_f64();
                sup_over_cubes(grid, |q| {
                    weighted_avg(&m_vmu, &m_mu, q).mul(weighted_avg(&m_dual, &m_mu, q).powf(pw))
                })
            }
        }
        ScalarClass::Apr { p, r } => {
            if p.is_infinite() || *p < Rational::one() || !r.is_positive() || r.is_infinite() {
                return Err(Error::InvalidParameter(format!(
                    "restricted class needs 1 <= p < inf and 0 < r < inf, got p = {p}, r = {r}"
                )));
            }
            let rf = r.to_f64();
            let m_mu = MassTable::build(mu);
            let m_vr = MassTable::build(&v.pow(rf).mul(mu));
            if *p == Rational::one() {
                // sup_Q avg_mu(v^r) * esssup_Q v^{-r}
                let sup_inv = SupTable::for_weight(&v.pow(-rf));
                sup_over_cubes(grid, |q| weighted_avg(&m_vr, &m_mu, q).mul(sup_inv.max(q)))
            } else {
                // sup_Q avg_mu(v^r) * avg_mu(v^{-p'})^{r/p'}
                let pc = p.conjugate();
                let m_dual = MassTable::build(&v.pow((-pc).to_f64()).mul(mu));
                let e = (*r / pc).to_f64();
                sup_over_cubes(grid, |q| {
                    weighted_avg(&m_vr, &m_mu, q).mul(weighted_avg(&m_dual, &m_mu, q).powf(e))
                })
            }
        }
    }
}

fn weighted_avg(num: &MassTable, den: &MassTable, q: &Cube) -> ExtReal {
    num.mass(q).div(den.mass(q))
}

fn sup_over_cubes(grid: &DyadicGrid, f: impl Fn(&Cube) -> ExtReal) -> Result<ExtReal> {
    let mut best = ExtReal::ZERO;
    grid.for_each_cube(&mut |q| {
        best = best.max(f(&q));
        !best.is_infinite() // the supremum cannot decrease past infinity
    });
    Ok(best)
}

/// Reciprocals of the component deltas (1/delta_i = 1/r_i - 1/p_i, i <= m)
/// and of the dual-slot delta. The characteristic accepts the closed region
/// r_i <= p_i, r_{m+1}' >= p.
fn ml_deltas(cfg: &ExponentConfig) -> Result<(Vec<Rational>, Rational)> {
    let m = cfg.m();
    let mut inv_delta = Vec::with_capacity(m);
    for i in 0..m {
        let d = cfg.r[i].recip() - cfg.p[i].recip();
        if d.is_negative() {
            return Err(Error::OrderViolation(format!(
                "component {}: r = {} exceeds p = {}",
                i + 1,
                cfg.r[i],
                cfg.p[i]
            )));
        }
        inv_delta.push(d);
    }
    let inv_dual = cfg.r[m].recip() - (Rational::one() - cfg.inv_p_total());
    if inv_dual.is_negative() {
        return Err(Error::OrderViolation(format!(
            "dual slot: r_{{m+1}}' = {} is below p = {}",
            cfg.r[m].conjugate(),
            cfg.p_total()
        )));
    }
    Ok((inv_delta, inv_dual))
}

/// The multilinear characteristic constant over the grid's cube family:
///
/// `sup_Q (avg_Q w^{d/p})^{1/d} Π_i (avg_Q w_i^{-d_i/p_i})^{1/d_i}`
///
/// where d_i, d are the component and dual-slot deltas, with the endpoint
/// replacements: `esssup_Q w_i^{-1/p_i}` when p_i = r_i, the plain
/// `(avg_Q w)^{1/p}` when r_{m+1} = 1 (to which the generic factor reduces),
/// and `esssup_Q w^{1/p}` on the closed dual boundary r_{m+1}' = p.
#[allow(clippy::needless_range_loop)] // indexed jointly with the exponent data
pub fn ml_constant(wv: &VectorWeight, grid: &DyadicGrid) -> Result<ExtReal> {
    let cfg = &wv.cfg;
    let m = cfg.m();
    let (inv_delta, inv_dual) = ml_deltas(cfg)?;
    let w = product_weight(wv);
    let inv_p = cfg.inv_p_total();

    enum Factor {
        Avg(MassTable, f64),
        Sup(SupTable),
    }
    let mut factors: Vec<Factor> = Vec::with_capacity(m + 1);

    if inv_dual.is_zero() {
        factors.push(Factor::Sup(SupTable::for_weight(&w.pow(inv_p.to_f64()))));
    } else {
        let delta = inv_dual.recip();
        let e = (delta * inv_p).to_f64();
        factors.push(Factor::Avg(MassTable::build(&w.pow(e)), inv_dual.to_f64()));
    }
    for i in 0..m {
        if inv_delta[i].is_zero() {
            factors.push(Factor::Sup(SupTable::for_weight(
                &wv.weights[i].pow(-cfg.p[i].recip().to_f64()),
            )));
        } else {
            let delta = inv_delta[i].recip();
            let e = -(delta / cfg.p[i]).to_f64();
            factors.push(Factor::Avg(
                MassTable::build(&wv.weights[i].pow(e)),
                inv_delta[i].to_f64(),
            ));
        }
    }

    sup_over_cubes(grid, |q| {
        let mut prod = ExtReal::ONE;
        for f in &factors {
            let term = match f {
                Factor::Avg(t, inv_d) => t.average(q).powf(*inv_d),
                Factor::Sup(t) => t.max(q),
            };
            prod = prod.mul(term);
        }
        prod
    })
}

/// Weight generator families.
pub enum GenKind<'a> {
    /// `(M^D f)^eta` for 0 < eta < 1 over the dyadic tree.
    CoifmanRochberg { f: &'a GridFunction, eta: f64 },
    /// `exp(u)` with independent cell draws `|u| <= osc/2`.
    LogBoundedOscillation { osc: f64, seed: u64 },
    /// `exp(lambda * b)` for a cellwise function b.
    ExpBmo { b: &'a GridFunction, lambda: f64 },
}

/// Generates a single positive weight.
pub fn gen_weight(kind: GenKind<'_>, grid: &DyadicGrid) -> Result<Weight> {
    match kind {
        GenKind::CoifmanRochberg { f, eta } => {
            if !(0.0 < eta && eta < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "power must lie in (0,1), got {eta}"
                )));
            }
            let one = Weight::one(*grid);
            let mf = maximal::dyadic_maximal(f, &one, grid)?;
            let vals: Vec<f64> = mf
                .values()
                .iter()
                .map(|&v| v.max(1e-300).powf(eta))
                .collect();
            Weight::from_values(*grid, vals)
        }
        GenKind::LogBoundedOscillation { osc, seed } => {
            if !osc.is_finite() || osc <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "oscillation must be positive, got {osc}"
                )));
            }
            let mut rng = Rng::new(seed);
            let vals = (0..grid.cell_count())
                .map(|_| (rng.range(-osc / 2.0, osc / 2.0)).exp())
                .collect();
            Weight::from_values(*grid, vals)
        }
        GenKind::ExpBmo { b, lambda } => {
            let vals = b.values().iter().map(|&v| (lambda * v).exp()).collect();
            Weight::from_values(*grid, vals)
        }
    }
}

/// A deterministic random weight from the three generator families with
/// moderate dynamic range; used by the verification suites.
pub fn random_weight(grid: &DyadicGrid, rng: &mut Rng) -> Weight {
    match rng.below(3) {
        0 => {
            let mut vals = vec![0.0; grid.cell_count()];
            let spikes = 1 + rng.below(3);
            for _ in 0..spikes {
                vals[rng.below(grid.cell_count())] = rng.range(0.5, 2.0);
            }
            let f = GridFunction::new(*grid, vals).unwrap();
            let eta = rng.range(0.3, 0.7);
            gen_weight(GenKind::CoifmanRochberg { f: &f, eta }, grid).unwrap()
        }
        1 => {
            let osc = rng.range(0.3, 1.6);
            let seed = rng.next_u64();
            gen_weight(GenKind::LogBoundedOscillation { osc, seed }, grid).unwrap()
        }
        _ => {
            let b = random_oscillation(grid, rng);
            let lambda = rng.range(-0.8, 0.8);
            gen_weight(GenKind::ExpBmo { b: &b, lambda }, grid).unwrap()
        }
    }
}

/// A bounded random function with variation at several dyadic scales, for
/// BMO-driven generators and commutator tests.
pub fn random_oscillation(grid: &DyadicGrid, rng: &mut Rng) -> GridFunction {
    let n = grid.cell_count();
    let mut vals = vec![0.0; n];
    let layers = 1 + rng.below(3);
    for _ in 0..layers {
        let block = 1 << rng.below(grid.depth() as usize + 1);
        let amp = rng.range(0.1, 0.6);
        let mut i = 0;
        while i < n {
            let v = if rng.f64() < 0.5 { amp } else { -amp };
            for cell in vals.iter_mut().skip(i).take(block) {
                *cell += v;
            }
            i += block;
        }
    }
    GridFunction::new(*grid, vals).unwrap()
}

/// A random vector weight for the given exponent configuration.
pub fn random_vector_weight(
    cfg: &ExponentConfig,
    grid: &DyadicGrid,
    rng: &mut Rng,
) -> VectorWeight {
    let weights = (0..cfg.m()).map(|_| random_weight(grid, rng)).collect();
    VectorWeight::new(weights, cfg.clone()).unwrap()
}

/// Average of `f` over the cube, against the weight measure when given;
/// divergent weight mass propagates to `+∞` under a nonzero numerator.
pub fn average(f: &GridFunction, q: &Cube, mu: Option<&Weight>) -> ExtReal {
    match mu {
        None => ExtReal::new(crate::grid::average(&f.abs(), q)),
        Some(w) => crate::grid::average_weighted(f, q, &w.masses()),
    }
}

/// `(∫ |f|^p w dx)^{1/p}` over the whole domain; quasi-norms with p below
/// one are allowed.
pub fn lp_norm(f: &GridFunction, w: &Weight, p: f64) -> ExtReal {
    crate::grid::lp_norm_mass(f, &w.masses(), p)
}

/// Weak quasi-norm: the level-set functional maximized just below each
/// attained value of |f|.
pub fn weak_lp_norm(f: &GridFunction, w: &Weight, p: f64) -> ExtReal {
    crate::grid::weak_lp_norm_mass(f, &w.masses(), p)
}

/// Textual weight specification:
/// `power:a=<real>` | `grid:<path.csv>` | `gen:cr:eta=<real>:seed=<int>` |
/// `gen:logu:osc=<real>:seed=<int>` | `gen:expbmo:lambda=<real>:seed=<int>`.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    Power { a: f64 },
    Grid { path: String },
    GenCr { eta: f64, seed: u64 },
    GenLogu { osc: f64, seed: u64 },
    GenExpBmo { lambda: f64, seed: u64 },
}

impl WeightSpec {
    pub fn parse(s: &str) -> Result<WeightSpec> {
        let bad = || Error::Parse(format!("bad weight spec {s:?}"));
        if let Some(rest) = s.strip_prefix("power:") {
            let a = rest.strip_prefix("a=").ok_or_else(bad)?;
            return Ok(WeightSpec::Power {
                a: a.parse().map_err(|_| bad())?,
            });
        }
        if let Some(path) = s.strip_prefix("grid:") {
            return Ok(WeightSpec::Grid { path: path.into() });
        }
        if let Some(rest) = s.strip_prefix("gen:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let kv = |p: &str, key: &str| -> Result<f64> {
                p.strip_prefix(key)
                    .and_then(|v| v.strip_prefix('='))
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())
            };
            match parts.as_slice() {
                ["cr", eta, seed] => {
                    return Ok(WeightSpec::GenCr {
                        eta: kv(eta, "eta")?,
                        seed: kv(seed, "seed")? as u64,
                    })
                }
                ["logu", osc, seed] => {
                    return Ok(WeightSpec::GenLogu {
                        osc: kv(osc, "osc")?,
                        seed: kv(seed, "seed")? as u64,
                    })
                }
                ["expbmo", lambda, seed] => {
                    return Ok(WeightSpec::GenExpBmo {
                        lambda: kv(lambda, "lambda")?,
                        seed: kv(seed, "seed")? as u64,
                    })
                }
                _ => return Err(bad()),
            }
        }
        Err(bad())
    }

    /// Materializes this weight specification on a grid; generator specs are deterministic in
    /// their seed.
    pub fn realize(&self, grid: &DyadicGrid) -> Result<Weight> {
        match self {
            WeightSpec::Power { a } => Weight::analytic_power(*grid, *a),
            WeightSpec::Grid { path } => {
                let f = GridFunction::load_csv(*grid, Path::new(path))?;
                Weight::from_grid_function(&f)
            }
            WeightSpec::GenCr { eta, seed } => {
                let mut rng = Rng::new(*seed);
                let mut vals = vec![0.0; grid.cell_count()];
                vals[rng.below(grid.cell_count())] = 1.0;
                let f = GridFunction::new(*grid, vals).unwrap();
                gen_weight(GenKind::CoifmanRochberg { f: &f, eta: *eta }, grid)
            }
            WeightSpec::GenLogu { osc, seed } => gen_weight(
                GenKind::LogBoundedOscillation {
                    osc: *osc,
                    seed: *seed,
                },
                grid,
            ),
            WeightSpec::GenExpBmo { lambda, seed } => {
                let mut rng = Rng::new(*seed);
                let b = random_oscillation(grid, &mut rng);
                gen_weight(
                    GenKind::ExpBmo {
                        b: &b,
                        lambda: *lambda,
                    },
                    grid,
                )
            }
        }
    }
}

/// Convenience constructor for 1D mesh-interval grids.
pub fn mesh_grid(depth: u32) -> DyadicGrid {
    DyadicGrid::line(depth, Policy::MeshIntervals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::comp_sum;
    use crate::tol;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn cfg(p: &[(i128, i128)], r: &[(i128, i128)]) -> ExponentConfig {
        ExponentConfig::new(
            p.iter().map(|&(n, d)| q(n, d)).collect(),
            r.iter().map(|&(n, d)| q(n, d)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn analytic_moments_match_closed_forms() {
        let g = mesh_grid(6);
        // integral of x^{-1/2} over [0,1) is 2.
        let w = Weight::analytic_power(g, 0.5).unwrap();
        let total = MassTable::build(&w).mass(&g.root());
        assert!((total.raw() - 2.0).abs() < 1e-12);
        // x^{-1} is not integrable at the origin.
        let w = Weight::analytic_power(g, 1.0).unwrap();
        assert!(w.cell_mass(0).is_infinite());
        assert!(MassTable::build(&w).mass(&g.root()).is_infinite());
        // away from the origin the log moment is exact.
        let q = Cube {
            lo: [16, 0],
            hi: [32, 1],
        };
        let m = MassTable::build(&w).mass(&q);
        assert!((m.raw() - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ess_bounds_of_monotone_density() {
        // |x|^{-1/2} on [1/4, 1/2): sup 2 at the left edge, inf sqrt(2).
        let g = mesh_grid(4);
        let w = Weight::analytic_power(g, 0.5).unwrap();
        let q = Cube {
            lo: [4, 0],
            hi: [8, 1],
        };
        assert!((w.ess_sup(&q).raw() - 2.0).abs() < 1e-12);
        assert!((w.ess_inf(&q) - 2.0f64.sqrt()).abs() < 1e-12);
        let c = Weight::constant(g, 3.0).unwrap();
        assert_eq!(c.ess_sup(&g.root()).raw(), 3.0);
        assert_eq!(c.ess_inf(&g.root()), 3.0);
    }

    #[test]
    fn weighted_norms_reference_values() {
        let g = mesh_grid(5);
        // Against the half-power density, the norm of the unit function at
        // p = 1 is the total mass 2.
        let one_fn = GridFunction::constant(g, 1.0);
        let w = Weight::analytic_power(g, 0.5).unwrap();
        assert!((lp_norm(&one_fn, &w, 1.0).raw() - 2.0).abs() < 1e-12);
        // Weighted average with density 2 on the left half, 1 on the right.
        let mut vals = vec![1.0; g.cell_count()];
        for v in vals.iter_mut().take(g.cell_count() / 2) {
            *v = 2.0;
        }
        let mu = Weight::from_values(g, vals).unwrap();
        let half: Vec<usize> = (0..g.cell_count() / 2).collect();
        let f = GridFunction::indicator(g, &half);
        let a = average(&f, &g.root(), Some(&mu));
        assert!((a.raw() - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(average(&f, &g.root(), None).raw(), 0.5);
        // Weak norm stays below the strong norm against analytic masses too.
        let weak = weak_lp_norm(&f, &w, 1.5).raw();
        let strong = lp_norm(&f, &w, 1.5).raw();
        assert!(weak <= strong * (1.0 + 1e-12));
    }

    #[test]
    fn strictness_witness_against_componentwise_membership() {
        // The pair (|x|^{-1}, 1) is a member of the vector class while its
        // first component alone fails the scalar class: its average near
        // the origin diverges.
        let g = mesh_grid(7);
        let w1 = Weight::analytic_power(g, 1.0).unwrap();
        let scalar = scalar_constant(&w1, &ScalarClass::Ap { p: q(1, 1) }, None, &g).unwrap();
        assert!(scalar.is_infinite());
        let c = cfg(&[(1, 1), (1, 1)], &[(1, 1), (1, 1), (1, 1)]);
        let wv = VectorWeight::new(vec![w1, Weight::one(g)], c).unwrap();
        assert!(ml_constant(&wv, &g).unwrap().is_finite());
    }

    #[test]
    fn characteristic_in_two_dimensions() {
        let g = DyadicGrid::new(2, 3, Policy::Dyadic).unwrap();
        let mut rng = Rng::new(404);
        let c = cfg(&[(3, 1), (3, 1)], &[(1, 1), (1, 1), (1, 1)]);
        for _ in 0..5 {
            let wv = random_vector_weight(&c, &g, &mut rng);
            let k = ml_constant(&wv, &g).unwrap().raw();
            assert!(k >= 1.0 - tol::REL_INEQ);
            let scaled = VectorWeight::new(
                wv.weights
                    .iter()
                    .map(|w| w.mul(&Weight::constant(g, 3.0).unwrap()))
                    .collect(),
                c.clone(),
            )
            .unwrap();
            let ks = ml_constant(&scaled, &g).unwrap().raw();
            assert!(tol::close(k, ks, tol::REL_EQ));
        }
        // Shifted enumeration dominates the plain dyadic one.
        let gs = DyadicGrid::new(2, 3, Policy::ShiftedDyadic).unwrap();
        let wv = random_vector_weight(&c, &g, &mut rng);
        let kd = ml_constant(&wv, &g).unwrap().raw();
        let ks = ml_constant(&wv, &gs).unwrap().raw();
        assert!(kd <= ks * (1.0 + tol::REL_EQ));
    }

    #[test]
    fn enumeration_monotonicity_of_suprema() {
        // The dyadic family is a sub-family of the mesh intervals, so any
        // characteristic over the former is dominated by the latter.
        let gd = DyadicGrid::line(5, Policy::Dyadic);
        let gm = mesh_grid(5);
        let mut rng = Rng::new(909);
        let c = cfg(&[(3, 1), (3, 1)], &[(1, 1), (1, 1), (1, 1)]);
        for _ in 0..10 {
            let wv = random_vector_weight(&c, &gd, &mut rng);
            let kd = ml_constant(&wv, &gd).unwrap().raw();
            let km = ml_constant(&wv, &gm).unwrap().raw();
            assert!(kd <= km * (1.0 + tol::REL_EQ), "{kd} > {km}");
        }
    }

    #[test]
    fn product_and_power_compose_exactly() {
        let g = mesh_grid(5);
        let a = Weight::analytic_power(g, 1.0).unwrap();
        let b = Weight::one(g);
        let v = VectorWeight::new(
            vec![a, b],
            cfg(&[(1, 1), (1, 1)], &[(1, 1), (1, 1), (1, 1)]),
        )
        .unwrap();
        let w = product_weight(&v);
        // (|x|^{-1})^{1/2} * 1^{1/2} = |x|^{-1/2}.
        assert!((w.exponent() - (-0.5)).abs() < 1e-15);

        let c1 = Weight::constant(g, 2.0).unwrap();
        let c2 = Weight::constant(g, 8.0).unwrap();
        let v = VectorWeight::new(
            vec![c1, c2],
            cfg(&[(3, 1), (3, 1)], &[(1, 1), (1, 1), (1, 1)]),
        )
        .unwrap();
        let w = product_weight(&v);
        // p = 3/2: w = 2^{1/2} * 8^{1/2} = 4.
        let m = w.average(&g.root());
        assert!((m.raw() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_constant_trivial_and_analytic() {
        let g = mesh_grid(8);
        let one = Weight::one(g);
        for class in [
            ScalarClass::Ap { p: q(1, 1) },
            ScalarClass::Ap { p: q(2, 1) },
            ScalarClass::Apr {
                p: q(3, 2),
                r: q(1, 2),
            },
        ] {
            let c = scalar_constant(&one, &class, None, &g).unwrap();
            assert!(tol::close(c.raw(), 1.0, tol::REL_EQ));
        }
        // The half-power density has Muckenhoupt-1 constant exactly 2 over
        // intervals anchored at the origin: avg = 2/(sqrt(x0)+sqrt(x1)) and
        // the reciprocal's esssup is sqrt(x1).
        let v = Weight::analytic_power(g, 0.5).unwrap();
        let c = scalar_constant(&v, &ScalarClass::Ap { p: q(1, 1) }, None, &g).unwrap();
        assert!(tol::close(c.raw(), 2.0, 1e-9), "got {c}");
    }

    #[test]
    fn scalar_identity_between_classes() {
        // [v]_{A_{p,r}(mu)} = [v^r]_{A_{1+r/p'}(mu)} for random weights,
        // measures and rational exponents.
        let g = mesh_grid(5);
        let mut rng = Rng::new(2024);
        for trial in 0..50 {
            let v = random_weight(&g, &mut rng);
            let mu = random_weight(&g, &mut rng);
            let p = q(1 + rng.below(4) as i128, 1 + rng.below(2) as i128).max(q(1, 1));
            let r = q(1 + rng.below(5) as i128, 1 + rng.below(3) as i128);
            let lhs = scalar_constant(&v, &ScalarClass::Apr { p, r }, Some(&mu), &g).unwrap();
            let qq = Rational::one() + r / p.conjugate();
            let rhs = scalar_constant(
                &v.pow(r.to_f64()),
                &ScalarClass::Ap { p: qq },
                Some(&mu),
                &g,
            )
            .unwrap();
            assert!(
                tol::close(lhs.raw(), rhs.raw(), tol::REL_EQ),
                "trial {trial}: {lhs} vs {rhs} at p={p}, r={r}"
            );
        }
    }

    #[test]
    fn ml_constant_trivial_and_reference_pairs() {
        let g = mesh_grid(8);
        let c = cfg(&[(1, 1), (1, 1)], &[(1, 1), (1, 1), (1, 1)]);
        let ones = VectorWeight::new(vec![Weight::one(g), Weight::one(g)], c.clone()).unwrap();
        let k = ml_constant(&ones, &g).unwrap();
        assert!(tol::close(k.raw(), 1.0, tol::REL_EQ));

        // (|x|^{-1}, 1) is a member; the anchored-interval quantity is 4.
        let w1 = Weight::analytic_power(g, 1.0).unwrap();
        let w2 = Weight::one(g);
        let v = VectorWeight::new(vec![w1.clone(), w2], c.clone()).unwrap();
        let k = ml_constant(&v, &g).unwrap();
        assert!(k.is_finite());
        assert!(tol::close(k.raw(), 4.0, 1e-9), "got {k}");

        // (|x|^{-1}, |x|^{-1}) is not: the product density diverges.
        let v = VectorWeight::new(vec![w1.clone(), w1], c).unwrap();
        assert!(ml_constant(&v, &g).unwrap().is_infinite());
    }

    #[test]
    fn ml_constant_normalized_and_scale_invariant() {
        let g = mesh_grid(5);
        let mut rng = Rng::new(7);
        let c = cfg(&[(3, 1), (3, 1)], &[(1, 1), (1, 1), (1, 1)]);
        for _ in 0..20 {
            let v = random_vector_weight(&c, &g, &mut rng);
            let k = ml_constant(&v, &g).unwrap().raw();
            assert!(k >= 1.0 - tol::REL_INEQ, "constant {k} below one");
            let scaled = VectorWeight::new(
                v.weights
                    .iter()
                    .map(|w| w.mul(&Weight::constant(g, rng.range(0.2, 5.0)).unwrap()))
                    .collect(),
                v.cfg.clone(),
            )
            .unwrap();
            let ks = ml_constant(&scaled, &g).unwrap().raw();
            assert!(tol::close(k, ks, tol::REL_EQ), "{k} vs {ks}");
        }
    }

    #[test]
    fn ml_constant_rejects_bad_order() {
        let g = mesh_grid(4);
        let c =
            ExponentConfig::new(vec![q(1, 1), q(1, 1)], vec![q(2, 1), q(2, 1), q(2, 1)]).unwrap();
        let v = VectorWeight::new(vec![Weight::one(g), Weight::one(g)], c).unwrap();
        assert!(ml_constant(&v, &g).is_err());
    }

    #[test]
    fn product_inclusion_bound() {
        // Componentwise members give a vector constant at most the product
        // of the scalar constants to the 1/p_i.
        let g = mesh_grid(5);
        let mut rng = Rng::new(11);
        let c = cfg(&[(3, 1), (3, 1)], &[(1, 1), (1, 1), (1, 1)]);
        for _ in 0..15 {
            let v = random_vector_weight(&c, &g, &mut rng);
            let k = ml_constant(&v, &g).unwrap().raw();
            let mut bound = 1.0;
            for (wi, pi) in v.weights.iter().zip(v.cfg.p.iter()) {
                let ci = scalar_constant(wi, &ScalarClass::Ap { p: *pi }, None, &g)
                    .unwrap()
                    .raw();
                bound *= ci.powf(pi.recip().to_f64());
            }
            assert!(
                tol::leq_slack(k, bound, tol::REL_INEQ),
                "vector {k} above product bound {bound}"
            );
        }
    }

    #[test]
    fn three_weight_characterization_at_the_endpoint() {
        // At p = (1,1): membership of the pair is equivalent to the three
        // square-root weights lying in the Muckenhoupt-1 class, over the same
        // cube enumeration.
        let g = mesh_grid(7);
        let c = cfg(&[(1, 1), (1, 1)], &[(1, 1), (1, 1), (1, 1)]);
        let cases = [
            (0.8, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.6, 0.6),
            (-0.5, 0.5),
            (1.6, 0.0),
            (1.2, 0.9),
        ];
        for (a, b) in cases {
            let w1 = Weight::analytic_power(g, a).unwrap();
            let w2 = Weight::analytic_power(g, b).unwrap();
            let v = VectorWeight::new(vec![w1.clone(), w2.clone()], c.clone()).unwrap();
            let direct = ml_constant(&v, &g).unwrap().is_finite();
            let a1 = |w: &Weight| {
                scalar_constant(&w.pow(0.5), &ScalarClass::Ap { p: q(1, 1) }, None, &g)
                    .unwrap()
                    .is_finite()
            };
            let three = a1(&w1) && a1(&w2) && a1(&w1.mul(&w2));
            assert_eq!(direct, three, "disagree at powers ({a}, {b})");
        }
    }

    #[test]
    fn scalar_nesting_monotonicity() {
        let g = mesh_grid(5);
        let mut rng = Rng::new(77);
        for _ in 0..10 {
            let v = random_weight(&g, &mut rng);
            let mu = random_weight(&g, &mut rng);
            let c1 = scalar_constant(&v, &ScalarClass::Ap { p: q(3, 2) }, Some(&mu), &g)
                .unwrap()
                .raw();
            let c2 = scalar_constant(&v, &ScalarClass::Ap { p: q(2, 1) }, Some(&mu), &g)
                .unwrap()
                .raw();
            let c3 = scalar_constant(&v, &ScalarClass::Ap { p: q(3, 1) }, Some(&mu), &g)
                .unwrap()
                .raw();
            assert!(c2 <= c1 * (1.0 + tol::REL_INEQ));
            assert!(c3 <= c2 * (1.0 + tol::REL_INEQ));
        }
    }

    #[test]
    fn coifman_rochberg_constant_is_depth_stable() {
        // Maximal function of a point mass raised to the 1/2: finite
        // Muckenhoupt-1 constant, stable under refinement.
        let mut prev: Option<f64> = None;
        for depth in [8u32, 10, 12, 14] {
            let g = DyadicGrid::line(depth, Policy::Dyadic);
            let mut vals = vec![0.0; g.cell_count()];
            vals[0] = 1.0;
            let f = GridFunction::new(g, vals).unwrap();
            let w = gen_weight(GenKind::CoifmanRochberg { f: &f, eta: 0.5 }, &g).unwrap();
            let c = scalar_constant(&w, &ScalarClass::Ap { p: q(1, 1) }, None, &g)
                .unwrap()
                .raw();
            assert!(c.is_finite());
            if let Some(p) = prev {
                assert!((c / p - 1.0).abs() < 0.10, "depth {depth}: {p} -> {c}");
            }
            prev = Some(c);
        }
    }

    #[test]
    fn expbmo_of_zero_is_the_unit_weight() {
        let g = mesh_grid(4);
        let b = GridFunction::constant(g, 0.0);
        let w = gen_weight(GenKind::ExpBmo { b: &b, lambda: 3.0 }, &g).unwrap();
        assert!(w.approx_eq(&Weight::one(g), 1e-15));
    }

    #[test]
    fn weight_spec_roundtrip() {
        let cases = [
            ("power:a=0.5", WeightSpec::Power { a: 0.5 }),
            (
                "gen:cr:eta=0.5:seed=3",
                WeightSpec::GenCr { eta: 0.5, seed: 3 },
            ),
            (
                "gen:logu:osc=1.0:seed=9",
                WeightSpec::GenLogu { osc: 1.0, seed: 9 },
            ),
            (
                "gen:expbmo:lambda=0.3:seed=4",
                WeightSpec::GenExpBmo {
                    lambda: 0.3,
                    seed: 4,
                },
            ),
        ];
        for (s, expect) in &cases {
            assert_eq!(WeightSpec::parse(s).unwrap(), *expect);
        }
        assert!(WeightSpec::parse("nope:1").is_err());
        let g = mesh_grid(4);
        for (s, _) in &cases {
            let w = WeightSpec::parse(s).unwrap().realize(&g).unwrap();
            assert!(w.ess_inf(&g.root()) > 0.0);
        }
    }

    #[test]
    fn mass_table_matches_direct_sums_2d() {
        let g = DyadicGrid::new(2, 3, Policy::Dyadic).unwrap();
        let mut rng = Rng::new(5);
        let w = random_weight(&g, &mut rng);
        let t = MassTable::build(&w);
        for q in g.cubes() {
            let direct = comp_sum(q.cells(&g).map(|c| w.cell_mass(c).raw()));
            assert!(tol::close(t.mass(&q).raw(), direct, 1e-12));
        }
    }

    #[test]
    fn sup_table_matches_direct_max() {
        let g = mesh_grid(5);
        let mut rng = Rng::new(6);
        let w = random_weight(&g, &mut rng);
        let t = SupTable::for_weight(&w);
        for q in g.cubes() {
            let direct = q
                .cells(&g)
                .map(|c| w.cell_sup(c).raw())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(t.max(&q).raw(), direct);
        }
    }
}
