//! Sparse families of dyadic cubes, sparse operators and forms, dual
//! weights at natural exponents, and the duality chain that bounds a sparse
//! form by weighted norms with a fully explicit constant.

use crate::exponents::natural_exponents;
use crate::extreal::ExtReal;
use crate::grid::{Cube, DyadicGrid, GridFunction};
use crate::maximal::dyadic_maximal_ratio;
use crate::rational::Rational;
use crate::rng::Rng;
use crate::tol;
use crate::verify::Check;
use crate::weights::{ml_constant, product_weight, MassTable, VectorWeight, Weight};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A collection of dyadic cubes, each owning a distinguished cell set that
/// occupies more than a `zeta` fraction of the cube, all sets pairwise
/// disjoint.
#[derive(Clone, Debug)]
pub struct SparseFamily {
    grid: DyadicGrid,
    cubes: Vec<Cube>,
    e_sets: Vec<Vec<usize>>,
    zeta: Rational,
}

/// Serialization record: one dyadic cube with its distinguished cells and
/// the family's sparsity constant. A family serializes as a plain list of
/// these records.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseCubeRecord {
    pub level: u32,
    pub index: Vec<usize>,
    pub e_cells: Vec<usize>,
    pub zeta: Rational,
}

pub type SparseFamilyRecord = Vec<SparseCubeRecord>;

impl SparseFamily {
    pub fn new(
        grid: DyadicGrid,
        cubes: Vec<Cube>,
        e_sets: Vec<Vec<usize>>,
        zeta: Rational,
    ) -> Result<Self> {
        if cubes.len() != e_sets.len() {
            return Err(Error::DimensionMismatch(
                "one distinguished set per cube required".into(),
            ));
        }
        if !zeta.is_positive() || zeta >= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "sparsity constant must lie in (0,1), got {zeta}"
            )));
        }
        Ok(SparseFamily {
            grid,
            cubes,
            e_sets,
            zeta,
        })
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn e_sets(&self) -> &[Vec<usize>] {
        &self.e_sets
    }

    pub fn zeta(&self) -> Rational {
        self.zeta
    }

    /// Exact check of both defining invariants: each distinguished set fills
    /// more than a zeta fraction of its cube, and the sets are pairwise
    /// disjoint (and contained in their cubes).
    pub fn is_sparse(&self) -> bool {
        let mut owned = vec![false; self.grid.cell_count()];
        for (q, e) in self.cubes.iter().zip(self.e_sets.iter()) {
            let cells_q = q.cell_count(&self.grid) as i128;
            if Rational::new(e.len() as i128, cells_q) <= self.zeta {
                return false;
            }
            for &c in e {
                if !q.contains_cell(&self.grid, c) || owned[c] {
                    return false;
                }
                owned[c] = true;
            }
        }
        true
    }

    pub fn to_record(&self) -> Result<SparseFamilyRecord> {
        let mut cubes = Vec::with_capacity(self.cubes.len());
        for (q, e) in self.cubes.iter().zip(self.e_sets.iter()) {
            let w = q.hi[0] - q.lo[0];
            if !w.is_power_of_two()
                || q.lo[0] % w != 0
                || (self.grid.dim() == 2 && (q.hi[1] - q.lo[1] != w || q.lo[1] % w != 0))
            {
                return Err(Error::InvalidParameter(
                    "only dyadic cubes serialize to records".into(),
                ));
            }
            let level = self.grid.depth() - w.trailing_zeros();
            let mut index = vec![q.lo[0] / w];
            if self.grid.dim() == 2 {
                index.push(q.lo[1] / w);
            }
            cubes.push(SparseCubeRecord {
                level,
                index,
                e_cells: e.clone(),
                zeta: self.zeta,
            });
        }
        Ok(cubes)
    }

    pub fn from_record(rec: &SparseFamilyRecord, grid: DyadicGrid) -> Result<SparseFamily> {
        let zeta = rec
            .first()
            .map(|c| c.zeta)
            .ok_or_else(|| Error::Parse("empty family record".into()))?;
        if rec.iter().any(|c| c.zeta != zeta) {
            return Err(Error::Parse(
                "sparsity constant differs between cube records".into(),
            ));
        }
        let mut cubes = Vec::with_capacity(rec.len());
        let mut e_sets = Vec::with_capacity(rec.len());
        for c in rec {
            if c.level > grid.depth() {
                return Err(Error::InvalidParameter("cube level beyond depth".into()));
            }
            let idx = [
                *c.index
                    .first()
                    .ok_or_else(|| Error::Parse("cube record missing an index".into()))?,
                c.index.get(1).copied().unwrap_or(0),
            ];
            if idx.iter().take(grid.dim()).any(|&i| i >= 1 << c.level) {
                return Err(Error::InvalidParameter(
                    "cube index out of range for its level".into(),
                ));
            }
            cubes.push(grid.dyadic_cube(c.level, idx));
            e_sets.push(c.e_cells.clone());
        }
        SparseFamily::new(grid, cubes, e_sets, zeta)
    }
}

/// Draws a random sparse family with the requested constant: cubes are
/// visited top-down and claim just over a zeta fraction of still-free cells
/// when possible. Deterministic per seed; the output always validates.
pub fn random_sparse(grid: &DyadicGrid, zeta: Rational, seed: u64) -> Result<SparseFamily> {
    if !zeta.is_positive() || zeta >= Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "sparsity constant must lie in (0,1), got {zeta}"
        )));
    }
    let mut rng = Rng::new(seed);
    let mut free = vec![true; grid.cell_count()];
    let mut cubes = Vec::new();
    let mut e_sets = Vec::new();
    for q in grid.dyadic_cubes() {
        let cells: Vec<usize> = q.cells(grid).collect();
        // Smallest count strictly above the zeta fraction.
        let needed = (zeta * Rational::int(cells.len() as i128)).floor_plus_one();
        let mut avail: Vec<usize> = cells.iter().copied().filter(|&c| free[c]).collect();
        if avail.len() < needed {
            continue;
        }
        let is_root = q == grid.root();
        if !is_root && rng.f64() > 0.7 {
            continue;
        }
        rng.shuffle(&mut avail);
        let take: Vec<usize> = avail[..needed].to_vec();
        for &c in &take {
            free[c] = false;
        }
        cubes.push(q);
        e_sets.push(take);
    }
    let fam = SparseFamily::new(*grid, cubes, e_sets, zeta)?;
    debug_assert!(fam.is_sparse());
    Ok(fam)
}

trait FloorPlusOne {
    fn floor_plus_one(self) -> usize;
}

impl FloorPlusOne for Rational {
    fn floor_plus_one(self) -> usize {
        (self.numer().div_euclid(self.denom()) + 1) as usize
    }
}

/// Stopping-time family: starting from the root, selects maximal dyadic
/// cubes where the product of averages exceeds `lambda` times the value at
/// the most recent selected ancestor; each selected cube keeps the cells its
/// selected children do not claim. Reports the achieved sparsity.
pub fn cz_sparse(fs: &[GridFunction], grid: &DyadicGrid, lambda: f64) -> Result<SparseFamily> {
    if lambda <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "stopping threshold must exceed 1, got {lambda}"
        )));
    }
    if fs.is_empty() {
        return Err(Error::InvalidParameter("need at least one function".into()));
    }
    let masses: Vec<Vec<f64>> = fs
        .iter()
        .map(|f| {
            f.values()
                .iter()
                .map(|v| v.abs() * grid.cell_volume())
                .collect()
        })
        .collect();
    let prod_avg = |q: &Cube| -> f64 {
        let vol = q.volume(grid);
        masses
            .iter()
            .map(|m| q.cells(grid).map(|c| m[c]).sum::<f64>() / vol)
            .product()
    };
    let children = |q: &Cube| -> Vec<Cube> {
        let w = q.hi[0] - q.lo[0];
        if w == 1 && (grid.dim() == 1 || q.hi[1] - q.lo[1] == 1) {
            return Vec::new();
        }
        let half = w / 2;
        let mut out = Vec::new();
        if grid.dim() == 1 {
            for k in 0..2 {
                let lo = q.lo[0] + k * half;
                out.push(Cube {
                    lo: [lo, 0],
                    hi: [lo + half, 1],
                });
            }
        } else {
            for ky in 0..2 {
                for kx in 0..2 {
                    let lo = [q.lo[0] + kx * half, q.lo[1] + ky * half];
                    out.push(Cube {
                        lo,
                        hi: [lo[0] + half, lo[1] + half],
                    });
                }
            }
        }
        out
    };

    let mut cubes = Vec::new();
    let mut e_sets = Vec::new();
    let mut min_ratio = Rational::one();
    // (selected cube, its stopping value)
    let mut agenda = vec![(grid.root(), prod_avg(&grid.root()))];
    while let Some((q, val)) = agenda.pop() {
        // Maximal strict descendants exceeding lambda * val.
        let mut selected = Vec::new();
        let mut scan: Vec<Cube> = children(&q);
        while let Some(c) = scan.pop() {
            let v = prod_avg(&c);
            if v > lambda * val && val >= 0.0 {
                selected.push((c, v));
            } else {
                scan.extend(children(&c));
            }
        }
        let mut taken = vec![false; q.cell_count(grid)];
        let base = (q.lo[0], q.lo[1], q.hi[0] - q.lo[0]);
        let local = |cell_x: usize, cell_y: usize| (cell_y - base.1) * base.2 + (cell_x - base.0);
        for (c, _) in &selected {
            for y in c.lo[1]..c.hi[1] {
                for x in c.lo[0]..c.hi[0] {
                    taken[local(x, if grid.dim() == 1 { base.1 } else { y })] = true;
                }
            }
        }
        let mut e = Vec::new();
        for y in q.lo[1]..q.hi[1] {
            for x in q.lo[0]..q.hi[0] {
                if !taken[local(x, if grid.dim() == 1 { q.lo[1] } else { y })] {
                    e.push(if grid.dim() == 1 {
                        x
                    } else {
                        y * grid.side() + x
                    });
                }
            }
        }
        min_ratio = min_ratio.min(Rational::new(e.len() as i128, q.cell_count(grid) as i128));
        cubes.push(q);
        e_sets.push(e);
        agenda.extend(selected);
    }
    // Strictly below the worst ratio by half a finest cell.
    let half_cell = Rational::new(1, 2 * grid.cell_count() as i128);
    let zeta = (min_ratio - half_cell).max(half_cell);
    let fam = SparseFamily::new(*grid, cubes, e_sets, zeta)?;
    debug_assert!(fam.is_sparse());
    Ok(fam)
}

/// The sparse operator: at each cell, the sum over cubes containing it of
/// the product of plain averages of |f_i|.
pub fn sparse_operator(s: &SparseFamily, fs: &[GridFunction]) -> Result<GridFunction> {
    let grid = &s.grid;
    for f in fs {
        if f.grid() != grid {
            return Err(Error::DimensionMismatch(
                "functions must share the grid".into(),
            ));
        }
    }
    let mut out = vec![0.0f64; grid.cell_count()];
    for q in &s.cubes {
        let vol = q.volume(grid);
        let mut prod = 1.0;
        for f in fs {
            prod *=
                q.cells(grid).map(|c| f.values()[c].abs()).sum::<f64>() * grid.cell_volume() / vol;
        }
        for c in q.cells(grid) {
            out[c] += prod;
        }
    }
    GridFunction::new(*grid, out)
}

/// The sparse form with exponent vector `r` (length m+1, entries >= 1,
/// reciprocal sum above one):
/// `Σ_Q |Q| (avg |h|^{r_{m+1}})^{1/r_{m+1}} Π (avg |f_i|^{r_i})^{1/r_i}`.
pub fn sparse_form(
    s: &SparseFamily,
    r: &[Rational],
    fs: &[GridFunction],
    h: &GridFunction,
) -> Result<f64> {
    if r.len() != fs.len() + 1 {
        return Err(Error::DimensionMismatch(
            "exponent vector must have one more entry than the input tuple".into(),
        ));
    }
    let inv_sum: Rational = r.iter().fold(Rational::zero(), |a, x| a + x.recip());
    if r.iter().any(|x| *x < Rational::one()) || inv_sum <= Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "form exponents need r_i >= 1 with reciprocals summing above 1, got {r:?}"
        )));
    }
    let grid = &s.grid;
    let all: Vec<&GridFunction> = fs.iter().chain(std::iter::once(h)).collect();
    let mut total = 0.0;
    for q in &s.cubes {
        let vol = q.volume(grid);
        let mut prod = vol;
        for (f, ri) in all.iter().zip(r.iter()) {
            let rf = ri.to_f64();
            let avg = q
                .cells(grid)
                .map(|c| f.values()[c].abs().powf(rf))
                .sum::<f64>()
                * grid.cell_volume()
                / vol;
            prod *= avg.powf(1.0 / rf);
        }
        total += prod;
    }
    Ok(total)
}

/// The dual weights at natural exponents, whose power product is
/// identically one and whose cube averages recover the characteristic.
#[derive(Clone, Debug)]
pub struct DualWeightSet {
    pub sigma: Vec<Weight>,
}

/// Requires the configuration to sit at the natural exponents of its `r`.
fn require_natural(wv: &VectorWeight) -> Result<(Rational, Rational)> {
    let (p_nat, p_total) = natural_exponents(&wv.cfg.r)?;
    if wv.cfg.p != p_nat {
        return Err(Error::InvalidParameter(format!(
            "dual weights need the natural exponents {:?}, got {:?}",
            p_nat, wv.cfg.p
        )));
    }
    let rbar = wv.cfg.inv_rbar().recip();
    Ok((rbar, p_total))
}

/// Builds the dual weights and verifies the two identities: the power
/// product is one cellwise, and on every cube the product of dual averages
/// matches the characteristic quantity raised to 1/(1-r).
pub fn dual_weights(wv: &VectorWeight, grid: &DyadicGrid) -> Result<(DualWeightSet, Vec<Check>)> {
    let (rbar, _) = require_natural(wv)?;
    let one = Rational::one();
    let exp_comp = -(rbar / (one - rbar)).to_f64();
    let mut sigma: Vec<Weight> = wv.weights.iter().map(|w| w.pow(exp_comp)).collect();
    let w = product_weight(wv);
    let p = wv.cfg.p_total();
    let exp_dual = ((p.conjugate() - one) * rbar / (one - rbar)).to_f64();
    sigma.push(w.pow(exp_dual));

    let mut checks = Vec::new();
    // Power product is identically one.
    let mut prod = Weight::one(*grid);
    for (s, ri) in sigma.iter().zip(wv.cfg.r.iter()) {
        prod = prod.mul(&s.pow((rbar / *ri).to_f64()));
    }
    checks.push(Check::weights_eq(
        "dual_weights.unit_product",
        "power product of the dual weights is one",
        &prod,
        &Weight::one(*grid),
        tol::REL_EQ,
    ));

    // Per-cube identity against the characteristic quantity.
    let tables: Vec<MassTable> = sigma.iter().map(MassTable::build).collect();
    let char_pow = (one / (one - rbar)).to_f64();
    let mut worst: f64 = 0.0;
    let characteristic = per_cube_characteristic(wv)?;
    grid.for_each_cube(&mut |q| {
        let mut lhs = ExtReal::ONE;
        for (t, ri) in tables.iter().zip(wv.cfg.r.iter()) {
            lhs = lhs.mul(t.average(&q).powf(ri.recip().to_f64()));
        }
        let rhs = characteristic(&q).powf(char_pow);
        match (lhs.finite(), rhs.finite()) {
            (Some(l), Some(r)) => {
                let dev = (l - r).abs() / (1.0f64).max(l.abs()).max(r.abs());
                worst = worst.max(dev);
            }
            (None, None) => {}
            _ => worst = f64::INFINITY,
        }
        true
    });
    checks.push(Check::eq(
        "dual_weights.characteristic_identity",
        "dual averages recover the per-cube characteristic on every cube",
        worst,
        0.0,
        tol::REL_EQ,
    ));
    Ok((DualWeightSet { sigma }, checks))
}

/// Evaluator for the per-cube characteristic quantity, the expression whose
/// supremum over the enumeration is the vector constant.
fn per_cube_characteristic(wv: &VectorWeight) -> Result<impl Fn(&Cube) -> ExtReal> {
    let cfg = &wv.cfg;
    let d = cfg.derived()?;
    let m = cfg.m();
    let w = product_weight(wv);
    let t_dual = MassTable::build(&w.pow((d.delta[m] * cfg.inv_p_total()).to_f64()));
    let mut t_comp = Vec::with_capacity(m);
    let mut inv_deltas = Vec::with_capacity(m);
    for i in 0..m {
        let e = -(d.delta[i] / cfg.p[i]).to_f64();
        t_comp.push(MassTable::build(&wv.weights[i].pow(e)));
        inv_deltas.push(d.delta[i].recip().to_f64());
    }
    let inv_dual = d.delta[m].recip().to_f64();
    Ok(move |q: &Cube| {
        let mut prod = t_dual.average(q).powf(inv_dual);
        for (t, inv_d) in t_comp.iter().zip(inv_deltas.iter()) {
            prod = prod.mul(t.average(q).powf(*inv_d));
        }
        prod
    })
}

/// Full evaluation of the duality chain bounding the sparse form, line by
/// line, with the explicit final constant `ζ^{-1} (1-r)^{-(m+1)} K^{1/(1-r)}`.
#[derive(Clone, Debug)]
pub struct FormBoundCertificate {
    /// Value of the sparse form.
    pub lambda: f64,
    /// Exact rational prefactor `ζ^{-1} (1-r)^{-(m+1)}`.
    pub prefactor: Rational,
    /// The final constant: prefactor times the characteristic power.
    pub constant: f64,
    /// Product of the target-side norms.
    pub norm_product: f64,
    pub checks: Vec<Check>,
}

pub fn form_bound_certificate(
    s: &SparseFamily,
    wv: &VectorWeight,
    fs: &[GridFunction],
    h: &GridFunction,
    grid: &DyadicGrid,
) -> Result<FormBoundCertificate> {
    let m = wv.m();
    if fs.len() != m {
        return Err(Error::DimensionMismatch(format!("need m = {m} inputs")));
    }
    if !s.is_sparse() {
        return Err(Error::InvalidParameter(
            "family fails the sparsity check".into(),
        ));
    }
    let (rbar, _) = require_natural(wv)?;
    let one = Rational::one();
    let k = ml_constant(wv, grid)?
        .finite()
        .ok_or_else(|| Error::InfiniteConstant("characteristic diverges".into()))?;
    let k_pow = k.powf((one / (one - rbar)).to_f64());

    let (duals, mut checks) = dual_weights(wv, grid)?;
    let sigma = &duals.sigma;
    let r = &wv.cfg.r;
    let rf: Vec<f64> = r.iter().map(|x| x.to_f64()).collect();
    let all_inputs: Vec<&GridFunction> = fs.iter().chain(std::iter::once(h)).collect();

    // Exact plain masses of |f_i|^{r_i} per cell, and sigma mass tables.
    let cv = grid.cell_volume();
    let f_pow_mass: Vec<Vec<f64>> = all_inputs
        .iter()
        .zip(rf.iter())
        .map(|(f, &ri)| f.values().iter().map(|v| v.abs().powf(ri) * cv).collect())
        .collect();
    let sig_tables: Vec<MassTable> = sigma.iter().map(MassTable::build).collect();

    let lambda = sparse_form(s, r, fs, h)?;

    // Dual rewrite: insert the sigma-weighted averages; an exact identity.
    let mut line_dual = 0.0;
    // Disjointness step: the per-cube dual product is absorbed into the
    // characteristic and |Q| into |E_Q|/zeta.
    let mut line_disjoint_sum = 0.0;
    let zeta_f = s.zeta().to_f64();
    for (q, e) in s.cubes().iter().zip(s.e_sets().iter()) {
        let vol = q.volume(grid);
        let mut weighted = 1.0;
        let mut dual_avgs = 1.0;
        for i in 0..=m {
            let sig_mass = sig_tables[i].mass(q).raw();
            let num: f64 = q.cells(grid).map(|c| f_pow_mass[i][c]).sum();
            weighted *= (num / sig_mass).powf(1.0 / rf[i]);
            dual_avgs *= (sig_mass / vol).powf(1.0 / rf[i]);
        }
        line_dual += vol * weighted * dual_avgs;
        line_disjoint_sum += (e.len() as f64 * cv) * weighted;
    }
    let line_disjoint = line_disjoint_sum * k_pow / zeta_f;
    checks.push(Check::eq(
        "sparse_chain.dual_rewrite",
        "inserting dual averages leaves the form unchanged",
        lambda,
        line_dual,
        tol::REL_EQ,
    ));
    checks.push(Check::leq(
        "sparse_chain.disjointness",
        "per-cube dual products absorbed into the characteristic over disjoint sets",
        line_dual,
        line_disjoint,
    ));

    // Maximal step: pointwise domination over the disjoint sets, with the
    // unit power product of the duals inserted.
    let maximals: Vec<Vec<f64>> = (0..=m)
        .map(|i| dyadic_maximal_ratio(&f_pow_mass[i], &sig_tables[i], grid))
        .collect();
    let mut unit = Weight::one(*grid);
    for (sig, ri) in sigma.iter().zip(r.iter()) {
        unit = unit.mul(&sig.pow((rbar / *ri).to_f64()));
    }
    let mut line_maximal = 0.0;
    for cell in 0..grid.cell_count() {
        let mut prod = unit.cell_mass(cell).raw();
        for (mx, ri) in maximals.iter().zip(rf.iter()) {
            prod *= mx[cell].powf(1.0 / ri);
        }
        line_maximal += prod;
    }
    let line_maximal = line_maximal * k_pow / zeta_f;
    checks.push(Check::leq(
        "sparse_chain.maximal_domination",
        "disjoint-set sum dominated by the product of weighted maximal functions",
        line_disjoint,
        line_maximal,
    ));

    // Hölder step with exponents r_i / rbar.
    let inv_rbar = rbar.recip().to_f64();
    let max_norm = |i: usize| -> f64 {
        let mut s = 0.0;
        for (cell, m_val) in maximals[i].iter().enumerate() {
            if *m_val > 0.0 {
                s += m_val.powf(inv_rbar) * sig_tables[i].mass_cell(cell);
            }
        }
        s.powf(rbar.to_f64())
    };
    let mut line_holder = k_pow / zeta_f;
    for (i, ri) in rf.iter().enumerate() {
        line_holder *= max_norm(i).powf(1.0 / ri);
    }
    checks.push(Check::leq(
        "sparse_chain.holder",
        "integral of the maximal product split by the conjugate exponents",
        line_maximal,
        line_holder,
    ));

    // Maximal norm step: each factor loses at most (1-r)^{-1}.
    let g_norm = |i: usize| -> f64 {
        let mut s = 0.0;
        let sig_fold = MassTable::build(&sigma[i].pow(1.0 - inv_rbar));
        for (cell, f_mass) in f_pow_mass[i].iter().enumerate() {
            if *f_mass > 0.0 {
                let f_val = f_mass / cv; // |f_i|^{r_i} on the cell
                s += f_val.powf(inv_rbar) * sig_fold.mass_cell(cell);
            }
        }
        s.powf(rbar.to_f64())
    };
    let norm_bound_factor = (one - rbar).recip().to_f64();
    let mut line_norms = k_pow / zeta_f;
    for (i, ri) in rf.iter().enumerate() {
        let gn = g_norm(i);
        checks.push(Check::leq(
            format!("sparse_chain.maximal_norm_{}", i + 1),
            format!("weighted maximal operator norm bound in slot {}", i + 1),
            max_norm(i),
            norm_bound_factor * gn,
        ));
        line_norms *= gn.powf(1.0 / ri);
    }
    let m_plus_1 = (m + 1) as i32;
    let line_final_lhs = line_holder;
    let line_final_rhs = line_norms * norm_bound_factor.powi(m_plus_1);
    checks.push(Check::leq(
        "sparse_chain.maximal_norm_total",
        "all maximal norms replaced at the aggregate constant",
        line_final_lhs,
        line_final_rhs,
    ));

    // Norm rewrite: each sigma-weighted norm is a plain weighted norm of the
    // input, exactly.
    let w = product_weight(wv);
    let p = wv.cfg.p_total();
    let pc = p.conjugate();
    let mut norm_product = 1.0;
    for i in 0..m {
        let ni = crate::weights::lemma::lp_norm_weight(
            all_inputs[i],
            &wv.weights[i],
            wv.cfg.p[i].to_f64(),
        )
        .raw();
        checks.push(Check::eq(
            format!("sparse_chain.norm_rewrite_{}", i + 1),
            format!(
                "sigma-weighted norm equals the plain weighted norm in slot {}",
                i + 1
            ),
            g_norm(i).powf(1.0 / rf[i]),
            ni,
            tol::REL_EQ,
        ));
        norm_product *= ni;
    }
    let dual_weight = w.pow((one - pc).to_f64());
    let nh = crate::weights::lemma::lp_norm_weight(h, &dual_weight, pc.to_f64()).raw();
    checks.push(Check::eq(
        "sparse_chain.norm_rewrite_dual",
        "sigma-weighted norm equals the dual weighted norm in the last slot",
        g_norm(m).powf(1.0 / rf[m]),
        nh,
        tol::REL_EQ,
    ));
    norm_product *= nh;

    // Final explicit bound.
    let prefactor = zeta_inverse_times_power(s.zeta(), one - rbar, m_plus_1);
    let constant = prefactor.to_f64() * k_pow;
    checks.push(Check::leq(
        "sparse_chain.final_bound",
        "sparse form bounded by the explicit constant times the norm product",
        lambda,
        constant * norm_product,
    ));

    Ok(FormBoundCertificate {
        lambda,
        prefactor,
        constant,
        norm_product,
        checks,
    })
}

/// `zeta^{-1} * base^{-exponent}` as an exact rational.
fn zeta_inverse_times_power(zeta: Rational, base: Rational, exponent: i32) -> Rational {
    let mut acc = zeta.recip();
    for _ in 0..exponent {
        acc = acc / base;
    }
    acc
}

/// Single-cube necessity: with the dual-power test functions supported on
/// `q`, the form over the one-cube family equals `|Q| Π (avg σ_i)^{1/r_i}`,
/// and the certified bound with constant `c0` forces the dual product below
/// `c0` on the cube.
pub fn necessity_extract(
    q: &Cube,
    wv: &VectorWeight,
    c0: f64,
    grid: &DyadicGrid,
) -> Result<Vec<Check>> {
    let (_, _) = require_natural(wv)?;
    let (duals, _) = dual_weights(wv, grid)?;
    let m = wv.m();
    let r = &wv.cfg.r;
    for sig in &duals.sigma {
        if sig.has_analytic_part() {
            return Err(Error::InvalidParameter(
                "necessity test functions need cell-sampled dual weights".into(),
            ));
        }
    }
    // Test functions sigma_i^{1/r_i} restricted to the cube.
    let tests: Vec<GridFunction> = duals
        .sigma
        .iter()
        .zip(r.iter())
        .map(|(sig, ri)| {
            let e = ri.recip().to_f64();
            let vals = (0..grid.cell_count())
                .map(|c| {
                    if q.contains_cell(grid, c) {
                        (sig.cell_mass(c).raw() / grid.cell_volume()).powf(e)
                    } else {
                        0.0
                    }
                })
                .collect();
            GridFunction::new(*grid, vals).unwrap()
        })
        .collect();
    let single = SparseFamily::new(
        *grid,
        vec![*q],
        vec![q.cells(grid).collect()],
        Rational::new(1, 2),
    )?;
    let lambda_single = sparse_form(&single, r, &tests[..m], &tests[m])?;

    let mut dual_product = 1.0;
    for (sig, ri) in duals.sigma.iter().zip(r.iter()) {
        dual_product *= MassTable::build(sig)
            .average(q)
            .raw()
            .powf(ri.recip().to_f64());
    }
    Ok(vec![
        Check::eq(
            "necessity.single_cube_identity",
            "one-cube form equals the cube volume times the dual product",
            lambda_single,
            q.volume(grid) * dual_product,
            tol::REL_EQ,
        ),
        Check::leq(
            "necessity.dual_product_bound",
            "dual product on the cube stays below the certificate constant",
            dual_product,
            c0,
        ),
    ])
}

/// Runs the necessity extraction on every enumerated cube and concludes
/// with the characteristic bound `[w] <= c0^{1-r}`.
pub fn necessity_sweep(wv: &VectorWeight, c0: f64, grid: &DyadicGrid) -> Result<Vec<Check>> {
    let (rbar, _) = require_natural(wv)?;
    let (duals, _) = dual_weights(wv, grid)?;
    let m = wv.m();
    let r = &wv.cfg.r;
    let sig_tables: Vec<MassTable> = duals.sigma.iter().map(MassTable::build).collect();
    let cv = grid.cell_volume();
    let mut worst_product: f64 = 0.0;
    let mut identity_dev: f64 = 0.0;
    grid.for_each_cube(&mut |q| {
        // Dual product and the independently summed one-cube form.
        let vol = q.volume(grid);
        let mut dual_product = 1.0;
        let mut lambda_single = vol;
        for i in 0..=m {
            let rf = r[i].to_f64();
            let avg_sigma = sig_tables[i].mass(&q).raw() / vol;
            dual_product *= avg_sigma.powf(1.0 / rf);
            // avg over Q of (sigma_i^{1/r_i})^{r_i} from the raw cell values.
            let avg_test: f64 = q
                .cells(grid)
                .map(|c| (sig_tables[i].mass_cell(c) / cv).powf(1.0 / rf).powf(rf))
                .sum::<f64>()
                / q.cell_count(grid) as f64;
            lambda_single *= avg_test.powf(1.0 / rf);
        }
        let scale = (1.0f64).max(lambda_single).max(vol * dual_product);
        identity_dev = identity_dev.max((lambda_single - vol * dual_product).abs() / scale);
        worst_product = worst_product.max(dual_product);
        true
    });
    let ml = ml_constant(wv, grid)?.raw();
    let concluded = c0.powf((Rational::one() - rbar).to_f64());
    Ok(vec![
        Check::eq(
            "necessity.identity_sweep",
            "single-cube identity holds on every enumerated cube",
            identity_dev.max(0.0),
            0.0,
            tol::REL_EQ,
        ),
        Check::leq(
            "necessity.product_sweep",
            "dual product below the certificate constant on every cube",
            worst_product,
            c0,
        ),
        Check::leq(
            "necessity.characteristic_bound",
            "characteristic bounded by the certificate constant to the 1-r",
            ml,
            concluded,
        ),
    ])
}
