//! Weighted dyadic maximal operator and the multi-sublinear maximal
//! function, with quantitative norm-ratio checks.

use crate::extreal::ExtReal;
use crate::grid::{DyadicGrid, GridFunction};
use crate::rng::Rng;
use crate::weights::{MassTable, Weight};
use crate::{Error, Result};

/// `M_mu f` over the dyadic tree: at each finest cell, the maximum over the
/// dyadic cubes containing it of the mu-average of |f|.
pub fn dyadic_maximal(f: &GridFunction, mu: &Weight, grid: &DyadicGrid) -> Result<GridFunction> {
    if f.grid() != grid || mu.grid() != grid {
        return Err(Error::DimensionMismatch(
            "function, weight and grid must agree".into(),
        ));
    }
    let mu_mass = MassTable::build(mu);
    let f_mu = mass_of_fdmu(f, mu);
    GridFunction::new(*grid, dyadic_maximal_ratio(&f_mu, &mu_mass, grid))
}

fn mass_of_fdmu(f: &GridFunction, mu: &Weight) -> Vec<f64> {
    f.values()
        .iter()
        .enumerate()
        .map(|(c, &v)| {
            let a = v.abs();
            if a == 0.0 {
                0.0
            } else {
                match mu.cell_mass(c).finite() {
                    Some(m) => a * m,
                    None => 0.0,
                }
            }
        })
        .collect()
}

fn sum_cells(mass: &[f64], cells: impl Iterator<Item = usize>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for i in cells {
        let x = mass[i];
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Per-cell maximum over dyadic ancestors of the ratio of a numerator cell
/// mass to a denominator cube mass: the weighted maximal function of
/// `dnum/dden` evaluated exactly from the two exact measures.
pub fn dyadic_maximal_ratio(num_cell_mass: &[f64], den: &MassTable, grid: &DyadicGrid) -> Vec<f64> {
    let mut out = vec![0.0f64; grid.cell_count()];
    let mut stack = vec![(grid.root(), 0.0f64)];
    while let Some((q, inherited)) = stack.pop() {
        let num = sum_cells(num_cell_mass, q.cells(grid));
        let avg = match den.mass(&q).finite() {
            Some(d) if d > 0.0 => num / d,
            _ => 0.0,
        };
        let best = inherited.max(avg);
        let w = q.hi[0] - q.lo[0];
        if w == 1 && (grid.dim() == 1 || q.hi[1] - q.lo[1] == 1) {
            for c in q.cells(grid) {
                out[c] = best;
            }
            continue;
        }
        let half = w / 2;
        if grid.dim() == 1 {
            for k in 0..2 {
                let lo = q.lo[0] + k * half;
                stack.push((
                    crate::grid::Cube {
                        lo: [lo, 0],
                        hi: [lo + half, 1],
                    },
                    best,
                ));
            }
        } else {
            for ky in 0..2 {
                for kx in 0..2 {
                    let lo = [q.lo[0] + kx * half, q.lo[1] + ky * half];
                    stack.push((
                        crate::grid::Cube {
                            lo,
                            hi: [lo[0] + half, lo[1] + half],
                        },
                        best,
                    ));
                }
            }
        }
    }
    out
}

/// The multi-sublinear maximal function under the grid's cube policy: at
/// each cell, the max over enumerated cubes containing it of the product of
/// the unweighted averages of |f_i|.
pub fn multilinear_maximal(fs: &[GridFunction], grid: &DyadicGrid) -> Result<GridFunction> {
    if fs.is_empty() {
        return Err(Error::InvalidParameter("need at least one function".into()));
    }
    for f in fs {
        if f.grid() != grid {
            return Err(Error::DimensionMismatch(
                "functions must share the grid".into(),
            ));
        }
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
    let mut out = vec![0.0f64; grid.cell_count()];
    grid.for_each_cube(&mut |q| {
        let vol = q.volume(grid);
        let mut prod = 1.0;
        for m in &masses {
            prod *= sum_cells(m, q.cells(grid)) / vol;
        }
        if prod > 0.0 {
            for c in q.cells(grid) {
                if prod > out[c] {
                    out[c] = prod;
                }
            }
        }
        true
    });
    GridFunction::new(*grid, out)
}

/// Outcome of a maximal-operator norm sweep.
#[derive(Clone, Debug)]
pub struct MaximalNormReport {
    pub p: f64,
    pub bound: f64,
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Checks `‖M_mu f‖_{L^p(mu)} <= p' ‖f‖_{L^p(mu)}` over random inputs and
/// reports the worst ratio.
pub fn maximal_norm_check(
    mu: &Weight,
    p: f64,
    samples: usize,
    seed: u64,
    grid: &DyadicGrid,
) -> Result<MaximalNormReport> {
    if p <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "maximal norm check needs p > 1, got {p}"
        )));
    }
    let bound = p / (p - 1.0);
    let mu_masses: Vec<ExtReal> = mu.masses();
    let mut rng = Rng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let f = GridFunction::random(*grid, &mut rng, 2.0);
        let nf = crate::grid::lp_norm_mass(&f, &mu_masses, p).raw();
        if nf == 0.0 {
            continue;
        }
        let mf = dyadic_maximal(&f, mu, grid)?;
        let nmf = crate::grid::lp_norm_mass(&mf, &mu_masses, p).raw();
        worst = worst.max(nmf / nf);
    }
    Ok(MaximalNormReport {
        p,
        bound,
        worst_ratio: worst,
        pass: worst <= bound * (1.0 + crate::tol::REL_INEQ),
    })
}
