use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::menger::cross2;
use crate::plane::measure::AtomicMeasure;
use crate::plane::point::Point;
use crate::sum::{pairwise_sum, Cascade};

/// Curvature of a measure at truncation `epsilon`.
///
/// `total` is the triple integral of squared Menger curvature over atom
/// triples whose three pairwise distances all exceed `epsilon`, computed as
/// 6 times the sum over unordered distinct triples. `per_atom[i]` is the
/// curvature potential of atom `i` (double sum over the remaining pairs), so
/// `total = sum_i w_i * per_atom[i]` up to summation error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub epsilon: f64,
    pub total: f64,
    pub per_atom: Vec<f64>,
}

#[inline]
fn c2_from(pi: Point, pj: Point, pk: Point, d2ij: f64, d2ik: f64, d2jk: f64) -> f64 {
    let cross = cross2(pi, pj, pk);
    4.0 * cross * cross / (d2ij * d2ik * d2jk)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("curvature truncation must be >= 0"));
    }
    Ok(())
}

/// Curvature potential of every atom: `per_atom[i] = c^2_mu(x_i)` with the
/// `epsilon` truncation. Parallel over atoms; each atom's double sum runs in
/// fixed order, so results are thread-count independent.
pub fn curvature_per_atom(m: &AtomicMeasure, epsilon: f64) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    let pts: Vec<Point> = m.atoms().iter().map(|a| a.0).collect();
    let ws: Vec<f64> = m.atoms().iter().map(|a| a.1).collect();
    let e2 = epsilon * epsilon;
    let n = pts.len();
    use rayon::prelude::*;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let pi = pts[i];
            let di: Vec<f64> = pts.iter().map(|p| pi.dist2(*p)).collect();
            let mut acc = Cascade::new();
            for j in 0..n {
                if j == i || di[j] <= e2 {
                    continue;
                }
                for k in (j + 1)..n {
                    if k == i || di[k] <= e2 {
                        continue;
                    }
                    let d2jk = pts[j].dist2(pts[k]);
                    if d2jk <= e2 {
                        continue;
                    }
                    acc.push(c2_from(pi, pts[j], pts[k], di[j], di[k], d2jk) * ws[j] * ws[k]);
                }
            }
            2.0 * acc.finish()
        })
        .collect())
}

/// Full curvature report: exact triple sum plus per-atom potentials.
pub fn curvature_total(m: &AtomicMeasure, epsilon: f64) -> Result<CurvatureReport> {
    check_epsilon(epsilon)?;
    let pts: Vec<Point> = m.atoms().iter().map(|a| a.0).collect();
    let ws: Vec<f64> = m.atoms().iter().map(|a| a.1).collect();
    let e2 = epsilon * epsilon;
    let n = pts.len();
    let unordered = crate::sum::par_sum_by_index(n, |i| {
        let pi = pts[i];
        let di: Vec<f64> = pts.iter().map(|p| pi.dist2(*p)).collect();
        let mut acc = Cascade::new();
        for j in (i + 1)..n {
            if di[j] <= e2 {
                continue;
            }
            for k in (j + 1)..n {
                if di[k] <= e2 {
                    continue;
                }
                let d2jk = pts[j].dist2(pts[k]);
                if d2jk <= e2 {
                    continue;
                }
                acc.push(c2_from(pi, pts[j], pts[k], di[j], di[k], d2jk) * ws[i] * ws[j] * ws[k]);
            }
        }
        acc.finish()
    });
    Ok(CurvatureReport {
        epsilon,
        total: 6.0 * unordered,
        per_atom: curvature_per_atom(m, epsilon)?,
    })
}

/// Curvature potential `c^2_mu(x)` at an arbitrary point: double sum over atom
/// pairs, every pairwise distance (including to `x`) strictly above `epsilon`.
pub fn curvature_potential(m: &AtomicMeasure, x: Point, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(curvature_potential_unchecked(m, x, epsilon))
}

/// Validation-free variant for hot loops (raster sweeps) that have already
/// checked `epsilon`.
pub fn curvature_potential_unchecked(m: &AtomicMeasure, x: Point, epsilon: f64) -> f64 {
    let atoms = m.atoms();
    let e2 = epsilon * epsilon;
    let n = atoms.len();
    let dx: Vec<f64> = atoms.iter().map(|a| x.dist2(a.0)).collect();
    let mut acc = Cascade::new();
    for j in 0..n {
        if dx[j] <= e2 {
            continue;
        }
        for k in (j + 1)..n {
            if dx[k] <= e2 {
                continue;
            }
            let d2jk = atoms[j].0.dist2(atoms[k].0);
            if d2jk <= e2 {
                continue;
            }
            acc.push(
                c2_from(x, atoms[j].0, atoms[k].0, dx[j], dx[k], d2jk)
                    * atoms[j].1
                    * atoms[k].1,
            );
        }
    }
    2.0 * acc.finish()
}

/// CSV dump of the per-atom potentials, header `atom_index,c2_potential`.
pub fn per_atom_csv(report: &CurvatureReport) -> String {
    let mut out = String::from("atom_index,c2_potential\n");
    for (i, v) in report.per_atom.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

impl CurvatureReport {
    /// Consistency of the two summation routes.
    pub fn per_atom_total(&self, m: &AtomicMeasure) -> f64 {
        let vals: Vec<f64> = m
            .atoms()
            .iter()
            .zip(&self.per_atom)
            .map(|(&(_, w), &p)| w * p)
            .collect();
        pairwise_sum(&vals)
    }
}
