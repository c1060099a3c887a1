use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{AtomicMeasure, DyadicLattice, DyadicSquare};
use crate::sum::pairwise_sum;

/// Result of one dyadic Carleson imbedding check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CarlesonOutcome {
    /// Best packing constant: `max_R sum_{Q inside R} a_Q / mu(R)`.
    pub c14: f64,
    /// `sum_Q a_Q |<f>_Q|^2`.
    pub lhs: f64,
    /// `4 c14 |f|^2`.
    pub rhs: f64,
    pub pass: bool,
}

/// Measures the best packing constant of the family `a_Q` and asserts the
/// imbedding inequality `sum a_Q |<f>_Q|^2 <= 4 C14 |f|^2`. Every carrier
/// square must have positive mass (averages are undefined otherwise).
pub fn carleson_check(
    mu: &AtomicMeasure,
    lattice: &DyadicLattice,
    a: &[(DyadicSquare, f64)],
    f: &[Complex64],
) -> Result<CarlesonOutcome> {
    if f.len() != mu.len() {
        return Err(Error::invalid("sample length does not match atom count"));
    }
    let mut family: HashMap<DyadicSquare, f64> = HashMap::new();
    for &(q, v) in a {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid("carleson coefficients must be nonnegative"));
        }
        *family.entry(q).or_insert(0.0) += v;
    }

    let mass_in = |q: DyadicSquare| -> f64 {
        let ws: Vec<f64> = mu
            .atoms()
            .iter()
            .filter(|&&(p, _)| lattice.square_contains(q, p))
            .map(|&(_, w)| w)
            .collect();
        pairwise_sum(&ws)
    };
    let avg_in = |q: DyadicSquare, m: f64| -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        for (&(p, w), fv) in mu.atoms().iter().zip(f) {
            if lattice.square_contains(q, p) {
                num += fv * w;
            }
        }
        num / m
    };

    // lhs, and the candidate ancestors for the packing constant
    let mut lhs_terms = Vec::with_capacity(family.len());
    let mut candidates: Vec<DyadicSquare> = Vec::new();
    let root_level = lattice.root().level;
    let mut entries: Vec<(DyadicSquare, f64)> = family.into_iter().collect();
    entries.sort_by_key(|(q, _)| (q.level, q.kx, q.ky));
    for &(q, v) in &entries {
        let m = mass_in(q);
        if !(m > 0.0) {
            return Err(Error::invalid(
                "carleson family contains a square of zero mass",
            ));
        }
        lhs_terms.push(v * avg_in(q, m).norm_sqr());
        let mut r = q;
        loop {
            candidates.push(r);
            if r.level >= root_level {
                break;
            }
            r = r.parent();
        }
    }
    candidates.sort_by_key(|q| (q.level, q.kx, q.ky));
    candidates.dedup();

    let mut c14 = 0.0f64;
    for &r in &candidates {
        let packed: f64 = entries
            .iter()
            .filter(|(q, _)| q.is_descendant_of(r))
            .map(|&(_, v)| v)
            .sum();
        let m = mass_in(r);
        if m > 0.0 {
            c14 = c14.max(packed / m);
        }
    }

    let lhs = pairwise_sum(&lhs_terms);
    let norms: Vec<f64> = f
        .iter()
        .zip(mu.atoms())
        .map(|(v, &(_, w))| v.norm_sqr() * w)
        .collect();
    let rhs = 4.0 * c14 * pairwise_sum(&norms);
    Ok(CarlesonOutcome { c14, lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9) })
}
