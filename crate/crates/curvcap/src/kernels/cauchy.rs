use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plane::measure::{AtomicMeasure, ComplexAtomicMeasure};
use crate::plane::point::Point;
use crate::sum::Cascade;

#[inline]
fn kernel_term(xi: Point, z: Point, w: Complex64) -> Complex64 {
    // w / (xi - z) without a complex division
    let dx = xi.x - z.x;
    let dy = xi.y - z.y;
    let d2 = dx * dx + dy * dy;
    w * Complex64::new(dx / d2, -dy / d2)
}

fn check_pos_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("truncation epsilon must be positive"));
    }
    Ok(())
}

/// Truncated Cauchy transform `C_eps nu(z) = sum_{|xi - z| > eps} w / (xi - z)`.
pub fn cauchy_truncated(nu: &ComplexAtomicMeasure, z: Point, epsilon: f64) -> Result<Complex64> {
    check_pos_epsilon(epsilon)?;
    let e2 = epsilon * epsilon;
    let mut acc = Cascade::new();
    for &(xi, w) in nu.atoms() {
        if xi.dist2(z) > e2 {
            acc.push(kernel_term(xi, z, w));
        }
    }
    Ok(acc.finish())
}

/// [`cauchy_truncated`] for a positive measure.
pub fn cauchy_truncated_real(mu: &AtomicMeasure, z: Point, epsilon: f64) -> Result<Complex64> {
    check_pos_epsilon(epsilon)?;
    let e2 = epsilon * epsilon;
    let mut acc = Cascade::new();
    for &(xi, w) in mu.atoms() {
        if xi.dist2(z) > e2 {
            acc.push(kernel_term(xi, z, Complex64::new(w, 0.0)));
        }
    }
    Ok(acc.finish())
}

/// Maximal transform `C_* nu(z) = sup_{eps > 0} |C_eps nu(z)|`, evaluated
/// exactly: `C_eps` is piecewise constant in `eps` with breakpoints at the
/// distinct atom distances, so the sup is a max over suffix sums taken in
/// decreasing-distance order (atoms at equal distance enter together).
pub fn cauchy_maximal(nu: &ComplexAtomicMeasure, z: Point) -> f64 {
    let mut terms: Vec<(f64, Complex64)> = nu
        .atoms()
        .iter()
        .filter_map(|&(xi, w)| {
            let d2 = xi.dist2(z);
            (d2 > 0.0).then(|| (d2, kernel_term(xi, z, w)))
        })
        .collect();
    terms.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64; // empty truncation (eps beyond every atom)
    let mut running = Complex64::new(0.0, 0.0);
    let mut i = 0;
    while i < terms.len() {
        let d = terms[i].0;
        while i < terms.len() && terms[i].0 == d {
            running += terms[i].1;
            i += 1;
        }
        best = best.max(running.norm());
    }
    best
}

/// Largest breakpoint `eps` at which `|C_eps nu(z)| > alpha`, or `None` if the
/// maximal transform never exceeds `alpha`. Because `C_eps` is right-constant
/// between breakpoints, the supremum of the qualifying set is itself a
/// breakpoint distance.
pub fn cauchy_exceedance_radius(nu: &ComplexAtomicMeasure, z: Point, alpha: f64) -> Option<f64> {
    let mut terms: Vec<(f64, Complex64)> = nu
        .atoms()
        .iter()
        .filter_map(|&(xi, w)| {
            let d2 = xi.dist2(z);
            (d2 > 0.0).then(|| (d2, kernel_term(xi, z, w)))
        })
        .collect();
    terms.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut running = Complex64::new(0.0, 0.0);
    let mut i = 0;
    let mut hit: Option<f64> = None;
    while i < terms.len() {
        let d2 = terms[i].0;
        while i < terms.len() && terms[i].0 == d2 {
            running += terms[i].1;
            i += 1;
        }
        // the interval just below sqrt(d2) carries this suffix sum; scanning
        // descending means the first qualifying breakpoint is the largest
        if running.norm() > alpha {
            hit = Some(d2.sqrt());
            break;
        }
    }
    hit
}
