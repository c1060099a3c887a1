use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::cauchy_truncated;
use crate::plane::{ComplexAtomicMeasure, Point, Square};

/// Evaluates the localization identity
/// `C(g nu)(xi) = C nu(xi) g(xi) + (1/pi) int C nu(z) dbar-g(z) / (z - xi) dA(z)`
/// by midpoint quadrature of the right-hand side over `support` (the bump's
/// support square), and returns the max modulus over the sample points `xi`.
///
/// `dbar-g = (d/dx + i d/dy) g / 2` is taken by central differences with step
/// a quarter cell, so any C^1 bump closure works. The transform under the
/// integral is truncated at one cell to keep quadrature nodes that land next
/// to an atom from dominating the sum.
pub fn vitushkin_localize(
    nu0: &ComplexAtomicMeasure,
    bump: &dyn Fn(Point) -> f64,
    support: Square,
    cells_across: usize,
    xi_samples: &[Point],
) -> Result<f64> {
    if cells_across < 8 {
        return Err(Error::invalid(
            "quadrature grid too coarse: need at least 8 cells across the support",
        ));
    }
    if xi_samples.is_empty() {
        return Err(Error::invalid("need at least one evaluation point"));
    }
    let cell = support.side / cells_across as f64;
    let step = cell / 4.0;
    let area = cell * cell;
    let lo = support.corner_lo();
    // precompute C nu0(z) * dbar-g(z) * dA per quadrature cell
    let mut nodes: Vec<(Point, Complex64)> = Vec::new();
    for j in 0..cells_across {
        for i in 0..cells_across {
            let z = Point::new(
                lo.x + (i as f64 + 0.5) * cell,
                lo.y + (j as f64 + 0.5) * cell,
            );
            let gx = (bump(Point::new(z.x + step, z.y)) - bump(Point::new(z.x - step, z.y)))
                / (2.0 * step);
            let gy = (bump(Point::new(z.x, z.y + step)) - bump(Point::new(z.x, z.y - step)))
                / (2.0 * step);
            let dbar = Complex64::new(gx, gy) * 0.5;
            if dbar.norm() == 0.0 {
                continue;
            }
            let c = cauchy_truncated(nu0, z, cell)?;
            nodes.push((z, c * dbar * area));
        }
    }
    let mut best = 0.0f64;
    for &xi in xi_samples {
        let mut value = cauchy_truncated(nu0, xi, cell)? * bump(xi);
        for &(z, term) in &nodes {
            let dz = Complex64::new(z.x - xi.x, z.y - xi.y);
            value += term / dz / std::f64::consts::PI;
        }
        best = best.max(value.norm());
    }
    Ok(best)
}
