use rayon::prelude::*;

use crate::error::Result;
use crate::kernels::curvature::{curvature_potential, curvature_potential_unchecked};
use crate::kernels::maximal::maximal_radial;
use crate::plane::measure::AtomicMeasure;
use crate::plane::point::Point;

/// Curvature potential `U_mu(x) = M mu(x) + sqrt(c^2_mu(x))` at truncation
/// `epsilon`.
pub fn potential_u(m: &AtomicMeasure, x: Point, epsilon: f64) -> Result<f64> {
    Ok(maximal_radial(m, x) + curvature_potential(m, x, epsilon)?.max(0.0).sqrt())
}

/// `U_mu` at every atom, with the crate's default truncation (the measure's
/// resolution). Parallel over atoms, deterministic per atom.
pub fn potential_on_atoms(m: &AtomicMeasure, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(crate::error::Error::invalid("curvature truncation must be >= 0"));
    }
    let pts: Vec<Point> = m.atoms().iter().map(|a| a.0).collect();
    Ok(pts
        .par_iter()
        .map(|&p| {
            maximal_radial(m, p) + curvature_potential_unchecked(m, p, epsilon).max(0.0).sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_potential_is_maximal_part_only() {
        let m = AtomicMeasure::new(vec![(Point::new(0.0, 0.0), 1.0)], 0.1).unwrap();
        let u = potential_u(&m, Point::new(0.0, 0.0), 0.1).unwrap();
        assert_eq!(u, 10.0);
    }

    #[test]
    fn potential_adds_curvature_tail() {
        let m = AtomicMeasure::new(
            vec![
                (Point::new(0.0, 0.0), 1.0),
                (Point::new(1.0, 0.0), 1.0),
                (Point::new(0.5, 3f64.sqrt() / 2.0), 1.0),
            ],
            0.5,
        )
        .unwrap();
        let x = Point::new(0.0, 0.0);
        let u = potential_u(&m, x, 0.25).unwrap();
        let m_part = maximal_radial(&m, x);
        assert!((u - (m_part + 6f64.sqrt())).abs() < 1e-12);
        let on_atoms = potential_on_atoms(&m, 0.25).unwrap();
        assert!((on_atoms[0] - u).abs() < 1e-12);
    }
}
