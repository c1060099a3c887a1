use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::partition::partition_of_unity;
use crate::plane::{AtomicMeasure, ComplexAtomicMeasure, Point, Square};

/// One constructed circle: concentric with its square, radius a tenth of the
/// local capacity estimate (clamped so the circle stays in the half-square).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CircleInfo {
    pub center: Point,
    pub radius: f64,
    pub clamped: bool,
    /// Number of discretization atoms on this circle.
    pub atoms: usize,
    /// Total complex mass assigned to this circle (the bump integral of the
    /// reference measure).
    pub nu_mass: Complex64,
    /// Constant density of the complex measure against arclength here.
    pub b: Complex64,
}

/// Arclength measure on the circles together with the complex measure that
/// redistributes the reference mass circle by circle.
#[derive(Clone, Debug)]
pub struct CircleSystem {
    pub mu: AtomicMeasure,
    pub nu: ComplexAtomicMeasure,
    pub circles: Vec<CircleInfo>,
    /// max_i |b_i| — the sup norm of the density dnu/dmu.
    pub b_max: f64,
    pub clamped_count: usize,
}

/// Minimum number of atoms per circle regardless of radius.
pub const MIN_CIRCLE_ATOMS: usize = 64;

/// Builds the circle measures: one circle per selected square, arclength
/// weights for the positive measure, and the reference measure's mass pushed
/// through the partition of unity and spread uniformly over each circle.
///
/// Mass conservation is structural: the bump integrals over all squares sum
/// to the reference total because the partition weights sum to 1 at every
/// reference atom. A reference atom outside every doubled square would leak
/// mass, so that case is an error rather than a silent drop.
pub fn build_mu_nu(
    f_squares: &[Square],
    e_atoms: &AtomicMeasure,
    nu0: &ComplexAtomicMeasure,
    gamma_estimates: &[f64],
) -> Result<CircleSystem> {
    if f_squares.is_empty() {
        return Err(Error::invalid("no squares selected"));
    }
    if gamma_estimates.len() != f_squares.len() {
        return Err(Error::invalid(
            "one capacity estimate required per square",
        ));
    }
    for (i, (sq, &g)) in f_squares.iter().zip(gamma_estimates).enumerate() {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::invalid(format!(
                "capacity estimate for square {i} must be positive"
            )));
        }
        let twoq = sq.dilate(2.0)?;
        if !e_atoms.atoms().iter().any(|&(p, _)| twoq.contains(p)) {
            return Err(Error::invalid(format!(
                "square {i} has no set atom in its 2-dilate"
            )));
        }
    }

    // Bump integral of the reference measure per square.
    let mut integrals = vec![Complex64::new(0.0, 0.0); f_squares.len()];
    for &(p, w) in nu0.atoms() {
        let weights = partition_of_unity(f_squares, p)?;
        for (acc, gi) in integrals.iter_mut().zip(&weights) {
            *acc += w * gi;
        }
    }

    let res = nu0.resolution();
    let mut circles = Vec::with_capacity(f_squares.len());
    let mut mu_atoms = Vec::new();
    let mut nu_atoms = Vec::new();
    let mut min_spacing = f64::INFINITY;
    let mut b_max = 0.0f64;
    let mut clamped_count = 0usize;
    for (sq, &g) in f_squares.iter().zip(gamma_estimates) {
        let raw = g / 10.0;
        let clamped = raw > sq.side / 2.0;
        let r = if clamped {
            clamped_count += 1;
            sq.side / 4.0
        } else {
            raw
        };
        let arclength = std::f64::consts::TAU * r;
        let n = MIN_CIRCLE_ATOMS.max((arclength / res).ceil() as usize);
        let i = circles.len();
        let nu_mass = integrals[i];
        let b = nu_mass / arclength;
        b_max = b_max.max(b.norm());
        min_spacing = min_spacing.min(2.0 * r * (std::f64::consts::PI / n as f64).sin());
        let mu_w = arclength / n as f64;
        let nu_w = nu_mass / n as f64;
        for k in 0..n {
            let theta = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
            let p = Point::new(sq.center.x + r * theta.cos(), sq.center.y + r * theta.sin());
            mu_atoms.push((p, mu_w));
            nu_atoms.push((p, nu_w));
        }
        circles.push(CircleInfo {
            center: sq.center,
            radius: r,
            clamped,
            atoms: n,
            nu_mass,
            b,
        });
    }

    let mu = AtomicMeasure::new(mu_atoms, min_spacing)?;
    let nu = ComplexAtomicMeasure::new(nu_atoms, min_spacing)?;
    Ok(CircleSystem {
        mu,
        nu,
        circles,
        b_max,
        clamped_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Square {
        Square::new(Point::new(0.0, 0.0), 1.0).unwrap()
    }

    fn point_atoms(pts: &[(f64, f64, f64)], res: f64) -> AtomicMeasure {
        AtomicMeasure::new(
            pts.iter()
                .map(|&(x, y, w)| (Point::new(x, y), w))
                .collect(),
            res,
        )
        .unwrap()
    }

    #[test]
    fn single_square_pushes_all_reference_mass_onto_its_circle() {
        let sq = unit_square();
        let e = point_atoms(&[(0.0, 0.0, 1.0)], 0.01);
        let nu0 = ComplexAtomicMeasure::new(
            vec![
                (Point::new(0.1, 0.0), Complex64::new(0.3, 0.1)),
                (Point::new(-0.2, 0.3), Complex64::new(0.2, -0.05)),
            ],
            0.01,
        )
        .unwrap();
        let sys = build_mu_nu(&[sq], &e, &nu0, &[1.0]).unwrap();
        assert_eq!(sys.circles.len(), 1);
        let c = &sys.circles[0];
        // lone bump normalizes to weight 1 at every reference atom
        assert!((c.nu_mass - nu0.total()).norm() < 1e-15);
        assert!((sys.nu.total() - nu0.total()).norm() < 1e-12);
        assert!((c.radius - 0.1).abs() < 1e-15);
        assert!(!c.clamped);
        // arclength adds back up to the circumference
        let circumference = std::f64::consts::TAU * c.radius;
        assert!((sys.mu.mass() - circumference).abs() < 1e-12);
        assert!((sys.b_max - nu0.total().norm() / circumference).abs() < 1e-12);
    }

    #[test]
    fn two_squares_conserve_mass_through_the_partition() {
        let sq1 = Square::new(Point::new(0.0, 0.0), 1.0).unwrap();
        let sq2 = Square::new(Point::new(1.0, 0.0), 1.0).unwrap();
        let e = point_atoms(&[(0.0, 0.0, 1.0), (1.0, 0.0, 1.0)], 0.01);
        // atoms in the overlap of the two doubled squares split their mass
        let nu0 = ComplexAtomicMeasure::new(
            vec![
                (Point::new(0.4, 0.1), Complex64::new(0.25, 0.0)),
                (Point::new(0.6, -0.2), Complex64::new(0.1, 0.2)),
                (Point::new(0.0, 0.0), Complex64::new(0.15, 0.0)),
                (Point::new(1.1, 0.3), Complex64::new(0.0, -0.3)),
            ],
            0.01,
        )
        .unwrap();
        let sys = build_mu_nu(&[sq1, sq2], &e, &nu0, &[0.8, 1.2]).unwrap();
        let total: Complex64 = sys.circles.iter().map(|c| c.nu_mass).sum();
        assert!((total - nu0.total()).norm() < 1e-12 * nu0.total().norm());
        assert!((sys.nu.total() - nu0.total()).norm() < 1e-10 * nu0.total().norm());
    }

    #[test]
    fn oversized_estimate_clamps_the_radius() {
        let sq = unit_square();
        let e = point_atoms(&[(0.0, 0.0, 1.0)], 0.01);
        let nu0 = ComplexAtomicMeasure::from_positive(&e);
        let sys = build_mu_nu(&[sq], &e, &nu0, &[7.0]).unwrap();
        // 0.7 > side/2 so the radius falls back to side/4
        assert!(sys.circles[0].clamped);
        assert!((sys.circles[0].radius - 0.25).abs() < 1e-15);
        assert_eq!(sys.clamped_count, 1);
    }

    #[test]
    fn discretization_honors_both_density_rules() {
        let sq = unit_square();
        let e = point_atoms(&[(0.0, 0.0, 1.0)], 0.01);
        let nu0 = ComplexAtomicMeasure::from_positive(&e);
        // tiny circle: floor of 64 atoms applies
        let sys = build_mu_nu(&[sq], &e, &nu0, &[1e-3]).unwrap();
        assert_eq!(sys.circles[0].atoms, MIN_CIRCLE_ATOMS);
        // big circle: spacing at most the reference resolution
        let sys = build_mu_nu(&[sq], &e, &nu0, &[4.0]).unwrap();
        let c = &sys.circles[0];
        assert!(c.atoms > MIN_CIRCLE_ATOMS);
        let spacing = std::f64::consts::TAU * c.radius / c.atoms as f64;
        assert!(spacing <= 0.01 + 1e-15);
    }

    #[test]
    fn rejects_malformed_inputs() {
        let sq = unit_square();
        let e = point_atoms(&[(0.0, 0.0, 1.0)], 0.01);
        let nu0 = ComplexAtomicMeasure::from_positive(&e);
        assert!(build_mu_nu(&[], &e, &nu0, &[]).is_err());
        assert!(build_mu_nu(&[sq], &e, &nu0, &[]).is_err());
        assert!(build_mu_nu(&[sq], &e, &nu0, &[0.0]).is_err());
        // set atom far outside the doubled square
        let far = point_atoms(&[(50.0, 0.0, 1.0)], 0.01);
        assert!(build_mu_nu(&[sq], &far, &nu0, &[1.0]).is_err());
        // reference atom outside every bump support leaks mass -> error
        let stray = ComplexAtomicMeasure::new(
            vec![(Point::new(50.0, 0.0), Complex64::new(1.0, 0.0))],
            0.01,
        )
        .unwrap();
        assert!(build_mu_nu(&[sq], &e, &stray, &[1.0]).is_err());
    }
}
