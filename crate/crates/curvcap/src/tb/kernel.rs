use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plane::{ComplexAtomicMeasure, Point};
use crate::sum::Cascade;
use crate::tb::SuppressionProfile;

/// Damped Cauchy kernel
///
/// `K_theta(x, y) = conj(x - y) / (|x - y|^2 + theta(x) theta(y))`.
///
/// With zero suppression this is exactly the Cauchy kernel `1/(x - y)`. For
/// any 1-Lipschitz profile it obeys `|K| <= 1/|x - y|` and
/// `|K| <= 1/max(theta(x), theta(y))`.
pub fn suppressed_kernel(x: Point, y: Point, theta: &SuppressionProfile) -> Result<Complex64> {
    let dx = x.x - y.x;
    let dy = x.y - y.y;
    let d2 = dx * dx + dy * dy;
    let damp = theta.theta(x) * theta.theta(y);
    let den = d2 + damp;
    if den == 0.0 {
        return Err(Error::KernelSingularity);
    }
    Ok(Complex64::new(dx / den, -dy / den))
}

#[inline]
fn suppressed_term(atom: Point, z: Point, w: Complex64, tz: f64, theta: &SuppressionProfile) -> Complex64 {
    // w * K_theta(atom, z): same orientation as the crate's plain transform,
    // whose kernel is 1/(atom - z)
    let dx = atom.x - z.x;
    let dy = atom.y - z.y;
    let d2 = dx * dx + dy * dy;
    let den = d2 + theta.theta(atom) * tz;
    w * Complex64::new(dx / den, -dy / den)
}

/// Truncated suppressed transform
///
/// `C_{theta,eps} nu(z) = sum_{|atom - z| > eps} w * K_theta(atom, z)`.
///
/// The sign convention matches the plain truncated transform, to which this
/// reduces exactly when the profile vanishes. `eps = 0` keeps every atom away
/// from `z` itself.
pub fn suppressed_cauchy(
    nu: &ComplexAtomicMeasure,
    z: Point,
    epsilon: f64,
    theta: &SuppressionProfile,
) -> Result<Complex64> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("truncation epsilon must be nonnegative"));
    }
    let e2 = epsilon * epsilon;
    let tz = theta.theta(z);
    let mut acc = Cascade::new();
    for &(atom, w) in nu.atoms() {
        if atom.dist2(z) > e2 {
            acc.push(suppressed_term(atom, z, w, tz, theta));
        }
    }
    Ok(acc.finish())
}

/// `sup_eps |C_{theta,eps} nu(z)|`, evaluated exactly over the truncation
/// breakpoints (the distinct atom distances, entered in decreasing order;
/// the empty truncation contributes 0).
pub fn suppressed_cauchy_maximal(
    nu: &ComplexAtomicMeasure,
    z: Point,
    theta: &SuppressionProfile,
) -> f64 {
    let tz = theta.theta(z);
    let mut terms: Vec<(f64, Complex64)> = nu
        .atoms()
        .iter()
        .filter_map(|&(atom, w)| {
            let d2 = atom.dist2(z);
            (d2 > 0.0).then(|| (d2, suppressed_term(atom, z, w, tz, theta)))
        })
        .collect();
    terms.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::cauchy_truncated;
    use crate::plane::{Ball, RegionMember, RegionUnion, Square};
    use rand::{Rng, SeedableRng};

    fn profile_from(members: Vec<RegionMember>, floor: f64) -> SuppressionProfile {
        SuppressionProfile::new(RegionUnion::new(members).unwrap(), floor).unwrap()
    }

    #[test]
    fn reduces_to_cauchy_kernel_without_suppression() {
        let t = SuppressionProfile::zero();
        let k = suppressed_kernel(Point::new(1.0, 0.0), Point::new(0.0, 0.0), &t).unwrap();
        assert_eq!(k, Complex64::new(1.0, 0.0));
        // coincident points with zero suppression are singular
        assert!(matches!(
            suppressed_kernel(Point::new(1.0, 0.0), Point::new(1.0, 0.0), &t),
            Err(Error::KernelSingularity)
        ));
    }

    #[test]
    fn unit_separation_unit_suppression_halves_the_kernel() {
        let t = SuppressionProfile::constant(1.0).unwrap();
        let k = suppressed_kernel(Point::new(1.0, 0.0), Point::new(0.0, 0.0), &t).unwrap();
        assert!((k - Complex64::new(0.5, 0.0)).norm() == 0.0);
        // x - y = 0.1i: |K| = 0.1/1.01, below the 1/max(theta) = 1 ceiling
        let k = suppressed_kernel(Point::new(0.0, 0.1), Point::new(0.0, 0.0), &t).unwrap();
        assert!((k.norm() - 0.1 / 1.01).abs() < 1e-15);
        assert!(k.norm() <= 1.0);
        // coincident points are fine under positive suppression
        let k = suppressed_kernel(Point::new(3.0, 1.0), Point::new(3.0, 1.0), &t).unwrap();
        assert_eq!(k, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn kernel_bounds_hold_exactly_over_random_configurations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let one_ulp = 1.0 + f64::EPSILON;
        for trial in 0..10_000 {
            let members = vec![
                RegionMember::Ball(
                    Ball::new(
                        Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        rng.gen_range(0.1..1.5),
                    )
                    .unwrap(),
                ),
                RegionMember::Square(
                    Square::new(
                        Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        rng.gen_range(0.1..1.5),
                    )
                    .unwrap(),
                ),
            ];
            let theta = profile_from(members, rng.gen_range(0.0..0.3));
            let x = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let y = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let k = match suppressed_kernel(x, y, &theta) {
                Ok(k) => k,
                Err(_) => continue,
            };
            let d = x.dist(y);
            if d > 0.0 {
                assert!(k.norm() <= one_ulp / d, "trial {trial}: |K| above 1/|x-y|");
            }
            let tmax = theta.theta(x).max(theta.theta(y));
            if tmax > 0.0 {
                assert!(
                    k.norm() <= one_ulp / tmax,
                    "trial {trial}: |K| = {} above 1/max theta = {}",
                    k.norm(),
                    1.0 / tmax
                );
            }
        }
    }

    #[test]
    fn finite_difference_gradient_respects_the_cz_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let theta = profile_from(
                vec![RegionMember::Ball(
                    Ball::new(
                        Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        rng.gen_range(0.2..1.0),
                    )
                    .unwrap(),
                )],
                rng.gen_range(0.0..0.2),
            );
            let x = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let y = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = x.dist(y);
            if d < 0.05 {
                continue;
            }
            let h = d * 1e-6;
            let k = |p: Point| suppressed_kernel(p, y, &theta).unwrap();
            let gx = (k(Point::new(x.x + h, x.y)) - k(Point::new(x.x - h, x.y))) / (2.0 * h);
            let gy = (k(Point::new(x.x, x.y + h)) - k(Point::new(x.x, x.y - h))) / (2.0 * h);
            let grad = (gx.norm_sqr() + gy.norm_sqr()).sqrt();
            assert!(
                grad <= 8.0 / (d * d) * (1.0 + 1e-3),
                "gradient {grad} above 8/|x-y|^2 = {}",
                8.0 / (d * d)
            );
        }
    }

    #[test]
    fn transform_reduces_exactly_and_matches_the_worked_example() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let atoms: Vec<(Point, Complex64)> = (0..40)
            .map(|_| {
                (
                    Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let nu = ComplexAtomicMeasure::new(atoms, 0.01).unwrap();
        let zero = SuppressionProfile::zero();
        for _ in 0..50 {
            let z = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let eps = rng.gen_range(1e-3..2.0);
            let plain = cauchy_truncated(&nu, z, eps).unwrap();
            let damped = suppressed_cauchy(&nu, z, eps, &zero).unwrap();
            assert_eq!(plain, damped, "zero-profile transform must match bitwise");
        }
        // single unit atom at the origin, z = 2, unit suppression, eps = 1
        let single = ComplexAtomicMeasure::new(
            vec![(Point::new(0.0, 0.0), Complex64::new(1.0, 0.0))],
            0.1,
        )
        .unwrap();
        let one = SuppressionProfile::constant(1.0).unwrap();
        let v = suppressed_cauchy(&single, Point::new(2.0, 0.0), 1.0, &one).unwrap();
        assert!((v - Complex64::new(-0.4, 0.0)).norm() < 1e-15);
        assert!(suppressed_cauchy(&single, Point::new(2.0, 0.0), -1.0, &one).is_err());
    }

    #[test]
    fn suppressed_maximal_transform_stays_finite_across_a_sweep() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let n = rng.gen_range(5..40);
            let atoms: Vec<(Point, Complex64)> = (0..n)
                .map(|_| {
                    (
                        Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        Complex64::new(rng.gen_range(0.0..0.1), 0.0),
                    )
                })
                .collect();
            let nu = ComplexAtomicMeasure::new(atoms, 0.01).unwrap();
            let r0 = rng.gen_range(0.05..0.5);
            let theta = SuppressionProfile::constant(r0).unwrap();
            let z = Point::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let m = suppressed_cauchy_maximal(&nu, z, &theta);
            assert!(m.is_finite());
            // the suppressed maximal transform never exceeds variation / floor
            assert!(m <= nu.variation().mass() / r0 * (1.0 + 1e-12));
            worst = worst.max(m);
        }
        assert!(worst > 0.0);
    }

    #[test]
    fn maximal_dominates_each_truncation_and_zero_profile_matches_plain() {
        use crate::kernels::cauchy_maximal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let atoms: Vec<(Point, Complex64)> = (0..25)
            .map(|_| {
                (
                    Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    Complex64::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)),
                )
            })
            .collect();
        let nu = ComplexAtomicMeasure::new(atoms, 0.01).unwrap();
        let theta = profile_from(
            vec![RegionMember::Ball(Ball::new(Point::new(0.0, 0.0), 0.8).unwrap())],
            0.0,
        );
        let z = Point::new(0.3, 0.1);
        let sup = suppressed_cauchy_maximal(&nu, z, &theta);
        for eps in [1e-4, 0.01, 0.3, 0.9, 2.5] {
            let v = suppressed_cauchy(&nu, z, eps, &theta).unwrap().norm();
            assert!(v <= sup * (1.0 + 1e-12), "eps {eps}: {v} > sup {sup}");
        }
        let zero = SuppressionProfile::zero();
        assert_eq!(suppressed_cauchy_maximal(&nu, z, &zero), cauchy_maximal(&nu, z));
    }
}
