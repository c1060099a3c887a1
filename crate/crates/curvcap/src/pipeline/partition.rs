use crate::error::{Error, Result};
use crate::plane::{Point, Square};

/// Raw bump of one square: profile `(1-s^2)^2` in the sup-norm gauge
/// `s = |x - center|_inf / side`, supported on the closed 2-dilate (`s <= 1`).
/// C^1 across the support boundary (value and gradient vanish at `s = 1`).
pub fn bump(q: Square, x: Point) -> f64 {
    let s = ((x.x - q.center.x).abs().max((x.y - q.center.y).abs())) / q.side;
    if s >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - s * s;
    t * t
}

/// Partition-of-unity weights at `x` over a square family: each square's bump
/// normalized by the sum of all bumps covering `x`. Weights are in [0, 1] and
/// sum to 1 exactly up to the final divisions.
pub fn partition_of_unity(squares: &[Square], x: Point) -> Result<Vec<f64>> {
    let bumps: Vec<f64> = squares.iter().map(|&q| bump(q, x)).collect();
    let total: f64 = bumps.iter().sum();
    if !(total > 0.0) {
        return Err(Error::OutsidePartitionDomain);
    }
    Ok(bumps.into_iter().map(|b| b / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64, side: f64) -> Square {
        Square::new(Point::new(x, y), side).unwrap()
    }

    #[test]
    fn lone_covering_square_gets_weight_one() {
        let squares = [sq(0.0, 0.0, 1.0), sq(10.0, 0.0, 1.0)];
        let w = partition_of_unity(&squares, Point::new(0.1, -0.2)).unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
    }

    #[test]
    fn weights_sum_to_one_and_respect_support() {
        // two unit squares with overlapping 2-dilates
        let squares = [sq(0.0, 0.0, 1.0), sq(1.2, 0.0, 1.0)];
        for p in [
            Point::new(0.5, 0.0),
            Point::new(0.61, 0.3),
            Point::new(1.0, -0.4),
        ] {
            let w = partition_of_unity(&squares, p).unwrap();
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
            for (wi, &q) in w.iter().zip(&squares) {
                assert!((0.0..=1.0).contains(wi));
                if !q.dilate(2.0).unwrap().contains(p) {
                    assert_eq!(*wi, 0.0);
                }
            }
        }
    }

    #[test]
    fn outside_all_supports_is_an_error() {
        let squares = [sq(0.0, 0.0, 1.0)];
        let err = partition_of_unity(&squares, Point::new(5.0, 5.0)).unwrap_err();
        assert!(matches!(err, Error::OutsidePartitionDomain));
        // boundary of 2Q carries bump 0: also outside the domain
        let err = partition_of_unity(&squares, Point::new(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::OutsidePartitionDomain));
    }

    #[test]
    fn finite_difference_gradient_bounded_by_c_over_side() {
        // |d/dx (1-s^2)^2| <= 4 s (1-s^2)/side <= (3*sqrt(3)/4)/side < 1.3/side
        // for the raw bump; normalized weights stay within ~C/side for C = 6.
        let squares = [sq(0.0, 0.0, 0.5), sq(0.6, 0.0, 0.5)];
        let h = 1e-7;
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let t = k as f64 / 199.0;
            let p = Point::new(-0.4 + 1.6 * t, 0.11);
            let at = |q: Point| -> Option<Vec<f64>> { partition_of_unity(&squares, q).ok() };
            let (Some(a), Some(b)) = (at(Point::new(p.x - h, p.y)), at(Point::new(p.x + h, p.y)))
            else {
                continue;
            };
            for i in 0..squares.len() {
                worst = worst.max(((b[i] - a[i]) / (2.0 * h)).abs() * squares[i].side);
            }
        }
        assert!(worst > 0.0);
        assert!(worst < 6.0, "gradient * side = {worst} exceeds the expected C");
    }
}
