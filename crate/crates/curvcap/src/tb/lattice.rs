use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plane::{DyadicLattice, Point};

/// A randomly translated dyadic lattice together with the offset that
/// produced it (kept for Monte-Carlo trial logs).
#[derive(Clone, Debug)]
pub struct RandomLattice {
    pub lattice: DyadicLattice,
    pub w: Point,
    pub draw: u64,
}

/// The raw uniform offset in `[-2^(n-1), 2^(n-1))^2` for one keyed draw.
/// The generator is counter-based: `(seed, draw)` fully determines the
/// offset, independently of how many other draws ran or on which thread.
pub fn random_offset(seed: u64, draw: u64, n: i32) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    let span = (n as f64).exp2();
    let ux: f64 = rng.gen();
    let uy: f64 = rng.gen();
    Point::new((ux - 0.5) * span, (uy - 0.5) * span)
}

/// Random lattice whose root square is `w + [-2^n, 2^n)^2`. All `data`
/// points must fit in the closed ball `B(0, 2^(n-3))`, which guarantees the
/// root contains them for every possible offset.
pub fn random_lattice(seed: u64, draw: u64, n: i32, data: &[Point]) -> Result<RandomLattice> {
    let fit = (n as f64 - 3.0).exp2();
    for p in data {
        if p.x.hypot(p.y) > fit {
            return Err(Error::invalid(format!(
                "data point ({}, {}) outside B(0, 2^(n-3)) = B(0, {fit})",
                p.x, p.y
            )));
        }
    }
    let w = random_offset(seed, draw, n);
    let lattice = DyadicLattice::new(n, w)?;
    Ok(RandomLattice { lattice, w, draw })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_replays_identically() {
        let a = random_lattice(7, 3, 5, &[Point::new(1.0, -2.0)]).unwrap();
        let b = random_lattice(7, 3, 5, &[Point::new(1.0, -2.0)]).unwrap();
        assert_eq!(a.w.x, b.w.x);
        assert_eq!(a.w.y, b.w.y);
        let c = random_lattice(7, 4, 5, &[]).unwrap();
        assert!(c.w.x != a.w.x || c.w.y != a.w.y);
    }

    #[test]
    fn offsets_are_centered_and_in_range() {
        let n = 4;
        let half = 8.0; // 2^(n-1)
        let trials = 1000;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for t in 0..trials {
            let w = random_offset(11, t, n);
            assert!(w.x >= -half && w.x < half);
            assert!(w.y >= -half && w.y < half);
            sx += w.x;
            sy += w.y;
        }
        let mean_x = sx / trials as f64;
        let mean_y = sy / trials as f64;
        // uniform on [-8, 8): sigma = 16/sqrt(12); allow 3 sigma of the mean
        let gate = 3.0 * (16.0 / 12.0f64.sqrt()) / (trials as f64).sqrt();
        assert!(mean_x.abs() < gate, "mean x {mean_x} beyond {gate}");
        assert!(mean_y.abs() < gate, "mean y {mean_y} beyond {gate}");
    }

    #[test]
    fn root_always_contains_the_registered_ball() {
        let n = 5;
        let r = (n as f64 - 3.0).exp2();
        let rim: Vec<Point> = (0..16)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / 16.0;
                Point::new(r * th.cos(), r * th.sin())
            })
            .collect();
        for draw in 0..200 {
            let rl = random_lattice(2, draw, n, &rim).unwrap();
            for p in &rim {
                assert!(rl.lattice.in_root(*p), "draw {draw} lost a rim point");
            }
        }
    }

    #[test]
    fn oversized_data_is_rejected() {
        let n = 4;
        let too_far = Point::new((n as f64 - 3.0).exp2() + 1e-9, 0.0);
        assert!(matches!(
            random_lattice(0, 0, n, &[too_far]),
            Err(Error::InvalidArgument(_))
        ));
    }
}
