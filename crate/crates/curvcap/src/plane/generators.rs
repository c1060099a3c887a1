use crate::error::{Error, Result};
use crate::plane::measure::AtomicMeasure;
use crate::plane::point::Point;
use crate::plane::segment::SegmentFamily;

/// Corner quarter Cantor set, generation `n`: starting from the unit square,
/// each generation keeps the four corner sub-squares at contraction 1/4. Atoms
/// sit at generation-`n` square centers with weight `4^-n`; resolution `4^-n`.
pub fn cantor_set(n: u32) -> Result<AtomicMeasure> {
    if n > 8 {
        return Err(Error::invalid("cantor generation capped at 8 (65536 atoms)"));
    }
    let mut centers = vec![Point::new(0.5, 0.5)];
    let mut side = 1.0f64;
    for _ in 0..n {
        let off = side * 3.0 / 8.0;
        let mut next = Vec::with_capacity(centers.len() * 4);
        for c in centers {
            next.push(Point::new(c.x - off, c.y - off));
            next.push(Point::new(c.x + off, c.y - off));
            next.push(Point::new(c.x - off, c.y + off));
            next.push(Point::new(c.x + off, c.y + off));
        }
        centers = next;
        side *= 0.25;
    }
    let w = 0.25f64.powi(n as i32);
    AtomicMeasure::new(centers.into_iter().map(|c| (c, w)).collect(), w)
}

/// Arclength measure of a segment family, discretized at pitch `<= h`: each
/// segment splits into equal pieces no longer than `h`, one atom per piece at
/// its midpoint carrying the piece length. Resolution is `h`.
pub fn discretize_segments(family: &SegmentFamily, h: f64) -> Result<AtomicMeasure> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("discretization pitch must be positive"));
    }
    let mut atoms = Vec::new();
    for &(a, b) in family.segments() {
        let len = a.dist(b);
        let pieces = (len / h).ceil().max(1.0) as usize;
        let w = len / pieces as f64;
        let dir = b - a;
        for i in 0..pieces {
            let t = (i as f64 + 0.5) / pieces as f64;
            atoms.push((a + dir * t, w));
        }
    }
    AtomicMeasure::new(atoms, h)
}
