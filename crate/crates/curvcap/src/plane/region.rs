use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::cover::Ball;
use crate::plane::point::Point;
use crate::plane::square::Square;

/// One convex piece of a region union.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum RegionMember {
    Ball(Ball),
    Square(Square),
}

impl RegionMember {
    fn contains(self, p: Point) -> bool {
        match self {
            RegionMember::Ball(b) => b.contains(p),
            RegionMember::Square(s) => s.contains(p),
        }
    }

    /// Signed depth: > 0 strictly inside, 0 on the boundary, < 0 outside.
    fn depth(self, p: Point) -> f64 {
        match self {
            RegionMember::Ball(b) => b.radius - p.dist(b.center),
            RegionMember::Square(s) => {
                let dx = (p.x - s.center.x).abs();
                let dy = (p.y - s.center.y).abs();
                s.half_side() - dx.max(dy)
            }
        }
    }

    fn scale(self) -> f64 {
        match self {
            RegionMember::Ball(b) => b.radius,
            RegionMember::Square(s) => s.side,
        }
    }

    /// Closest point of the member's boundary to `p`. For a ball centered at
    /// `p` any boundary point is closest; the positive-x one is returned (the
    /// equidistance makes the choice irrelevant for distance queries, because
    /// covered-arc endpoints are supplied separately as candidates).
    fn boundary_feet(self, p: Point, out: &mut Vec<Point>) {
        match self {
            RegionMember::Ball(b) => {
                let d = p.dist(b.center);
                if d == 0.0 {
                    out.push(Point::new(b.center.x + b.radius, b.center.y));
                } else {
                    let t = b.radius / d;
                    out.push(Point::new(
                        b.center.x + (p.x - b.center.x) * t,
                        b.center.y + (p.y - b.center.y) * t,
                    ));
                }
            }
            RegionMember::Square(s) => {
                for (a, b) in square_edges(s) {
                    out.push(closest_on_segment(p, a, b));
                }
            }
        }
    }
}

fn square_edges(s: Square) -> [(Point, Point); 4] {
    let lo = s.corner_lo();
    let hi = s.corner_hi();
    let lr = Point::new(hi.x, lo.y);
    let ul = Point::new(lo.x, hi.y);
    [(lo, lr), (lr, hi), (hi, ul), (ul, lo)]
}

fn closest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return a;
    }
    let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0);
    a + ab * t
}

fn circle_circle(c1: Point, r1: f64, c2: Point, r2: f64, out: &mut Vec<Point>) {
    let d = c1.dist(c2);
    if d == 0.0 {
        return;
    }
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    // fp slack keeps tangent circles producing their single touch point
    if h2 < -1e-12 * r1 * r1 {
        return;
    }
    let h = h2.max(0.0).sqrt();
    let ux = (c2.x - c1.x) / d;
    let uy = (c2.y - c1.y) / d;
    let mx = c1.x + a * ux;
    let my = c1.y + a * uy;
    out.push(Point::new(mx - h * uy, my + h * ux));
    if h > 0.0 {
        out.push(Point::new(mx + h * uy, my - h * ux));
    }
}

fn segment_circle(a: Point, b: Point, c: Point, r: f64, out: &mut Vec<Point>) {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return;
    }
    let ac = a - c;
    let qb = 2.0 * (ac.x * ab.x + ac.y * ab.y);
    let qc = ac.x * ac.x + ac.y * ac.y - r * r;
    let disc = qb * qb - 4.0 * len2 * qc;
    if disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    for t in [(-qb - sq) / (2.0 * len2), (-qb + sq) / (2.0 * len2)] {
        if (0.0..=1.0).contains(&t) {
            out.push(a + ab * t);
        }
    }
}

fn segment_segment(a: Point, b: Point, c: Point, d: Point, out: &mut Vec<Point>) {
    let r = b - a;
    let s = d - c;
    let denom = r.x * s.y - r.y * s.x;
    if denom == 0.0 {
        // parallel or collinear: overlap endpoints are member corners, which
        // are already candidates on their own
        return;
    }
    let qp = c - a;
    let t = (qp.x * s.y - qp.y * s.x) / denom;
    let u = (qp.x * r.y - qp.y * r.x) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        out.push(a + r * t);
    }
}

fn boundary_intersections(a: RegionMember, b: RegionMember, out: &mut Vec<Point>) {
    match (a, b) {
        (RegionMember::Ball(p), RegionMember::Ball(q)) => {
            circle_circle(p.center, p.radius, q.center, q.radius, out)
        }
        (RegionMember::Ball(p), RegionMember::Square(q))
        | (RegionMember::Square(q), RegionMember::Ball(p)) => {
            for (e1, e2) in square_edges(q) {
                segment_circle(e1, e2, p.center, p.radius, out);
            }
        }
        (RegionMember::Square(p), RegionMember::Square(q)) => {
            for (a1, a2) in square_edges(p) {
                for (b1, b2) in square_edges(q) {
                    segment_segment(a1, a2, b1, b2, out);
                }
            }
        }
    }
}

/// Finite union of closed balls and squares with exact membership and exact
/// distance-to-complement queries.
///
/// The complement distance from an interior point is always realized on the
/// union's boundary, which consists of member-boundary arcs not covered by
/// other members' interiors. A constrained minimum over such an arc occurs at
/// the unconstrained foot of the query point, at an arc endpoint (a pairwise
/// boundary intersection), or at a corner. Corner and intersection candidates
/// are point-independent and precomputed; feet are per-query.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionUnion {
    members: Vec<RegionMember>,
    /// Precomputed corner/intersection candidates not strictly inside the union.
    fixed_candidates: Vec<Point>,
    tol: f64,
}

impl RegionUnion {
    pub fn new(members: Vec<RegionMember>) -> Result<Self> {
        let mut scale: f64 = 0.0;
        for m in &members {
            let s = m.scale();
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("region member with nonpositive size"));
            }
            scale = scale.max(s);
        }
        let tol = 1e-12 * scale.max(1.0);
        let mut fixed = Vec::new();
        for (i, m) in members.iter().enumerate() {
            if let RegionMember::Square(s) = m {
                let lo = s.corner_lo();
                let hi = s.corner_hi();
                fixed.push(lo);
                fixed.push(hi);
                fixed.push(Point::new(hi.x, lo.y));
                fixed.push(Point::new(lo.x, hi.y));
            }
            for n in &members[i + 1..] {
                boundary_intersections(*m, *n, &mut fixed);
            }
        }
        let keep_if_uncovered =
            |p: &Point| !members.iter().any(|m| m.depth(*p) > tol);
        fixed.retain(keep_if_uncovered);
        Ok(RegionUnion { members, fixed_candidates: fixed, tol })
    }

    pub fn from_balls(balls: &[Ball]) -> Result<Self> {
        Self::new(balls.iter().map(|&b| RegionMember::Ball(b)).collect())
    }

    pub fn from_squares(squares: &[Square]) -> Result<Self> {
        Self::new(squares.iter().map(|&s| RegionMember::Square(s)).collect())
    }

    pub fn members(&self) -> &[RegionMember] {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Closed-set membership.
    pub fn contains(&self, p: Point) -> bool {
        self.members.iter().any(|m| m.contains(p))
    }

    /// `dist(p, complement of the union)`: 0 outside and on the boundary,
    /// positive strictly inside.
    pub fn dist_to_complement(&self, p: Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        let mut feet = Vec::with_capacity(4 * self.members.len());
        for m in &self.members {
            m.boundary_feet(p, &mut feet);
        }
        feet.retain(|q| !self.members.iter().any(|m| m.depth(*q) > self.tol));
        let mut best = f64::INFINITY;
        for q in feet.iter().chain(self.fixed_candidates.iter()) {
            best = best.min(p.dist(*q));
        }
        // a bounded nonempty union always exposes boundary; guard anyway
        if best.is_finite() {
            best
        } else {
            0.0
        }
    }

    /// `dist(p, union)`: 0 inside, else the min distance to any member.
    pub fn dist_to_set(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        for m in &self.members {
            let d = match *m {
                RegionMember::Ball(b) => (p.dist(b.center) - b.radius).max(0.0),
                RegionMember::Square(s) => s.dist(p),
            };
            best = best.min(d);
            if best == 0.0 {
                return 0.0;
            }
        }
        if best.is_finite() {
            best
        } else {
            f64::INFINITY
        }
    }
}
