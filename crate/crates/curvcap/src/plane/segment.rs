use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::point::Point;

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |o: f64, p: Point, q: Point, r: Point| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(d1, c, d, a) || on(d2, c, d, b) || on(d3, a, b, c) || on(d4, a, b, d)
}

/// Distance between two closed segments (0 when they intersect).
pub fn segment_segment_dist(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_dist(a, c, d)
        .min(point_segment_dist(b, c, d))
        .min(point_segment_dist(c, a, b))
        .min(point_segment_dist(d, a, b))
}

/// Finite family of pairwise disjoint closed segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SegmentWire", try_from = "SegmentWire")]
pub struct SegmentFamily {
    segments: Vec<(Point, Point)>,
}

impl SegmentFamily {
    pub fn new(segments: Vec<(Point, Point)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("segment family must be nonempty"));
        }
        for &(a, b) in &segments {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid("segment endpoints must be finite"));
            }
            if a.dist(b) == 0.0 {
                return Err(Error::invalid("degenerate zero-length segment"));
            }
        }
        for i in 0..segments.len() {
            for j in (i + 1)..segments.len() {
                let (a, b) = segments[i];
                let (c, d) = segments[j];
                if segment_segment_dist(a, b, c, d) == 0.0 {
                    return Err(Error::invalid(format!(
                        "segments {i} and {j} are not disjoint"
                    )));
                }
            }
        }
        Ok(SegmentFamily { segments })
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|&(a, b)| a.dist(b)).sum()
    }

    /// One tenth of the minimal pairwise segment distance; infinite for a
    /// single segment.
    pub fn gap(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.segments.len() {
            for j in (i + 1)..self.segments.len() {
                let (a, b) = self.segments[i];
                let (c, d) = self.segments[j];
                min = min.min(segment_segment_dist(a, b, c, d));
            }
        }
        min * 0.1
    }

    /// Largest deviation (radians, in [0, pi/2]) of any segment direction from
    /// the direction `angle`. Callers that want the common-direction layout
    /// check this against a tolerance.
    pub fn max_angle_deviation(&self, angle: f64) -> f64 {
        let dir = Point::new(angle.cos(), angle.sin());
        self.segments
            .iter()
            .map(|&(a, b)| {
                let v = b - a;
                let n = v.norm();
                let cos = ((v.x * dir.x + v.y * dir.y) / n).abs().clamp(0.0, 1.0);
                cos.acos()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct SegmentWire {
    segments: Vec<[[f64; 2]; 2]>,
}

impl From<SegmentFamily> for SegmentWire {
    fn from(f: SegmentFamily) -> Self {
        SegmentWire {
            segments: f
                .segments
                .into_iter()
                .map(|(a, b)| [[a.x, a.y], [b.x, b.y]])
                .collect(),
        }
    }
}

impl TryFrom<SegmentWire> for SegmentFamily {
    type Error = Error;
    fn try_from(w: SegmentWire) -> Result<Self> {
        SegmentFamily::new(
            w.segments
                .into_iter()
                .map(|[[ax, ay], [bx, by]]| (Point::new(ax, ay), Point::new(bx, by)))
                .collect(),
        )
    }
}
