use crate::plane::point::Point;

/// `a*b - c*d` with one rounding via fused multiply-adds (Kahan's algorithm).
#[inline]
pub fn diff_of_products(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let cd = c * d;
    let err = f64::mul_add(-c, d, cd);
    let dop = f64::mul_add(a, b, -cd);
    dop + err
}

/// Twice the signed triangle area, computed with a compensated cross product.
#[inline]
pub fn cross2(x: Point, y: Point, z: Point) -> f64 {
    diff_of_products(y.x - x.x, z.y - x.y, y.y - x.y, z.x - x.x)
}

/// Menger curvature: inverse circumradius of the triangle `x, y, z`, equal to
/// `4 * area / (|x-y| |y-z| |x-z|)`. Collinear or coincident points give 0.
///
/// The triple is canonicalized before any arithmetic, so every permutation
/// of the same three points returns a bit-identical value.
#[inline]
pub fn menger_curvature(x: Point, y: Point, z: Point) -> f64 {
    let mut t = [x, y, z];
    t.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let [x, y, z] = t;
    let a2 = x.dist2(y);
    let b2 = y.dist2(z);
    let c2 = x.dist2(z);
    if a2 == 0.0 || b2 == 0.0 || c2 == 0.0 {
        return 0.0;
    }
    let cross = cross2(x, y, z);
    2.0 * cross.abs() / (a2 * b2 * c2).sqrt()
}

/// Squared Menger curvature without square roots; the form used inside the
/// triple sums.
#[inline]
pub fn menger_curvature_sq(x: Point, y: Point, z: Point) -> f64 {
    let a2 = x.dist2(y);
    let b2 = y.dist2(z);
    let c2 = x.dist2(z);
    if a2 == 0.0 || b2 == 0.0 || c2 == 0.0 {
        return 0.0;
    }
    let cross = cross2(x, y, z);
    4.0 * cross * cross / (a2 * b2 * c2)
}
