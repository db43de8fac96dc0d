//! Planar points and polygon helpers.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    /// Rotates by -90 degrees; for a CCW boundary this maps the tangent to the outward normal.
    pub fn rot_cw(self) -> Point {
        Point::new(self.y, -self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

/// Signed area (positive for counter-clockwise loops).
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Area centroid of a simple polygon.
pub fn centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let a = signed_area(poly);
    let mut c = Point::default();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        c = c + (p + q) * p.cross(q);
    }
    c * (1.0 / (6.0 * a))
}

pub fn diameter(poly: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in poly.iter().enumerate() {
        for q in &poly[i + 1..] {
            d = d.max(p.dist(*q));
        }
    }
    d
}

/// Whether segments `[a, b]` and `[c, d]` share a point.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)) {
        return true;
    }
    let on_segment = |p: Point, q: Point, r: Point| {
        (q - p).cross(r - p).abs() <= tol
            && r.x >= p.x.min(q.x) - tol
            && r.x <= p.x.max(q.x) + tol
            && r.y >= p.y.min(q.y) - tol
            && r.y <= p.y.max(q.y) + tol
    };
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

/// Clips a polygon against the half-plane `y >= 0` (`upper = true`) or `y <= 0`.
///
/// Returns an empty vector when nothing of positive area remains.
pub fn clip_half_plane(poly: &[Point], upper: bool) -> Vec<Point> {
    let inside = |p: Point| if upper { p.y >= 0.0 } else { p.y <= 0.0 };
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (pin, qin) = (inside(p), inside(q));
        if pin {
            out.push(p);
        }
        if pin != qin {
            let t = p.y / (p.y - q.y);
            let x = p.x + t * (q.x - p.x);
            out.push(Point::new(x, 0.0));
        }
    }
    out.dedup_by(|a, b| a.dist(*b) < 1e-15);
    if out.len() >= 2 && out[0].dist(out[out.len() - 1]) < 1e-15 {
        out.pop();
    }
    if out.len() < 3 || signed_area(&out).abs() < 1e-300 {
        return Vec::new();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)]
    }

    #[test]
    fn square_area_centroid_diameter() {
        let s = square();
        assert_eq!(signed_area(&s), 1.0);
        let c = centroid(&s);
        assert!((c.x - 0.5).abs() < 1e-15 && (c.y - 0.5).abs() < 1e-15);
        assert!((diameter(&s) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clipping_splits_area() {
        let s: Vec<Point> = square().into_iter().map(|p| p - Point::new(0.0, 0.25)).collect();
        let up = clip_half_plane(&s, true);
        let lo = clip_half_plane(&s, false);
        assert!((signed_area(&up) - 0.75).abs() < 1e-15);
        assert!((signed_area(&lo) - 0.25).abs() < 1e-15);
        assert!(clip_half_plane(&square(), false).is_empty());
    }

    #[test]
    fn crossing_segments() {
        let o = Point::new(0.0, 0.0);
        assert!(segments_intersect(o, Point::new(1.0, 1.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0), 1e-14));
        assert!(!segments_intersect(o, Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0), 1e-14));
    }
}
