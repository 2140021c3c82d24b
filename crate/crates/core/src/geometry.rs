//! Small 2D vector type and the predicates the mesh queries are built on.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or vector in the plane, in metres.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Point, s: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * s, self.y + (other.y - self.y) * s)
    }

    pub fn distance(self, other: Point) -> f64 {
        (other - self).norm()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
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

/// Twice the signed area of the triangle (a, b, c); positive when counter-clockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Signed distance of `p` from the infinite line through `a` and `b`
/// (positive on the left of a→b).
pub fn signed_distance(a: Point, b: Point, p: Point) -> f64 {
    orient(a, b, p) / a.distance(b)
}

/// Distance from `p` to the closed segment [a, b].
pub fn distance_to_segment(a: Point, b: Point, p: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return a.distance(p);
    }
    let s = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    a.lerp(b, s).distance(p)
}

/// True when `p` lies on the open segment (a, b): within `tol` of the segment
/// and farther than `tol` from both endpoints.
pub fn on_open_segment(a: Point, b: Point, p: Point, tol: f64) -> bool {
    if p.distance(a) <= tol || p.distance(b) <= tol {
        return false;
    }
    distance_to_segment(a, b, p) <= tol
}

/// True when the segments cross at a single point interior to both.
///
/// Touching at an endpoint and collinear overlap are not proper crossings.
pub fn segments_cross_properly(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let ab = a.distance(b);
    let cd = c.distance(d);
    if ab <= tol || cd <= tol {
        return false;
    }
    let d1 = orient(a, b, c) / ab;
    let d2 = orient(a, b, d) / ab;
    let d3 = orient(c, d, a) / cd;
    let d4 = orient(c, d, b) / cd;
    let strict = |u: f64, v: f64| (u > tol && v < -tol) || (u < -tol && v > tol);
    strict(d1, d2) && strict(d3, d4)
}

/// True when the segments are collinear (within `tol`) and share a piece of
/// positive length.
pub fn segments_overlap(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let ab = a.distance(b);
    if ab <= tol {
        return false;
    }
    if signed_distance(a, b, c).abs() > tol || signed_distance(a, b, d).abs() > tol {
        return false;
    }
    let t = (b - a) * (1.0 / ab);
    let s0 = (c - a).dot(t);
    let s1 = (d - a).dot(t);
    let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
    hi.min(ab) - lo.max(0.0) > tol
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = BoundingBox { min: first, max: first };
        for p in it {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
        }
        Some(bb)
    }

    pub fn diagonal(&self) -> f64 {
        self.min.distance(self.max)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p.x >= self.min.x - tol && p.x <= self.max.x + tol && p.y >= self.min.y - tol && p.y <= self.max.y + tol
    }
}
