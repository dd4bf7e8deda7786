//! Planar primitives shared by the motion models and the dominant-region code.

use std::ops::{Add, Mul, Neg, Sub};

/// A point or vector in pitch coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    /// Lexicographic comparison on (x, y); used for deterministic tie-breaks.
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
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

/// Normalizes an angle into `[-π, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = (angle + PI).rem_euclid(TAU) - PI;
    if a >= PI {
        a -= TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

/// Where two segments meet, with the parameter along each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentHit {
    pub point: Point,
    /// Parameter along the first segment, in `[0, 1]`.
    pub t: f64,
    /// Parameter along the second segment, in `[0, 1]`.
    pub u: f64,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn dir(&self) -> Point {
        self.b - self.a
    }

    pub fn length(&self) -> f64 {
        self.dir().norm()
    }

    pub fn at(&self, t: f64) -> Point {
        self.a + self.dir() * t
    }

    /// Parameter of the orthogonal projection of `p`, clamped to `[0, 1]`.
    pub fn project(&self, p: Point) -> f64 {
        let d = self.dir();
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(d) / len2).clamp(0.0, 1.0)
    }

    pub fn closest_point(&self, p: Point) -> Point {
        self.at(self.project(p))
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        self.closest_point(p).dist(p)
    }

    fn bbox_overlaps(&self, other: &Segment, eps: f64) -> bool {
        self.a.x.min(self.b.x) <= other.a.x.max(other.b.x) + eps
            && other.a.x.min(other.b.x) <= self.a.x.max(self.b.x) + eps
            && self.a.y.min(self.b.y) <= other.a.y.max(other.b.y) + eps
            && other.a.y.min(other.b.y) <= self.a.y.max(self.b.y) + eps
    }

    /// Intersection of two closed segments. Endpoint contacts count; parallel
    /// (including collinear-overlapping) segments report only a shared
    /// endpoint, if any.
    pub fn intersect(&self, other: &Segment, eps: f64) -> Option<SegmentHit> {
        if !self.bbox_overlaps(other, eps) {
            return None;
        }
        let r = self.dir();
        let s = other.dir();
        let denom = r.cross(s);
        let qp = other.a - self.a;
        let rl = r.norm();
        let sl = s.norm();
        if rl == 0.0 || sl == 0.0 {
            return None;
        }
        if denom.abs() <= 1e-12 * rl * sl {
            for (p, t) in [(self.a, 0.0), (self.b, 1.0)] {
                for (q, u) in [(other.a, 0.0), (other.b, 1.0)] {
                    if p.dist(q) <= eps {
                        return Some(SegmentHit { point: p, t, u });
                    }
                }
            }
            return None;
        }
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        let et = eps / rl;
        let eu = eps / sl;
        if t < -et || t > 1.0 + et || u < -eu || u > 1.0 + eu {
            return None;
        }
        let t = t.clamp(0.0, 1.0);
        let u = u.clamp(0.0, 1.0);
        Some(SegmentHit {
            point: self.at(t),
            t,
            u,
        })
    }
}

/// A closed polygon stored as its vertex ring (first vertex not repeated).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace signed area; positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.vertices[i].cross(self.vertices[(i + 1) % n]);
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn make_ccw(&mut self) {
        if self.signed_area() < 0.0 {
            self.vertices.reverse();
        }
    }

    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|e| e.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Even-odd containment; points within `tol` of the boundary count as inside.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        if self.contains_strict(p) {
            return true;
        }
        tol > 0.0
            && self.edges().any(|e| {
                p.x >= e.a.x.min(e.b.x) - tol
                    && p.x <= e.a.x.max(e.b.x) + tol
                    && p.y >= e.a.y.min(e.b.y) - tol
                    && p.y <= e.a.y.max(e.b.y) + tol
                    && e.distance_to(p) <= tol
            })
    }

    /// Even-odd containment without boundary tolerance.
    pub fn contains_strict(&self, p: Point) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > p.y) != (vj.y > p.y) {
                let x = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// True when no two non-adjacent edges touch. Quadratic in the vertex count.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<Segment> = self.edges().collect();
        for i in 0..n {
            if edges[i].length() == 0.0 {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                match edges[i].intersect(&edges[j], 0.0) {
                    None => {}
                    Some(hit) if adjacent => {
                        // adjacent edges may only share their common vertex
                        let shared = if j == i + 1 {
                            hit.t == 1.0 && hit.u == 0.0
                        } else {
                            hit.t == 0.0 && hit.u == 1.0
                        };
                        if !shared && n > 3 {
                            return false;
                        }
                    }
                    Some(_) => return false,
                }
            }
        }
        true
    }

    /// Clips against the half-plane on the left of the directed line `a -> b`
    /// (Sutherland-Hodgman).
    pub fn clip_left_of(&self, a: Point, b: Point) -> Polygon {
        let d = b - a;
        let side = |p: Point| d.cross(p - a);
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..n {
            let cur = self.vertices[i];
            let next = self.vertices[(i + 1) % n];
            let sc = side(cur);
            let sn = side(next);
            if sc >= 0.0 {
                out.push(cur);
            }
            if (sc >= 0.0) != (sn >= 0.0) {
                let t = sc / (sc - sn);
                out.push(cur.lerp(next, t));
            }
        }
        Polygon::new(out)
    }

    /// Whether the closed segment touches the polygon (crosses an edge or lies inside).
    pub fn touches_segment(&self, seg: &Segment) -> bool {
        if self.contains(seg.a, 0.0) || self.contains(seg.b, 0.0) {
            return true;
        }
        self.edges().any(|e| e.intersect(seg, 1e-9).is_some())
    }

    /// Regular n-gon with circumradius `radius`, first vertex at angle 0.
    pub fn regular(center: Point, radius: f64, n: usize) -> Polygon {
        let step = std::f64::consts::TAU / n as f64;
        Polygon::new(
            (0..n)
                .map(|k| center + Point::from_polar(radius, step * k as f64))
                .collect(),
        )
    }
}

/// The playing surface: an axis-aligned rectangle centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pitch {
    pub half_length: f64,
    pub half_width: f64,
}

impl Default for Pitch {
    fn default() -> Self {
        Pitch {
            half_length: 52.5,
            half_width: 34.0,
        }
    }
}

impl Pitch {
    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn area(&self) -> f64 {
        self.length() * self.width()
    }

    pub fn contains(&self, p: Point, margin: f64) -> bool {
        p.x.abs() <= self.half_length + margin && p.y.abs() <= self.half_width + margin
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(-self.half_length, self.half_length),
            p.y.clamp(-self.half_width, self.half_width),
        )
    }

    pub fn corners(&self) -> [Point; 4] {
        let (l, w) = (self.half_length, self.half_width);
        [
            Point::new(-l, -w),
            Point::new(l, -w),
            Point::new(l, w),
            Point::new(-l, w),
        ]
    }

    pub fn polygon(&self) -> Polygon {
        Polygon::new(self.corners().to_vec())
    }

    pub fn walls(&self) -> [Segment; 4] {
        let c = self.corners();
        [
            Segment::new(c[0], c[1]),
            Segment::new(c[1], c[2]),
            Segment::new(c[2], c[3]),
            Segment::new(c[3], c[0]),
        ]
    }

    /// Distance along the ray from `origin` in `dir` until it leaves the
    /// rectangle expanded by `margin`. `origin` must lie inside it.
    pub fn exit_distance(&self, origin: Point, dir: Point, margin: f64) -> f64 {
        let l = self.half_length + margin;
        let w = self.half_width + margin;
        let mut best = f64::INFINITY;
        if dir.x > 0.0 {
            best = best.min((l - origin.x) / dir.x);
        } else if dir.x < 0.0 {
            best = best.min((-l - origin.x) / dir.x);
        }
        if dir.y > 0.0 {
            best = best.min((w - origin.y) / dir.y);
        } else if dir.y < 0.0 {
            best = best.min((-w - origin.y) / dir.y);
        }
        best.max(0.0)
    }
}
