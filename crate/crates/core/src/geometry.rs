//! Planar primitives shared by the channel model and the floorplan tracker.

use serde::{Deserialize, Serialize};

pub type Point = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Rect { min: Point::new(xmin, ymin), max: Point::new(xmax, ymax) }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ]
    }

    /// Smallest rectangle holding `self` and `p`.
    pub fn union_point(&self, p: Point) -> Rect {
        Rect {
            min: Point::new(self.min.x.min(p.x), self.min.y.min(p.y)),
            max: Point::new(self.max.x.max(p.x), self.max.y.max(p.y)),
        }
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }
}

/// Closed line segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn within_box(p: &Point, q: &Point, r: &Point) -> bool {
    r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// True when the closed segments share at least one point, touching and
    /// collinear overlap included.
    pub fn intersects(&self, other: &Segment) -> bool {
        let (p1, p2, p3, p4) = (&self.a, &self.b, &other.a, &other.b);
        let d1 = cross(p3, p4, p1);
        let d2 = cross(p3, p4, p2);
        let d3 = cross(p1, p2, p3);
        let d4 = cross(p1, p2, p4);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && within_box(p3, p4, p1))
            || (d2 == 0.0 && within_box(p3, p4, p2))
            || (d3 == 0.0 && within_box(p1, p2, p3))
            || (d4 == 0.0 && within_box(p1, p2, p4))
    }

    pub fn distance_to(&self, p: &Point) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        if len2 == 0.0 {
            return (p - self.a).norm();
        }
        let u = ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0);
        (p - (self.a + ab * u)).norm()
    }
}

/// Wraps an angle to `[−π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to TAU for tiny negative inputs
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

pub fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}
