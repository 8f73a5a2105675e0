//! Planar points in the two frames used throughout the pipeline.

use core::ops::{Add, Mul, Sub};

/// A point in the vehicle frame: `forward` along the heading, `right` to the
/// starboard side, both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehiclePoint {
    pub forward: f64,
    pub right: f64,
}

impl VehiclePoint {
    pub const fn new(forward: f64, right: f64) -> Self {
        Self { forward, right }
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.forward, self.right)
    }
}

/// A point in the world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Unit vector at `angle` radians counterclockwise from +x.
    pub fn from_angle(angle: f64) -> Self {
        Self::new(libm::cos(angle), libm::sin(angle))
    }

    /// Rotated a quarter turn counterclockwise.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }
}

impl Add for WorldPoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for WorldPoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for WorldPoint {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

/// Distance from `p` to the segment `a`-`b`, with the clamped segment
/// parameter of the closest point.
pub fn point_segment_distance(p: WorldPoint, a: WorldPoint, b: WorldPoint) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((a + ab * t).distance(p), t)
}

/// Intersection parameters `(t, u)` of segments `p0`-`p1` and `q0`-`q1`, each
/// in `[0, 1]`, or `None` when they do not cross (parallel segments never
/// count as crossing).
pub fn segment_intersection(
    p0: WorldPoint,
    p1: WorldPoint,
    q0: WorldPoint,
    q1: WorldPoint,
) -> Option<(f64, f64)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let qp = q0 - p0;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some((t, u))
}
