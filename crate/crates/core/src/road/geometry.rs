use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::RoadError;

/// Wraps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    if !angle.is_finite() {
        return angle;
    }
    let mut a = (angle + PI).rem_euclid(TAU) - PI;
    if a <= -PI {
        a += TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

/// Planar pose; heading is CCW from +x and kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_angle(heading) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Unit normal pointing to the left of the heading.
    pub fn left_normal(&self) -> Vec2 {
        Vec2::new(-self.heading.sin(), self.heading.cos())
    }

    /// Point displaced `offset` meters along the left normal (negative = right).
    pub fn lateral(&self, offset: f64) -> Vec2 {
        let (s, c) = self.heading.sin_cos();
        Vec2::new(self.x - offset * s, self.y + offset * c)
    }

    /// Mirror image across the x-axis.
    pub fn reflected(&self) -> Pose2D {
        Pose2D { x: self.x, y: -self.y, heading: normalize_angle(-self.heading) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Line,
    Arc,
}

/// One planView primitive. Construct through [`GeomSegment::line`] or
/// [`GeomSegment::arc`] so the kind/curvature invariants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeomSegment {
    kind: SegmentKind,
    start: Pose2D,
    length: f64,
    curvature: f64,
}

impl GeomSegment {
    pub fn line(start: Pose2D, length: f64) -> Result<Self, RoadError> {
        check_length(length)?;
        Ok(Self { kind: SegmentKind::Line, start: Pose2D::new(start.x, start.y, start.heading), length, curvature: 0.0 })
    }

    pub fn arc(start: Pose2D, length: f64, curvature: f64) -> Result<Self, RoadError> {
        check_length(length)?;
        if !curvature.is_finite() || curvature == 0.0 {
            return Err(RoadError::InvalidSegment(format!("arc curvature must be finite and non-zero, got {curvature}")));
        }
        Ok(Self { kind: SegmentKind::Arc, start: Pose2D::new(start.x, start.y, start.heading), length, curvature })
    }

    pub fn kind(&self) -> SegmentKind {
        self.kind
    }

    pub fn start(&self) -> Pose2D {
        self.start
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn end_pose(&self) -> Pose2D {
        self.pose_at(self.length)
    }

    /// Pose at arc length `ds` from the segment start (not clamped).
    pub fn pose_at(&self, ds: f64) -> Pose2D {
        let p = self.start;
        match self.kind {
            SegmentKind::Line => {
                let (s, c) = p.heading.sin_cos();
                Pose2D::new(p.x + ds * c, p.y + ds * s, p.heading)
            }
            SegmentKind::Arc => {
                // chord form stays well conditioned for small curvature
                let turn = self.curvature * ds;
                let chord = 2.0 * (0.5 * turn).sin() / self.curvature;
                let (s, c) = (p.heading + 0.5 * turn).sin_cos();
                Pose2D::new(p.x + chord * c, p.y + chord * s, p.heading + turn)
            }
        }
    }

    pub fn reflected(&self) -> GeomSegment {
        GeomSegment { kind: self.kind, start: self.start.reflected(), length: self.length, curvature: -self.curvature }
    }
}

fn check_length(length: f64) -> Result<(), RoadError> {
    if !(length.is_finite() && length > 0.0) {
        return Err(RoadError::InvalidSegment(format!("segment length must be positive, got {length}")));
    }
    Ok(())
}

/// Free-function form of [`GeomSegment::end_pose`].
pub fn segment_end_pose(seg: &GeomSegment) -> Pose2D {
    seg.end_pose()
}
