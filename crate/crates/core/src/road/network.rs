use serde::{Deserialize, Serialize};

use super::geometry::{GeomSegment, Pose2D, Vec2};
use super::RoadError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContactPoint {
    Start,
    End,
}

impl ContactPoint {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactPoint::Start => "start",
            ContactPoint::End => "end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementType {
    Road,
    Junction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoadLink {
    pub element_type: ElementType,
    pub element_id: String,
    /// Only meaningful for road links.
    pub contact_point: Option<ContactPoint>,
}

impl RoadLink {
    pub fn road(id: impl Into<String>, contact_point: ContactPoint) -> Self {
        Self { element_type: ElementType::Road, element_id: id.into(), contact_point: Some(contact_point) }
    }

    pub fn junction(id: impl Into<String>) -> Self {
        Self { element_type: ElementType::Junction, element_id: id.into(), contact_point: None }
    }
}

/// Which side of the road traffic keeps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TrafficRule {
    #[default]
    RightHand,
    LeftHand,
}

impl TrafficRule {
    /// Lane id whose traffic moves along the reference line direction.
    pub fn forward_lane(self) -> i32 {
        match self {
            TrafficRule::RightHand => -1,
            TrafficRule::LeftHand => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            TrafficRule::RightHand => TrafficRule::LeftHand,
            TrafficRule::LeftHand => TrafficRule::RightHand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaneSide {
    /// Lane +1.
    Left,
    /// Lane −1.
    Right,
}

impl LaneSide {
    pub fn from_lane_id(id: i32) -> Option<Self> {
        match id {
            1 => Some(LaneSide::Left),
            -1 => Some(LaneSide::Right),
            _ => None,
        }
    }

    pub fn lane_id(self) -> i32 {
        match self {
            LaneSide::Left => 1,
            LaneSide::Right => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.lane_id() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: String,
    pub segments: Vec<GeomSegment>,
    /// Width of each of the two driving lanes.
    pub lane_width: f64,
    pub predecessor: Option<RoadLink>,
    pub successor: Option<RoadLink>,
    /// Set for connecting roads inside a junction.
    pub junction: Option<String>,
    pub rule: TrafficRule,
}

impl Road {
    /// Builds a road by chaining `(length, curvature)` pieces from `start`;
    /// zero curvature yields a line.
    pub fn from_pieces(id: impl Into<String>, start: Pose2D, pieces: &[(f64, f64)], lane_width: f64) -> Result<Self, RoadError> {
        let mut segments = Vec::with_capacity(pieces.len());
        let mut pose = start;
        for &(length, curvature) in pieces {
            let seg = if curvature == 0.0 { GeomSegment::line(pose, length)? } else { GeomSegment::arc(pose, length, curvature)? };
            pose = seg.end_pose();
            segments.push(seg);
        }
        Ok(Road {
            id: id.into(),
            segments,
            lane_width,
            predecessor: None,
            successor: None,
            junction: None,
            rule: TrafficRule::RightHand,
        })
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(GeomSegment::length).sum()
    }

    pub fn start_pose(&self) -> Pose2D {
        self.segments.first().map(GeomSegment::start).unwrap_or_default()
    }

    pub fn end_pose(&self) -> Pose2D {
        self.segments.last().map(GeomSegment::end_pose).unwrap_or_default()
    }

    pub fn contact_pose(&self, contact: ContactPoint) -> Pose2D {
        match contact {
            ContactPoint::Start => self.start_pose(),
            ContactPoint::End => self.end_pose(),
        }
    }

    /// Segment index and local offset for reference-line coordinate `s`
    /// (clamped into the road).
    fn locate(&self, s: f64) -> (usize, f64) {
        let mut acc = 0.0;
        let last = self.segments.len().saturating_sub(1);
        for (i, seg) in self.segments.iter().enumerate() {
            if s < acc + seg.length() || i == last {
                return (i, (s - acc).clamp(0.0, seg.length()));
            }
            acc += seg.length();
        }
        (0, 0.0)
    }

    pub fn pose_at(&self, s: f64) -> Pose2D {
        let (i, ds) = self.locate(s);
        self.segments[i].pose_at(ds)
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        let (i, _) = self.locate(s);
        self.segments[i].curvature()
    }

    /// Lane-center point of lane `lane_id` (±1) at reference coordinate `s`.
    pub fn lane_center(&self, lane_id: i32, s: f64) -> Vec2 {
        self.pose_at(s).lateral(lane_id.signum() as f64 * 0.5 * self.lane_width)
    }

    pub fn reflected(&self) -> Road {
        Road { segments: self.segments.iter().map(GeomSegment::reflected).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneLink {
    pub from: i32,
    pub to: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionConnection {
    pub id: String,
    pub incoming_road: String,
    pub connecting_road: String,
    pub outgoing_road: String,
    /// End of the connecting road attached to the incoming road.
    pub contact_point: ContactPoint,
    pub lane_link: LaneLink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub id: String,
    pub incoming_road_ids: Vec<String>,
    pub connections: Vec<JunctionConnection>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub roads: Vec<Road>,
    pub junctions: Vec<Junction>,
}

impl RoadNetwork {
    pub fn road(&self, id: &str) -> Option<&Road> {
        self.roads.iter().find(|r| r.id == id)
    }

    pub fn junction(&self, id: &str) -> Option<&Junction> {
        self.junctions.iter().find(|j| j.id == id)
    }

    pub fn total_length(&self) -> f64 {
        self.roads.iter().map(Road::length).sum()
    }

    /// Geometric mirror across the x-axis; topology and traffic rules kept.
    pub fn reflected(&self) -> RoadNetwork {
        RoadNetwork { roads: self.roads.iter().map(Road::reflected).collect(), junctions: self.junctions.clone() }
    }

    pub fn with_traffic_rule(mut self, rule: TrafficRule) -> RoadNetwork {
        for road in &mut self.roads {
            road.rule = rule;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterlineSample {
    pub s: f64,
    pub pose: Pose2D,
    pub curvature: f64,
}

/// Reference-line coordinates `0, ds, 2ds, …` plus the exact road end.
pub fn sample_stations(total: f64, ds: f64) -> Vec<f64> {
    assert!(ds > 0.0, "sampling step must be positive");
    let n = (total / ds).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|k| k as f64 * ds).filter(|&s| s <= total).collect();
    // a station within rounding noise of the end is replaced by the end itself
    while let Some(&last) = out.last() {
        if out.len() > 1 && total - last < 1e-9 * total.max(1.0) {
            out.pop();
        } else {
            break;
        }
    }
    if out.last().is_none_or(|&last| last < total) {
        out.push(total);
    }
    out
}

pub fn sample_centerline(road: &Road, ds: f64) -> Vec<CenterlineSample> {
    sample_stations(road.length(), ds)
        .into_iter()
        .map(|s| CenterlineSample { s, pose: road.pose_at(s), curvature: road.curvature_at(s) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneBoundaries {
    /// The road reference line.
    pub inner: Vec<Vec2>,
    pub outer: Vec<Vec2>,
}

/// Signed lateral offsets (left positive) must not collapse any arc to a
/// non-positive radius.
pub fn check_offset(road: &Road, offset: f64) -> Result<(), RoadError> {
    for seg in &road.segments {
        if 1.0 - seg.curvature() * offset <= 0.0 {
            return Err(RoadError::DegenerateGeometry(format!(
                "road {}: offset {offset} m collapses arc of radius {} m",
                road.id,
                1.0 / seg.curvature().abs()
            )));
        }
    }
    Ok(())
}

pub fn lane_boundaries(road: &Road, side: LaneSide, ds: f64) -> Result<LaneBoundaries, RoadError> {
    if !(ds > 0.0) {
        return Err(RoadError::InvalidParameter(format!("sampling step must be positive, got {ds}")));
    }
    let offset = side.sign() * road.lane_width;
    check_offset(road, offset)?;
    let samples = sample_centerline(road, ds);
    Ok(LaneBoundaries {
        inner: samples.iter().map(|c| c.pose.position()).collect(),
        outer: samples.iter().map(|c| c.pose.lateral(offset)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn straight(len: f64, width: f64) -> Road {
        Road::from_pieces("1", Pose2D::default(), &[(len, 0.0)], width).unwrap()
    }

    #[test]
    fn stations_include_end_once() {
        assert_eq!(sample_stations(10.0, 5.0), vec![0.0, 5.0, 10.0]);
        assert_eq!(sample_stations(10.5, 5.0), vec![0.0, 5.0, 10.0, 10.5]);
        assert_eq!(sample_stations(0.3, 1.0), vec![0.0, 0.3]);
        let s = sample_stations(0.3 * 3.0, 0.3);
        assert_eq!(s.len(), 4);
        assert_eq!(*s.last().unwrap(), 0.3 * 3.0);
    }

    #[test]
    fn sample_straight_line() {
        let samples = sample_centerline(&straight(10.0, 3.5), 5.0);
        let s: Vec<f64> = samples.iter().map(|c| c.s).collect();
        assert_eq!(s, vec![0.0, 5.0, 10.0]);
        assert_abs_diff_eq!(samples[2].pose.x, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn quarter_circle_midpoint() {
        let len = FRAC_PI_2 * 100.0;
        let road = Road::from_pieces("1", Pose2D::default(), &[(len, 0.01)], 3.5).unwrap();
        let samples = sample_centerline(&road, len / 2.0);
        assert_eq!(samples.len(), 3);
        let mid = samples[1].pose;
        assert_abs_diff_eq!(mid.x, 100.0 * FRAC_PI_4.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(mid.y, 100.0 - 100.0 * FRAC_PI_4.cos(), epsilon = 1e-9);
        assert_abs_diff_eq!(mid.heading, FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn joint_sampled_once_and_matches_per_segment_oracle() {
        let road = Road::from_pieces("1", Pose2D::default(), &[(10.0, 0.0), (20.0, 0.02)], 3.5).unwrap();
        let samples = sample_centerline(&road, 2.5);
        let joints = samples.iter().filter(|c| (c.s - 10.0).abs() < 1e-12).count();
        assert_eq!(joints, 1);
        // independent oracle: evaluate each segment on its own local coordinate
        for c in &samples {
            let (seg, local) = if c.s < 10.0 { (&road.segments[0], c.s) } else { (&road.segments[1], c.s - 10.0) };
            let p = seg.pose_at(local);
            assert_abs_diff_eq!(p.x, c.pose.x, epsilon = 1e-12);
            assert_abs_diff_eq!(p.y, c.pose.y, epsilon = 1e-12);
            assert_eq!(c.curvature, seg.curvature());
        }
    }

    #[test]
    fn right_lane_of_straight_road() {
        let b = lane_boundaries(&straight(20.0, 3.5), LaneSide::Right, 1.0).unwrap();
        assert_eq!(b.inner.len(), b.outer.len());
        for p in &b.outer {
            assert_abs_diff_eq!(p.y, -3.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn left_lane_of_left_arc_is_concentric() {
        let road = Road::from_pieces("1", Pose2D::default(), &[(FRAC_PI_2 * 100.0, 0.01)], 4.0).unwrap();
        let b = lane_boundaries(&road, LaneSide::Left, 1.0).unwrap();
        let center = Vec2::new(0.0, 100.0);
        for p in &b.outer {
            assert_abs_diff_eq!(p.distance(center), 96.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn lane_wider_than_radius_is_degenerate() {
        let road = Road::from_pieces("7", Pose2D::default(), &[(5.0, 1.0 / 3.0)], 4.0).unwrap();
        let err = lane_boundaries(&road, LaneSide::Left, 1.0).unwrap_err();
        assert!(matches!(err, RoadError::DegenerateGeometry(ref m) if m.contains("road 7")));
        assert!(lane_boundaries(&road, LaneSide::Right, 1.0).is_ok());
    }
}
